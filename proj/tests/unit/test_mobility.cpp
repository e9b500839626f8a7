#include <gtest/gtest.h>

#include <cmath>

#include "beamsense/mobility.hpp"

namespace beamsense {
namespace {

TEST(Mobility, StaysOnStreetsAndInsideGrid) {
  const StreetGrid grid;
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = random_street_point(grid, rng);
    v.speed = uniform(rng, 5.0, 40.0);
    for (int t = 0; t < 300; ++t) {
      v = step_vehicle(v, 0.01 * (1 + t % 7), grid, rng);
      ASSERT_TRUE(grid.on_street(v.position, 1e-6)) << v.position.x << ", " << v.position.y;
      ASSERT_LE(std::abs(v.position.x), grid.half_extent + 1e-9);
      ASSERT_LE(std::abs(v.position.y), grid.half_extent + 1e-9);
    }
  }
}

TEST(Mobility, StepCoversSpeedTimesDtOnStraightSegment) {
  const StreetGrid grid;
  Rng rng(1);
  VehicleState v;
  v.position = {-40.0, grid.street_coords()[0]};
  v.heading = Heading::kEast;
  v.speed = 20.0;
  const auto w = step_vehicle(v, 0.1, grid, rng);
  EXPECT_NEAR(w.position.x, -38.0, 1e-12);
  EXPECT_EQ(w.heading, Heading::kEast);
}

TEST(Mobility, ZeroDtIsIdentity) {
  const StreetGrid grid;
  Rng rng(2);
  auto v = random_street_point(grid, rng);
  v.speed = 10.0;
  const auto w = step_vehicle(v, 0.0, grid, rng);
  EXPECT_EQ(w.position, v.position);
}

TEST(Mobility, BoundaryReversesHeading) {
  const StreetGrid grid;
  Rng rng(3);
  VehicleState v;
  v.position = {grid.half_extent - 0.5, grid.street_coords()[1]};
  v.heading = Heading::kEast;
  v.speed = 10.0;
  const auto w = step_vehicle(v, 0.1, grid, rng);
  EXPECT_EQ(w.heading, Heading::kWest);
  EXPECT_NEAR(w.position.x, grid.half_extent - 0.5, 1e-9);
}

TEST(Geometry, DopplerSignFollowsRadialMotion) {
  const StreetGrid grid;
  VehicleState v;
  v.position = {10.0, grid.street_coords()[1]};
  v.heading = Heading::kEast;
  v.speed = 20.0;
  const auto g = geometry(v, grid, 28e9);
  EXPECT_GT(g.radial_speed, 0.0);
  EXPECT_NEAR(g.doppler, 2.0 * g.radial_speed * 28e9 / kSpeedOfLight, 1e-9);
  EXPECT_NEAR(g.aod, kPi * std::sin(g.physical_aod), 1e-12);
  v.heading = Heading::kWest;
  EXPECT_LT(geometry(v, grid, 28e9).doppler, 0.0);
}

TEST(Geometry, VehicleAtBaseStationIsDegenerate) {
  const StreetGrid grid;
  VehicleState v;
  v.position = grid.bs_position;
  EXPECT_THROW(geometry(v, grid, 28e9), Error);
}

TEST(Spawn, RespectsAngularSeparation) {
  const StreetGrid grid;
  Rng rng(4);
  const double sep = 2.0 * kTwoPi / 32.0;
  for (int t = 0; t < 100; ++t) {
    const auto vs = spawn_vehicles(grid, 3, sep, 28e9, rng);
    ASSERT_EQ(vs.size(), 3u);
    for (std::size_t i = 0; i < vs.size(); ++i) {
      for (std::size_t j = i + 1; j < vs.size(); ++j) {
        EXPECT_GE(angle_distance(geometry(vs[i], grid, 28e9).aod, geometry(vs[j], grid, 28e9).aod), sep);
      }
    }
  }
}

TEST(Spawn, ImpossibleSeparationFails) {
  const StreetGrid grid;
  Rng rng(5);
  EXPECT_THROW(spawn_vehicles(grid, 5, kPi, 28e9, rng, 200), Error);
}

}  // namespace
}  // namespace beamsense
