#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "beamsense/channel.hpp"

namespace beamsense {
namespace {

GeometrySnapshot at(double distance, double aod) {
  GeometrySnapshot g;
  g.distance = distance;
  g.aod = aod;
  return g;
}

TEST(Channel, LosOnlyHasSinglePath) {
  ChannelParams p;
  p.rician_k = std::numeric_limits<double>::infinity();
  Rng rng(1);
  const auto ch = realize_channel(at(30.0, 0.4), p, rng);
  EXPECT_NEAR(ch.h.norm(), los_amplitude(30.0, 32, 28e9), 1e-15);
}

TEST(Channel, MeanPowerIsLosPlusDiffuseShare) {
  ChannelParams p;
  Rng rng(2);
  double acc = 0.0;
  const int trials = 4000;
  for (int i = 0; i < trials; ++i) acc += realize_channel(at(20.0, -0.8), p, rng).h.squaredNorm();
  const double a = los_amplitude(20.0, 32, 28e9);
  // Diffuse paths carry |a_1|^2 / K on top of the LoS power.
  EXPECT_NEAR(acc / trials / (a * a), 1.0 + 1.0 / p.rician_k, 0.05);
}

TEST(Sinr, InterferenceLowersSinr) {
  ChannelParams p;
  p.rician_k = std::numeric_limits<double>::infinity();
  Rng rng(3);
  const Codebook cb(32);
  // Off-grid so the neighbouring codewords do not null the interference.
  const double off = 0.4 * cb.grid_step();
  const std::vector<ChannelRealization> chans{realize_channel(at(30.0, cb.angle(10) + off), p, rng),
                                              realize_channel(at(30.0, cb.angle(12)), p, rng)};
  const double noise = dbm_to_watts(-109.0);
  const std::vector<CompositeBeam> beams{CompositeBeam::single(cb, 10), CompositeBeam(cb, {11, 12, 13})};
  const std::vector<double> alone{0.01, 0.0};
  const std::vector<double> both{0.01, 0.01};
  EXPECT_GT(sinr(0, chans, beams, alone, noise), sinr(0, chans, beams, both, noise));
}

TEST(Sinr, OrthogonalCodewordsDoNotInterfereLos) {
  ChannelParams p;
  p.rician_k = std::numeric_limits<double>::infinity();
  Rng rng(4);
  const Codebook cb(32);
  const std::vector<ChannelRealization> chans{realize_channel(at(30.0, cb.angle(10)), p, rng),
                                              realize_channel(at(30.0, cb.angle(20)), p, rng)};
  const std::vector<CompositeBeam> beams{CompositeBeam::single(cb, 10), CompositeBeam::single(cb, 20)};
  const double noise = dbm_to_watts(-109.0);
  const std::vector<double> alone{0.01, 0.0};
  const std::vector<double> both{0.01, 0.01};
  EXPECT_NEAR(sinr(0, chans, beams, both, noise) / sinr(0, chans, beams, alone, noise), 1.0, 1e-9);
}

TEST(PacketSuccess, ThresholdIsInclusive) {
  EXPECT_TRUE(packet_success(15.0, 4.0));
  EXPECT_FALSE(packet_success(14.99, 4.0));
}

}  // namespace
}  // namespace beamsense
