#pragma once

// Street-grid scenario: two horizontal and two vertical streets crossing in
// four intersections, a BS in the middle of the square area, and vehicles that
// drive along the streets, pick a new arm uniformly at every crossing and
// U-turn at the area boundary.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "beamsense/array_geometry.hpp"
#include "beamsense/error.hpp"
#include "beamsense/random.hpp"
#include "beamsense/types.hpp"

namespace beamsense {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

enum class Heading : int { kEast = 0, kNorth = 1, kWest = 2, kSouth = 3 };

inline Vec2 unit(Heading h) {
  switch (h) {
    case Heading::kEast: return {1.0, 0.0};
    case Heading::kNorth: return {0.0, 1.0};
    case Heading::kWest: return {-1.0, 0.0};
    case Heading::kSouth: return {0.0, -1.0};
  }
  return {};
}

inline Heading reverse(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 2) % 4); }
inline bool is_horizontal(Heading h) { return h == Heading::kEast || h == Heading::kWest; }

struct StreetGrid {
  double half_extent = 50.0;     // area is [-half_extent, half_extent]^2
  double street_offset = 25.0;   // streets at x = +-offset and y = +-offset
  Vec2 bs_position{0.0, 0.0};
  double boresight_rad = kPi / 2.0;  // broadside direction in the world frame

  std::array<double, 2> street_coords() const { return {-street_offset, street_offset}; }

  // Unit vector along the array axis; sin(physical AoD) is the projection of
  // the line of sight onto it.
  Vec2 array_axis() const { return {std::sin(boresight_rad), -std::cos(boresight_rad)}; }

  bool on_street(Vec2 p, double tol = 1e-9) const {
    if (std::abs(p.x) > half_extent + tol || std::abs(p.y) > half_extent + tol) return false;
    for (double c : street_coords()) {
      if (std::abs(p.x - c) <= tol || std::abs(p.y - c) <= tol) return true;
    }
    return false;
  }

  double diagonal() const { return std::sqrt(2.0) * 2.0 * half_extent; }

  bool operator==(const StreetGrid&) const = default;
};

struct VehicleState {
  Vec2 position;
  Heading heading = Heading::kEast;
  double speed = 0.0;  // m/s
};

struct GeometrySnapshot {
  double distance = 0.0;       // m
  double physical_aod = 0.0;   // rad, [-pi/2, pi/2]
  double aod = 0.0;            // normalized
  double radial_speed = 0.0;   // m/s, positive when receding
  double doppler = 0.0;        // Hz, two-way
};

inline GeometrySnapshot geometry(const VehicleState& v, const StreetGrid& grid, double carrier_hz) {
  const Vec2 los = v.position - grid.bs_position;
  const double d = norm(los);
  if (!(d > 1e-9)) throw Error(ErrorKind::kDegenerateGeometry, "vehicle located at the BS");
  const Vec2 dir = (1.0 / d) * los;
  GeometrySnapshot g;
  g.distance = d;
  g.physical_aod = std::asin(std::clamp(dot(dir, grid.array_axis()), -1.0, 1.0));
  g.aod = normalized_from_physical(g.physical_aod);
  g.radial_speed = v.speed * dot(dir, unit(v.heading));
  g.doppler = 2.0 * g.radial_speed * carrier_hz / kSpeedOfLight;
  return g;
}

namespace detail {

// Distance along the heading to the next intersection strictly ahead, or to
// the boundary; returns which one is hit first.
struct NextEvent {
  double distance;
  bool boundary;
};

inline NextEvent next_event(const VehicleState& v, const StreetGrid& grid) {
  const bool horiz = is_horizontal(v.heading);
  const double pos = horiz ? v.position.x : v.position.y;
  const double dir = horiz ? unit(v.heading).x : unit(v.heading).y;
  const double cross = horiz ? v.position.y : v.position.x;
  constexpr double kEps = 1e-9;
  double best = dir > 0 ? grid.half_extent - pos : pos + grid.half_extent;
  bool boundary = true;
  // Only a street-aligned vehicle meets intersections.
  bool on_cross_street = false;
  for (double c : grid.street_coords()) on_cross_street |= std::abs(cross - c) <= kEps;
  if (on_cross_street) {
    for (double c : grid.street_coords()) {
      const double ahead = (c - pos) * dir;
      if (ahead > kEps && ahead < best) {
        best = ahead;
        boundary = false;
      }
    }
  }
  return {std::max(best, 0.0), boundary};
}

inline void snap_to_street(VehicleState& v, const StreetGrid& grid) {
  for (double c : grid.street_coords()) {
    if (std::abs(v.position.x - c) < 1e-7) v.position.x = c;
    if (std::abs(v.position.y - c) < 1e-7) v.position.y = c;
  }
  v.position.x = std::clamp(v.position.x, -grid.half_extent, grid.half_extent);
  v.position.y = std::clamp(v.position.y, -grid.half_extent, grid.half_extent);
}

}  // namespace detail

// Exit arm at an intersection: straight, left or right with equal probability
// (the arm the vehicle arrived from is excluded).
inline Heading turn_at_intersection(Heading arriving, Rng& rng) {
  const int k = uniform_int(rng, 0, 2);
  const int offsets[3] = {0, 1, 3};  // straight, left, right
  return static_cast<Heading>((static_cast<int>(arriving) + offsets[k]) % 4);
}

inline VehicleState step_vehicle(VehicleState v, double dt, const StreetGrid& grid, Rng& rng) {
  require(dt >= 0.0, ErrorKind::kInvalidArgument, "step_vehicle: dt must be >= 0");
  double remaining = v.speed * dt;
  // Bounded loop: each iteration consumes a segment or ends the move.
  for (int guard = 0; remaining > 0.0 && guard < 1000; ++guard) {
    const auto ev = detail::next_event(v, grid);
    if (remaining < ev.distance) {
      v.position = v.position + remaining * unit(v.heading);
      remaining = 0.0;
      break;
    }
    v.position = v.position + ev.distance * unit(v.heading);
    remaining -= ev.distance;
    detail::snap_to_street(v, grid);
    v.heading = ev.boundary ? reverse(v.heading) : turn_at_intersection(v.heading, rng);
  }
  detail::snap_to_street(v, grid);
  return v;
}

// Uniform point on the street network with a random travel direction.
inline VehicleState random_street_point(const StreetGrid& grid, Rng& rng) {
  const int street = uniform_int(rng, 0, 3);
  const double along = uniform(rng, -grid.half_extent, grid.half_extent);
  const double c = grid.street_coords()[static_cast<std::size_t>(street % 2)];
  VehicleState v;
  const bool forward = uniform_int(rng, 0, 1) == 1;
  if (street < 2) {  // horizontal street y = c
    v.position = {along, c};
    v.heading = forward ? Heading::kEast : Heading::kWest;
  } else {
    v.position = {c, along};
    v.heading = forward ? Heading::kNorth : Heading::kSouth;
  }
  return v;
}

// Places u vehicles with pairwise normalized-angle separation of at least
// `min_separation`. Speeds are left at zero; the frame initializer draws them.
inline std::vector<VehicleState> spawn_vehicles(const StreetGrid& grid, std::size_t u, double min_separation,
                                                double carrier_hz, Rng& rng, int max_attempts = 10000) {
  require(u >= 1, ErrorKind::kInvalidArgument, "spawn_vehicles: need at least one vehicle");
  std::vector<VehicleState> out;
  std::vector<double> angles;
  for (int attempt = 0; attempt < max_attempts && out.size() < u; ++attempt) {
    VehicleState cand = random_street_point(grid, rng);
    if (norm(cand.position - grid.bs_position) < 1e-6) continue;
    const double phi = geometry(cand, grid, carrier_hz).aod;
    bool ok = true;
    for (double a : angles) ok &= angle_distance(a, phi) >= min_separation;
    if (!ok) continue;
    out.push_back(cand);
    angles.push_back(phi);
  }
  if (out.size() < u) throw Error(ErrorKind::kSpawnFailure, "could not place vehicles with the requested separation");
  return out;
}

}  // namespace beamsense
