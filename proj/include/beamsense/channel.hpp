#pragma once

// Downlink channel: a deterministic line-of-sight path plus Rician diffuse
// paths, the per-user SINR and the rate-threshold packet criterion.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "beamsense/array_geometry.hpp"
#include "beamsense/error.hpp"
#include "beamsense/mobility.hpp"
#include "beamsense/random.hpp"
#include "beamsense/types.hpp"

namespace beamsense {

struct LinkBudget {
  double total_power_w = dbm_to_watts(15.0);
  double noise_power_w = dbm_to_watts(-109.0);
  double rate_threshold = 4.0;  // bits/s/Hz

  void validate() const {
    require(total_power_w > 0.0 && noise_power_w > 0.0 && rate_threshold >= 0.0, ErrorKind::kInvalidArgument,
            "link budget values must be positive");
  }

  bool operator==(const LinkBudget&) const = default;
};

struct ChannelParams {
  std::size_t n_antennas = 32;
  double carrier_hz = 28e9;
  double rician_k = db_to_linear(10.0);  // linear; +inf means LoS only
  std::size_t n_paths = 3;               // one LoS + (n_paths - 1) diffuse

  bool operator==(const ChannelParams&) const = default;
};

struct PathComponent {
  Complex gain;
  double aod = 0.0;
};

struct ChannelRealization {
  CVector h;
  std::vector<PathComponent> paths;  // paths[0] is the LoS path
  double rician_k = 0.0;
};

inline double wavelength(double carrier_hz) { return kSpeedOfLight / carrier_hz; }

// |a_1| = sqrt(N) v_c / (4 pi d f_c)
inline double los_amplitude(double distance, std::size_t n_antennas, double carrier_hz) {
  return std::sqrt(static_cast<double>(n_antennas)) * wavelength(carrier_hz) / (4.0 * kPi * distance);
}

inline ChannelRealization realize_channel(const GeometrySnapshot& geom, const ChannelParams& params, Rng& rng) {
  require(params.n_paths >= 1, ErrorKind::kInvalidArgument, "realize_channel: need at least one path");
  require(geom.distance > 0.0, ErrorKind::kDegenerateGeometry, "realize_channel: zero distance");
  const std::size_t n = params.n_antennas;
  ChannelRealization ch;
  ch.rician_k = params.rician_k;
  const double amp = los_amplitude(geom.distance, n, params.carrier_hz);
  // Phase advances by 2 pi per wavelength of range.
  const double phase = kTwoPi * std::fmod(geom.distance / wavelength(params.carrier_hz), 1.0);
  ch.paths.push_back({std::polar(amp, phase), geom.aod});
  ch.h = ch.paths.front().gain * steering_vector(geom.aod, n);
  const std::size_t diffuse = params.n_paths - 1;
  // Draws are made even for K = inf so every realization consumes the stream
  // identically.
  const double nlos_total = std::isinf(params.rician_k) ? 0.0 : amp * amp / params.rician_k;
  for (std::size_t l = 0; l < diffuse; ++l) {
    const Complex g = complex_normal(rng, 1.0) * std::sqrt(nlos_total / static_cast<double>(diffuse));
    const double aod = uniform(rng, -kPi, kPi);
    ch.paths.push_back({g, aod});
    ch.h += g * steering_vector(aod, n);
  }
  return ch;
}

// gamma_u = P_u |h_u^H f_u|^2 / (sum_{i != u} P_i |h_u^H f_i|^2 + sigma^2)
inline double sinr(std::size_t u, std::span<const ChannelRealization> channels, std::span<const CompositeBeam> beams,
                   std::span<const double> powers, double noise_power) {
  require(u < channels.size() && channels.size() == beams.size() && beams.size() == powers.size(),
          ErrorKind::kInvalidArgument, "sinr: inconsistent user counts");
  const CVector& h = channels[u].h;
  double interference = 0.0;
  for (std::size_t i = 0; i < beams.size(); ++i) {
    if (i == u || powers[i] <= 0.0 || beams[i].empty()) continue;
    interference += powers[i] * std::norm(h.dot(beams[i].weight()));
  }
  if (powers[u] <= 0.0 || beams[u].empty()) return 0.0;
  const double signal = powers[u] * std::norm(h.dot(beams[u].weight()));
  return signal / (interference + noise_power);
}

inline bool packet_success(double gamma, double rate_threshold) { return std::log2(1.0 + gamma) >= rate_threshold; }

}  // namespace beamsense
