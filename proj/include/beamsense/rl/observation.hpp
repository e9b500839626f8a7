#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "beamsense/error.hpp"
#include "beamsense/types.hpp"

namespace beamsense::rl {

// Scale constants applied to the raw state; kept with the checkpoint so the
// encoding can be reproduced elsewhere.
struct FeatureScaling {
  double total_packets_scale = 200.0;  // B_tot is divided by this
  double noise_power = 1.0;            // b features are log10(b / noise_power)
  double clip = 10.0;
};

inline constexpr std::size_t kHistoryLength = 3;

inline std::size_t observation_size(std::size_t users) { return 4 * users + 1; }

// Beamforming outputs of the last three completed TTIs, oldest first.
using BHistory = std::array<std::vector<double>, kHistoryLength>;

// [B_1/B_tot .. B_U/B_tot, B_tot/scale, log b(n-2), log b(n-1), log b(n)],
// log features clipped to [-clip, clip]; zero b maps to the floor.
inline RVector encode_state(std::span<const int> buffers, int total_packets, const BHistory& history,
                            const FeatureScaling& scaling) {
  const std::size_t users = buffers.size();
  require(total_packets > 0, ErrorKind::kInvalidArgument, "encode_state: B_tot must be positive");
  RVector s(static_cast<Eigen::Index>(observation_size(users)));
  Eigen::Index k = 0;
  for (int b : buffers) s[k++] = static_cast<double>(b) / static_cast<double>(total_packets);
  s[k++] = static_cast<double>(total_packets) / scaling.total_packets_scale;
  for (const auto& snapshot : history) {
    require(snapshot.size() == users, ErrorKind::kInvalidArgument, "encode_state: history width mismatch");
    for (double b : snapshot) {
      const double f = b > 0.0 ? std::log10(b / scaling.noise_power) : -scaling.clip;
      s[k++] = std::clamp(std::isfinite(f) ? f : -scaling.clip, -scaling.clip, scaling.clip);
    }
  }
  return s;
}

// r = (1 + exp((B_tot - sum B_u) / B_tot)) * sum_u lambda_u 1{log2(1 + gamma_u) > c}
inline double reward(std::span<const int> buffers, int total_packets, std::span<const int> lambdas,
                     std::span<const double> sinrs, double rate_threshold) {
  require(total_packets > 0, ErrorKind::kInvalidArgument, "reward: B_tot must be positive");
  int remaining = 0;
  for (int b : buffers) remaining += b;
  int hits = 0;
  for (std::size_t u = 0; u < lambdas.size(); ++u) {
    if (lambdas[u] == 1 && std::log2(1.0 + sinrs[u]) > rate_threshold) ++hits;
  }
  const double drive = 1.0 + std::exp(static_cast<double>(total_packets - remaining) / total_packets);
  return drive * hits;
}

}  // namespace beamsense::rl
