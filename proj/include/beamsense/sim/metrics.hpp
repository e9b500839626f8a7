#pragma once

// Summary statistics over per-episode throughput.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "beamsense/error.hpp"
#include "beamsense/random.hpp"

namespace beamsense::sim {

inline double mean(std::span<const double> xs) {
  require(!xs.empty(), ErrorKind::kInvalidArgument, "mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

struct CdfPoint {
  double x = 0.0;
  double cdf = 0.0;  // fraction of samples <= x
};

// Empirical CDF sampled on {0, step, 2 step, ..., 1}.
inline std::vector<CdfPoint> cdf_table(std::span<const double> xs, double step = 0.01) {
  require(!xs.empty(), ErrorKind::kInvalidArgument, "cdf of an empty sample");
  require(step > 0.0 && step <= 1.0, ErrorKind::kInvalidArgument, "cdf step must be in (0, 1]");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const auto points = static_cast<std::size_t>(std::llround(1.0 / step));
  std::vector<CdfPoint> out;
  for (std::size_t k = 0; k <= points; ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(points);
    // Small slack so values written as k/points land in their own bin.
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), x + 1e-12) - sorted.begin();
    out.push_back({x, static_cast<double>(count) / static_cast<double>(sorted.size())});
  }
  return out;
}

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Percentile bootstrap interval of the mean.
inline Interval bootstrap_ci(std::span<const double> xs, double level = 0.95, std::size_t resamples = 2000,
                             std::uint64_t seed = 0x5eed) {
  require(!xs.empty(), ErrorKind::kInvalidArgument, "bootstrap of an empty sample");
  require(level > 0.0 && level < 1.0 && resamples >= 1, ErrorKind::kInvalidArgument, "bad bootstrap parameters");
  Rng rng(seed);
  const int n = static_cast<int>(xs.size());
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += xs[static_cast<std::size_t>(uniform_int(rng, 0, n - 1))];
    m = s / n;
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::clamp(std::floor(q * static_cast<double>(resamples)), 0.0,
                                                         static_cast<double>(resamples - 1)));
    return means[idx];
  };
  return {at(alpha), at(1.0 - alpha)};
}

// Mean of a - b over paired samples.
inline double paired_mean_difference(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), ErrorKind::kInvalidArgument, "paired samples must align");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] - b[i];
  return s / static_cast<double>(a.size());
}

// a is ahead of b when the bootstrap intervals are disjoint or the paired
// mean difference exceeds `margin`.
inline bool strictly_ahead(std::span<const double> a, std::span<const double> b, double margin = 0.01) {
  const auto ia = bootstrap_ci(a);
  const auto ib = bootstrap_ci(b);
  return ia.low > ib.high || paired_mean_difference(a, b) > margin;
}

}  // namespace beamsense::sim
