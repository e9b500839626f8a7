#pragma once

#include <cstdint>
#include <random>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "beamsense/types.hpp"

namespace beamsense {

// Engine is the standardized mt19937_64; distributions come from Boost.Random,
// whose algorithms are fixed across platforms, so traces are reproducible
// byte for byte.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based seed expansion: seed of item `index` under `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

// Named sub-streams of one episode. Each stream is consumed at a rate that does
// not depend on policy decisions, so paired comparisons share realizations.
enum class Stream : std::uint64_t {
  kSpawn = 1,
  kMobility = 2,
  kChannel = 3,
  kEcho = 4,
  kBuffers = 5,
  kAgent = 6,
  kSpeed = 7,
};

inline Rng make_stream(std::uint64_t episode_seed, Stream stream) {
  return Rng(derive_seed(episode_seed, static_cast<std::uint64_t>(stream)));
}

inline double uniform01(Rng& rng) { return boost::random::uniform_01<double>{}(rng); }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) {
  return boost::random::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) {
  return boost::random::normal_distribution<double>(0.0, 1.0)(rng);
}

// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline Complex complex_normal(Rng& rng, double variance) {
  const double s = std::sqrt(variance / 2.0);
  boost::random::normal_distribution<double> n(0.0, s);
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline int binomial(Rng& rng, int trials, double p) {
  return boost::random::binomial_distribution<int, double>(trials, p)(rng);
}

}  // namespace beamsense
