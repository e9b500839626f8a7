#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "beamsense/error.hpp"
#include "beamsense/random.hpp"
#include "beamsense/sim/environment.hpp"
#include "beamsense/sim/policy.hpp"

namespace beamsense::sim {

struct EpisodeResult {
  std::string policy;
  std::uint64_t seed = 0;
  int total_packets = 0;
  int delivered = 0;
  int remaining = 0;  // discarded at frame end
  double thp = 0.0;
  double mean_sinr_db = std::numeric_limits<double>::quiet_NaN();  // over CU user-TTIs
  double sensing_fraction = 0.0;                                    // SU user-TTIs / (U N)
  double total_reward = 0.0;
  std::vector<TtiRecord> trace;
};

struct EpisodeOptions {
  bool keep_trace = true;
  const std::vector<double>* power_override = nullptr;
  std::uint64_t spawn_seed = 0;
  bool pin_spawn = false;
};

inline EpisodeResult run_episode(Environment& env, Policy& policy, std::uint64_t seed, const EpisodeOptions& opt = {}) {
  env.reset(seed, opt.pin_spawn ? opt.spawn_seed : seed);
  policy.begin_episode(seed);
  EpisodeResult r;
  r.policy = policy.name();
  r.seed = seed;
  double sinr_db_sum = 0.0;
  std::size_t cu_slots = 0;
  std::size_t su_slots = 0;
  while (!env.done()) {
    BeamAssignment decision;
    try {
      decision = policy.decide(env.context(), env);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kPolicyFailure, "episode " + std::to_string(seed) + " aborted at TTI " +
                                                 std::to_string(env.context().tti) + ": " + e.what());
    }
    auto step = env.step(decision, opt.power_override);
    for (std::size_t u = 0; u < step.record.types.size(); ++u) {
      if (step.record.types[u] == UserType::kCommunication) {
        ++cu_slots;
        sinr_db_sum += 10.0 * std::log10(std::max(step.record.sinr[u], 1e-30));
      } else {
        ++su_slots;
      }
    }
    r.total_reward += step.reward;
    if (opt.keep_trace) r.trace.push_back(std::move(step.record));
  }
  r.total_packets = env.total_packets();
  r.delivered = env.delivered();
  r.remaining = env.remaining();
  r.thp = env.throughput();
  if (cu_slots > 0) r.mean_sinr_db = sinr_db_sum / static_cast<double>(cu_slots);
  r.sensing_fraction =
      static_cast<double>(su_slots) / static_cast<double>(env.config().ttis * env.config().users);
  if (r.delivered + r.remaining != r.total_packets) {
    throw Error(ErrorKind::kNumericFailure, "packet conservation violated");
  }
  return r;
}

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

// Seed of the i-th evaluation episode under a global seed. Every policy
// evaluated with the same global seed sees the same episodes.
inline std::uint64_t episode_seed(std::uint64_t global_seed, std::size_t index) {
  return derive_seed(global_seed, static_cast<std::uint64_t>(index));
}

struct EvaluationOptions {
  std::size_t episodes = 2000;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
};

// Runs the episodes on `jobs` threads, each with its own environment and
// policy instance. Results are stored by episode index, so the output does not
// depend on scheduling.
inline std::vector<EpisodeResult> evaluate(const FrameConfig& cfg, const PolicyFactory& factory,
                                           const EvaluationOptions& opt) {
  require(opt.episodes >= 1, ErrorKind::kInvalidArgument, "evaluate: episodes must be >= 1");
  std::vector<EpisodeResult> results(opt.episodes);
  const std::size_t jobs = std::clamp<std::size_t>(opt.jobs, 1, opt.episodes);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      Environment env(cfg);
      auto policy = factory();
      EpisodeOptions eo;
      eo.keep_trace = false;
      for (std::size_t i = next++; i < opt.episodes; i = next++) {
        results[i] = run_episode(env, *policy, episode_seed(opt.seed, i), eo);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = opt.episodes;
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace beamsense::sim
