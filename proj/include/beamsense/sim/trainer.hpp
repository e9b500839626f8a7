#pragma once

// PPO training against the environment. Each training episode is one frame;
// initial positions cycle round-robin through a fixed number of spawn sets
// while buffers, speeds, fading and noise vary per episode.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "beamsense/error.hpp"
#include "beamsense/random.hpp"
#include "beamsense/rl/action_space.hpp"
#include "beamsense/rl/checkpoint.hpp"
#include "beamsense/rl/network.hpp"
#include "beamsense/rl/observation.hpp"
#include "beamsense/rl/ppo.hpp"
#include "beamsense/sim/environment.hpp"
#include "beamsense/sim/policy.hpp"

namespace beamsense::sim {

struct TrainingOptions {
  long steps = 100000;
  std::uint64_t seed = 1;
  std::size_t spawn_sets = 12;
  std::size_t hidden = 64;
  rl::PpoHyperparams hp;
};

struct UpdateRow {
  std::size_t update = 0;
  long steps = 0;          // environment steps so far
  std::size_t episodes = 0;  // completed so far
  double mean_reward = 0.0;  // per step, this rollout
  double mean_episode_thp = std::numeric_limits<double>::quiet_NaN();  // episodes finished in this rollout
  rl::UpdateDiagnostics diag;
};

struct TrainingResult {
  rl::Checkpoint checkpoint;
  std::vector<UpdateRow> curve;
  bool aborted = false;
  std::string message;
};

namespace detail {
inline constexpr std::uint64_t kInitSalt = 0x696e6974;     // network initialization
inline constexpr std::uint64_t kEpisodeSalt = 0x65706973;  // training episode seeds
inline constexpr std::uint64_t kSpawnSalt = 0x7370776e;    // fixed spawn sets
inline constexpr std::uint64_t kUpdateSalt = 0x75706474;   // minibatch shuffling
}  // namespace detail

inline std::uint64_t training_spawn_seed(std::uint64_t seed, std::size_t set) {
  return derive_seed(derive_seed(seed, detail::kSpawnSalt), set);
}

inline TrainingResult train_ppo(const FrameConfig& cfg, const TrainingOptions& opt,
                                const std::function<void(const UpdateRow&)>& on_update = {}) {
  require(opt.steps >= 0, ErrorKind::kInvalidArgument, "training steps must be >= 0");
  require(opt.spawn_sets >= 1, ErrorKind::kInvalidArgument, "need at least one spawn set");
  opt.hp.validate();
  Environment env(cfg);
  const rl::NetworkShape shape{rl::observation_size(cfg.users), opt.hidden, rl::action_space_size(cfg.users)};
  auto net = std::make_shared<rl::ActorCritic>(shape);
  Rng init_rng(derive_seed(opt.seed, detail::kInitSalt));
  net->initialize(init_rng);
  rl::Adam adam(net->size(), opt.hp.learning_rate);
  Rng update_rng(derive_seed(opt.seed, detail::kUpdateSalt));
  PpoPolicy agent(net, false);

  TrainingResult result;
  result.checkpoint.hyperparams = opt.hp;
  result.checkpoint.scaling = env.scaling();

  std::size_t episode = 0;
  auto start_episode = [&] {
    const std::uint64_t es = derive_seed(derive_seed(opt.seed, detail::kEpisodeSalt), episode);
    env.reset(es, training_spawn_seed(opt.seed, episode % opt.spawn_sets));
    agent.begin_episode(es);
  };
  if (opt.steps > 0) start_episode();

  long step = 0;
  rl::RolloutBuffer buf;
  while (step < opt.steps) {
    buf.clear();
    const long n = std::min<long>(static_cast<long>(opt.hp.rollout_steps), opt.steps - step);
    double thp_sum = 0.0;
    std::size_t finished = 0;
    for (long k = 0; k < n; ++k) {
      RVector obs = env.context().observation;
      const auto decision = agent.decide(env.context(), env);
      const auto res = env.step(decision);
      buf.add(std::move(obs), agent.last_action(), agent.last_log_prob(), res.reward, agent.last_value(), res.done);
      if (res.done) {
        thp_sum += env.throughput();
        ++finished;
        ++episode;
        start_episode();
      }
    }
    step += n;
    buf.last_value = rl::policy_forward(*net, env.context().observation).value;

    UpdateRow row;
    row.update = result.curve.size();
    row.steps = step;
    row.episodes = episode;
    row.mean_reward = std::accumulate(buf.rewards.begin(), buf.rewards.end(), 0.0) / static_cast<double>(buf.size());
    if (finished > 0) row.mean_episode_thp = thp_sum / static_cast<double>(finished);
    try {
      row.diag = rl::ppo_update(*net, adam, buf, opt.hp, update_rng);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumericFailure) throw;
      // Parameters were restored to the last good state by the update.
      result.aborted = true;
      result.message = e.what();
      break;
    }
    result.curve.push_back(row);
    if (on_update) on_update(row);
  }
  result.checkpoint.network = *net;
  result.checkpoint.training_steps = step;
  return result;
}

}  // namespace beamsense::sim
