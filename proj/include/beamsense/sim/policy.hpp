#pragma once

// Decision makers that drive an Environment: X-TDMA, the CRLB-driven AoD
// policy and its genie variant, and the PPO agent.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "beamsense/error.hpp"
#include "beamsense/policies.hpp"
#include "beamsense/random.hpp"
#include "beamsense/rl/action_space.hpp"
#include "beamsense/rl/network.hpp"
#include "beamsense/sim/environment.hpp"

namespace beamsense::sim {

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(std::uint64_t /*episode_seed*/) {}
  virtual BeamAssignment decide(const DecisionContext& ctx, const Environment& env) = 0;
};

class XtdmaPolicy final : public Policy {
 public:
  explicit XtdmaPolicy(std::size_t period) : period_(period) {
    require(period >= 1, ErrorKind::kInvalidArgument, "xtdma: X must be >= 1");
  }

  std::string name() const override { return "xtdma-" + std::to_string(period_); }

  BeamAssignment decide(const DecisionContext& ctx, const Environment& env) override {
    const auto& cb = env.codebook();
    std::vector<double> aods;
    for (std::size_t u = 0; u < ctx.users; ++u) {
      const bool latest = !env.config().xtdma_hold_sweep_estimate && ctx.estimates[u].valid;
      aods.push_back(latest ? ctx.estimates[u].aod : ctx.sweep_estimates[u]);
    }
    if (!env.config().xtdma_multibeam && is_sweep_slot(ctx.tti, period_)) {
      BeamAssignment out;
      for (double phi : aods) {
        out.types.push_back(UserType::kSensing);
        out.beams.push_back(cu_beam(phi, cb));
      }
      return out;
    }
    std::vector<double> halfwidths;
    for (double phi : aods) halfwidths.push_back(normalized_threshold(env.config().threshold(), phi));
    return xtdma_policy(ctx.tti, period_, aods, halfwidths, cb);
  }

  std::size_t period() const { return period_; }

 private:
  std::size_t period_;
};

class AodPolicy final : public Policy {
 public:
  explicit AodPolicy(bool genie) : genie_(genie) {}

  std::string name() const override { return genie_ ? "aod-genie" : "aod"; }

  BeamAssignment decide(const DecisionContext& ctx, const Environment& env) override {
    return decide_full(ctx, env).assignment;
  }

  AodDecision decide_full(const DecisionContext& ctx, const Environment& env) const {
    const auto& cfg = env.config();
    std::vector<AodPolicyInput> inputs;
    for (std::size_t u = 0; u < ctx.users; ++u) {
      AodPolicyInput in;
      in.estimate = ctx.estimates[u];
      in.power = ctx.prev_powers[u];
      in.beam_weight = ctx.prev_beams[u].weight();
      in.true_aod = ctx.true_aods[u];
      in.true_distance = ctx.true_distances[u];
      in.fallback_aod = ctx.prev_beams[u].center_angle(env.codebook());
      inputs.push_back(std::move(in));
    }
    AodPolicyParams p;
    p.physical_threshold = cfg.threshold();
    p.integration_samples = static_cast<double>(cfg.sensing.samples());
    p.noise_power = cfg.link.noise_power_w;
    p.n_antennas = cfg.channel.n_antennas;
    p.carrier_hz = cfg.channel.carrier_hz;
    p.rcs = cfg.sensing.rcs;
    p.min_distance = cfg.min_distance();
    p.crlb_form = cfg.crlb_form;
    return aod_policy(inputs, genie_, env.codebook(), p);
  }

 private:
  bool genie_;
};

// Acts from the observation through the reduced action space. Greedy mode
// takes the most likely action; otherwise actions are sampled from the
// agent stream of the episode.
class PpoPolicy final : public Policy {
 public:
  PpoPolicy(std::shared_ptr<const rl::ActorCritic> net, bool greedy) : net_(std::move(net)), greedy_(greedy) {
    require(net_ != nullptr, ErrorKind::kInvalidArgument, "ppo policy needs a network");
  }

  std::string name() const override { return "ppo"; }

  void begin_episode(std::uint64_t episode_seed) override { rng_ = make_stream(episode_seed, Stream::kAgent); }

  BeamAssignment decide(const DecisionContext& ctx, const Environment& env) override {
    require(rl::action_space_size(ctx.users) == net_->shape().actions &&
                static_cast<std::size_t>(ctx.observation.size()) == net_->shape().inputs,
            ErrorKind::kPolicyFailure, "network shape does not match the scenario");
    const auto out = rl::policy_forward(*net_, ctx.observation);
    last_action_ = greedy_ ? rl::greedy_action(out.probs) : rl::sample_action(out.probs, rng_);
    last_log_prob_ = rl::log_prob(out.probs, last_action_);
    last_value_ = out.value;
    return rl::decode_action(last_action_, ctx.prev_types, ctx.prev_beams, ctx.estimates, env.codebook());
  }

  std::size_t last_action() const { return last_action_; }
  double last_log_prob() const { return last_log_prob_; }
  double last_value() const { return last_value_; }

 private:
  std::shared_ptr<const rl::ActorCritic> net_;
  bool greedy_;
  Rng rng_{0};
  std::size_t last_action_ = 0;
  double last_log_prob_ = 0.0;
  double last_value_ = 0.0;
};

// Policy names accepted on the command line and in configs.
struct PolicySpec {
  enum class Kind { kPpo, kAod, kAodGenie, kXtdma } kind = Kind::kAod;
  std::size_t period = 25;  // xtdma only

  std::string name() const {
    switch (kind) {
      case Kind::kPpo: return "ppo";
      case Kind::kAod: return "aod";
      case Kind::kAodGenie: return "aod-genie";
      case Kind::kXtdma: return "xtdma-" + std::to_string(period);
    }
    return "?";
  }
};

// "ppo", "aod", "aod-genie", "xtdma" (X from the default) or "xtdma-<X>".
inline PolicySpec parse_policy(std::string_view name, std::size_t default_period = 25) {
  PolicySpec s;
  if (name == "ppo") {
    s.kind = PolicySpec::Kind::kPpo;
  } else if (name == "aod") {
    s.kind = PolicySpec::Kind::kAod;
  } else if (name == "aod-genie") {
    s.kind = PolicySpec::Kind::kAodGenie;
  } else if (name == "xtdma") {
    s.kind = PolicySpec::Kind::kXtdma;
    s.period = default_period;
  } else if (name.starts_with("xtdma-")) {
    s.kind = PolicySpec::Kind::kXtdma;
    const auto digits = name.substr(6);
    std::size_t x = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), x);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || x < 1) {
      throw Error(ErrorKind::kConfigError, "bad X in policy name '" + std::string(name) + "'");
    }
    s.period = x;
  } else {
    throw Error(ErrorKind::kConfigError,
                "unknown policy '" + std::string(name) + "' (expected ppo, aod, aod-genie, xtdma or xtdma-<X>)");
  }
  return s;
}

inline std::unique_ptr<Policy> make_policy(const PolicySpec& choice, std::shared_ptr<const rl::ActorCritic> net = {}) {
  switch (choice.kind) {
    case PolicySpec::Kind::kPpo:
      if (!net) throw Error(ErrorKind::kConfigError, "policy ppo requires a checkpoint");
      return std::make_unique<PpoPolicy>(std::move(net), true);
    case PolicySpec::Kind::kAod: return std::make_unique<AodPolicy>(false);
    case PolicySpec::Kind::kAodGenie: return std::make_unique<AodPolicy>(true);
    case PolicySpec::Kind::kXtdma: return std::make_unique<XtdmaPolicy>(choice.period);
  }
  throw Error(ErrorKind::kConfigError, "unhandled policy kind");
}

}  // namespace beamsense::sim
