#pragma once

// Proximal policy optimization with the clipped surrogate objective, GAE
// advantages, a value-regression term and an entropy bonus.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "beamsense/error.hpp"
#include "beamsense/random.hpp"
#include "beamsense/rl/network.hpp"

namespace beamsense::rl {

struct PpoHyperparams {
  double clip = 0.2;
  double gamma = 0.9;
  double gae_lambda = 0.95;
  double learning_rate = 1e-3;
  std::size_t rollout_steps = 2048;
  std::size_t epochs = 10;
  std::size_t minibatch = 64;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;

  void validate() const {
    require(clip > 0.0 && gamma > 0.0 && gae_lambda > 0.0 && learning_rate > 0.0 && rollout_steps > 0 &&
                epochs > 0 && minibatch > 0 && entropy_coef >= 0.0 && value_coef > 0.0 && max_grad_norm > 0.0,
            ErrorKind::kInvalidArgument, "PPO hyperparameters must be positive");
  }

  bool operator==(const PpoHyperparams&) const = default;
};

struct RolloutBuffer {
  std::vector<RVector> observations;
  std::vector<std::size_t> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<bool> dones;  // episode ended after this step
  double last_value = 0.0;  // bootstrap value of the state after the last step

  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }

  void clear() { *this = RolloutBuffer{}; }

  void add(RVector obs, std::size_t action, double log_prob, double reward, double value, bool done) {
    observations.push_back(std::move(obs));
    actions.push_back(action);
    log_probs.push_back(log_prob);
    rewards.push_back(reward);
    values.push_back(value);
    dones.push_back(done);
  }

  void compute_gae(double gamma, double lambda) {
    const std::size_t n = size();
    require(observations.size() == n && log_probs.size() == n && rewards.size() == n && values.size() == n &&
                dones.size() == n,
            ErrorKind::kInvalidArgument, "rollout buffer columns are misaligned");
    advantages.assign(n, 0.0);
    returns.assign(n, 0.0);
    double gae = 0.0;
    for (std::size_t i = n; i-- > 0;) {
      const double next_value = i + 1 < n ? values[i + 1] : last_value;
      const double nonterminal = dones[i] ? 0.0 : 1.0;
      const double delta = rewards[i] + gamma * next_value * nonterminal - values[i];
      gae = delta + gamma * lambda * nonterminal * gae;
      advantages[i] = gae;
      returns[i] = gae + values[i];
    }
  }
};

// min(r A, clip(r, 1 - eps, 1 + eps) A)
inline double clipped_surrogate(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

struct LossTerms {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Loss over a minibatch and its gradient with respect to the parameters:
// L = -mean(surrogate) + c_v mean((V - R)^2) - c_e mean(H).
inline LossTerms ppo_loss_and_grad(const ActorCritic& net, const Matrix& obs, std::span<const std::size_t> actions,
                                   std::span<const double> old_log_probs, std::span<const double> advantages,
                                   std::span<const double> returns, const PpoHyperparams& hp, RVector& grad) {
  const auto b = obs.cols();
  const auto f = net.forward(obs);
  Matrix dlogits = Matrix::Zero(f.logits.rows(), b);
  RVector dvalues = RVector::Zero(b);
  LossTerms lt;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto a = static_cast<Eigen::Index>(actions[ui]);
    const RVector p = f.probs.col(i);
    const double logp = std::log(std::max(p[a], 1e-300));
    const double ratio = std::exp(logp - old_log_probs[ui]);
    const double adv = advantages[ui];
    const double surr1 = ratio * adv;
    const double surr = clipped_surrogate(ratio, adv, hp.clip);
    lt.policy -= surr * inv_b;
    lt.approx_kl += ((ratio - 1.0) - (logp - old_log_probs[ui])) * inv_b;
    if (std::abs(ratio - 1.0) > hp.clip) lt.clip_fraction += inv_b;
    // d(-surr)/dlogp is -r A on the unclipped branch, zero otherwise.
    const double dlogp = surr1 <= surr ? -ratio * adv : 0.0;
    RVector onehot = RVector::Zero(p.size());
    onehot[a] = 1.0;
    RVector dl = dlogp * (onehot - p);
    const RVector logps = p.array().max(1e-300).log();
    const double entropy = -(p.array() * logps.array()).sum();
    lt.entropy += entropy * inv_b;
    // dH/dlogit_j = -p_j (log p_j + H)
    const RVector dh = -(p.array() * (logps.array() + entropy));
    dl -= hp.entropy_coef * dh;
    dlogits.col(i) = dl * inv_b;
    const double err = f.values[i] - returns[ui];
    lt.value += err * err * inv_b;
    dvalues[i] = hp.value_coef * 2.0 * err * inv_b;
  }
  lt.total = lt.policy + hp.value_coef * lt.value - hp.entropy_coef * lt.entropy;
  grad = RVector::Zero(net.size());
  net.backward(f, dlogits, dvalues, grad);
  return lt;
}

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  std::size_t minibatches = 0;
};

// Runs the configured epochs of shuffled minibatch steps. A non-finite loss
// restores the parameters from before the update and throws.
inline UpdateDiagnostics ppo_update(ActorCritic& net, Adam& opt, RolloutBuffer& buf, const PpoHyperparams& hp,
                                   Rng& rng) {
  hp.validate();
  require(buf.size() > 0, ErrorKind::kInvalidArgument, "ppo_update: empty rollout");
  buf.compute_gae(hp.gamma, hp.gae_lambda);
  const std::size_t n = buf.size();
  const RVector backup = net.params();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  UpdateDiagnostics diag;
  const auto in = static_cast<Eigen::Index>(net.shape().inputs);
  RVector grad;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i - 1)))]);
    for (std::size_t start = 0; start < n; start += hp.minibatch) {
      const std::size_t end = std::min(n, start + hp.minibatch);
      const auto bsz = static_cast<Eigen::Index>(end - start);
      Matrix obs(in, bsz);
      std::vector<std::size_t> act(end - start);
      std::vector<double> oldlp(end - start), adv(end - start), ret(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t j = idx[k];
        obs.col(static_cast<Eigen::Index>(k - start)) = buf.observations[j];
        act[k - start] = buf.actions[j];
        oldlp[k - start] = buf.log_probs[j];
        adv[k - start] = buf.advantages[j];
        ret[k - start] = buf.returns[j];
      }
      if (hp.normalize_advantages && adv.size() > 1) {
        const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size());
        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / static_cast<double>(adv.size()));
        for (double& a : adv) a = (a - mean) / (sd + 1e-8);
      }
      const auto lt = ppo_loss_and_grad(net, obs, act, oldlp, adv, ret, hp, grad);
      if (!std::isfinite(lt.total) || !grad.allFinite()) {
        net.params() = backup;
        throw Error(ErrorKind::kNumericFailure,
                    "PPO update aborted: non-finite loss (policy " + std::to_string(lt.policy) + ", value " +
                        std::to_string(lt.value) + ", entropy " + std::to_string(lt.entropy) + ")");
      }
      const double gnorm = grad.norm();
      if (gnorm > hp.max_grad_norm) grad *= hp.max_grad_norm / gnorm;
      opt.step(net.params(), grad);
      diag.policy_loss += lt.policy;
      diag.value_loss += lt.value;
      diag.entropy += lt.entropy;
      diag.approx_kl += lt.approx_kl;
      diag.clip_fraction += lt.clip_fraction;
      ++diag.minibatches;
    }
  }
  const double m = static_cast<double>(std::max<std::size_t>(diag.minibatches, 1));
  diag.policy_loss /= m;
  diag.value_loss /= m;
  diag.entropy /= m;
  diag.approx_kl /= m;
  diag.clip_fraction /= m;
  return diag;
}

}  // namespace beamsense::rl
