#pragma once

// Property suites with independent reference computations. Each suite returns
// a CheckResult; `selftest` and the acceptance runner print them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "beamsense/array_geometry.hpp"
#include "beamsense/channel.hpp"
#include "beamsense/mobility.hpp"
#include "beamsense/policies.hpp"
#include "beamsense/random.hpp"
#include "beamsense/rl/action_space.hpp"
#include "beamsense/rl/network.hpp"
#include "beamsense/rl/ppo.hpp"
#include "beamsense/sensing.hpp"
#include "beamsense/sim/frame_config.hpp"

namespace beamsense::check {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

// Runs `body`, times it and folds the runtime budget into the verdict.
inline CheckResult timed(std::string name, double budget_seconds, const std::function<bool(std::ostream&)>& body) {
  CheckResult r;
  r.name = std::move(name);
  r.budget_seconds = budget_seconds;
  std::ostringstream detail;
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail << "exception: " << e.what();
    ok = false;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.seconds >= budget_seconds) {
    detail << "; runtime " << r.seconds << " s over budget " << budget_seconds << " s";
    ok = false;
  }
  r.passed = ok;
  r.detail = detail.str();
  return r;
}

namespace oracle {

// Element k = e^{j k theta} / sqrt(n), written out without the library helper.
inline std::vector<std::complex<double>> steering(double theta, std::size_t n) {
  std::vector<std::complex<double>> a(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ph = static_cast<double>(k) * theta;
    a[k] = {std::cos(ph) / std::sqrt(static_cast<double>(n)), std::sin(ph) / std::sqrt(static_cast<double>(n))};
  }
  return a;
}

// |a^H(theta) a(phi)|^2 for unit-norm steering vectors: the Fejer kernel
// sin^2(n x / 2) / (n^2 sin^2(x / 2)), x = theta - phi.
inline double fejer(double x, std::size_t n) {
  const double s = std::sin(x / 2.0);
  if (std::abs(s) < 1e-15) return 1.0;
  const double num = std::sin(static_cast<double>(n) * x / 2.0);
  return num * num / (static_cast<double>(n) * static_cast<double>(n) * s * s);
}

// LoS-only single-user SINR with a single codeword:
// P N (v_c / (4 pi d f_c))^2 Fejer(phi - phi_i) / sigma^2.
inline double los_sinr(double power, double distance, double phi, double codeword_angle, std::size_t n,
                       double carrier_hz, double noise) {
  const double c = 3.0e8;
  const double path = c / (4.0 * 3.14159265358979323846 * distance * carrier_hz);
  return power * static_cast<double>(n) * path * path * fejer(phi - codeword_angle, n) / noise;
}

// Fisher information for phi in eta = alpha a(phi) + CN(0, s2 I), from a
// central difference of the mean: J = 2 |alpha|^2 ||d a / d phi||^2 / s2.
inline double numeric_fisher(double phi, std::size_t n, double alpha2, double s2, double h = 1e-6) {
  const auto ap = steering(phi + h, n);
  const auto am = steering(phi - h, n);
  double d2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) d2 += std::norm((ap[k] - am[k]) / (2.0 * h));
  return 2.0 * alpha2 * d2 / s2;
}

// Largest number of users that can all receive their requirement, by
// enumerating every subset.
inline std::size_t best_granted_count(const std::vector<double>& req, double budget) {
  const std::size_t u = req.size();
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << u); ++mask) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < u; ++i) {
      if (mask & (std::size_t{1} << i)) {
        sum += req[i];
        ++count;
      }
    }
    if (sum <= budget) best = std::max(best, count);
  }
  return best;
}

}  // namespace oracle

// 1: codebook orthonormality and unit peak gain at grid angles.
inline CheckResult codebook_suite() {
  return timed("codebook/steering", 1.0, [](std::ostream& os) {
    double worst_ortho = 0.0;
    double worst_peak = 0.0;
    double worst_norm = 0.0;
    for (std::size_t n : {4, 8, 16, 32, 64}) {
      const Codebook cb(n);
      const CMatrix g = cb.matrix().adjoint() * cb.matrix();
      worst_ortho = std::max(worst_ortho, (g - CMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
      for (std::size_t i = 0; i < n; ++i) {
        worst_peak = std::max(worst_peak, std::abs(beam_gain(cb.angle(i), CompositeBeam::single(cb, i)) - 1.0));
        worst_norm = std::max(worst_norm, std::abs(steering_vector(cb.angle(i), n).norm() - 1.0));
      }
    }
    os << "max |F^H F - I| = " << worst_ortho << ", max |gain - 1| at grid = " << worst_peak
       << ", max |norm - 1| = " << worst_norm;
    return worst_ortho < 1e-12 && worst_peak < 1e-12 && worst_norm < 1e-12;
  });
}

// 2: LoS-only single-user SINR against the closed-form scalar.
inline CheckResult sinr_suite(std::uint64_t seed = 2) {
  return timed("sinr oracle", 1.0, [seed](std::ostream& os) {
    Rng rng(seed);
    ChannelParams p;
    p.rician_k = std::numeric_limits<double>::infinity();
    const Codebook cb(p.n_antennas);
    const double noise = dbm_to_watts(-109.0);
    const double power = dbm_to_watts(15.0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      GeometrySnapshot g;
      g.distance = uniform(rng, 5.0, 75.0);
      g.aod = uniform(rng, -kPi, kPi);
      const std::size_t idx = cb.nearest(g.aod);
      const auto ch = realize_channel(g, p, rng);
      const std::vector<ChannelRealization> chans{ch};
      const std::vector<CompositeBeam> beams{CompositeBeam::single(cb, idx)};
      const std::vector<double> powers{power};
      const double got = sinr(0, chans, beams, powers, noise);
      const double want = oracle::los_sinr(power, g.distance, g.aod, cb.angle(idx), p.n_antennas, p.carrier_hz, noise);
      worst = std::max(worst, std::abs(got - want) / want);
    }
    os << "max relative error over 100 distances = " << worst;
    return worst < 1e-9;
  });
}

struct ChainTrial {
  bool delay_ok = false;
  bool doppler_ok = false;
  bool aod_ok = false;
};

// One single-target echo through the full-frame chain. `snr_db` is the echo
// SNR per sample after an aligned receive combiner; NaN means noise-free.
inline ChainTrial estimation_trial(Rng& rng, double snr_db, const sim::FrameConfig& cfg = {}) {
  const std::size_t n = cfg.channel.n_antennas;
  const std::size_t m = cfg.sensing.samples();
  const Codebook cb(n);
  const auto grid = DelayDopplerGrid::for_scenario(cfg.sensing, cfg.grid.diagonal() / 2.0, cfg.channel.carrier_hz);
  const AodGrid aod_grid(n, cfg.sensing.aod_oversampling);
  EchoTarget tgt;
  tgt.aod = uniform(rng, -0.9 * kPi, 0.9 * kPi);
  const double distance = uniform(rng, 10.0, 70.0);
  tgt.beta = reflection_coefficient(distance, n, cfg.channel.carrier_hz, cfg.sensing.rcs);
  const double mu_max = 2.0 * cfg.sensing.max_speed * cfg.channel.carrier_hz / kSpeedOfLight;
  tgt.doppler = uniform(rng, -mu_max, mu_max);
  tgt.delay = 2.0 * distance / kSpeedOfLight;
  const CompositeBeam beam = cu_beam(tgt.aod, cb);
  const double power = cfg.link.total_power_w;
  const double signal = tgt.beta * tgt.beta * power * beam_gain(tgt.aod, beam);
  const bool noisy = !std::isnan(snr_db);
  const double noise = noisy ? signal / db_to_linear(snr_db) : cfg.link.noise_power_w;
  const std::vector<EchoTarget> targets{tgt};
  const std::vector<CVector> weights{beam.weight()};
  const std::vector<double> powers{power};
  const std::vector<CVector> waveforms{qpsk_waveform(m, rng)};
  const auto frame = synthesize_echo(targets, weights, powers, waveforms, cfg.sensing.sample_rate, noise, rng, noisy);
  const auto dd = estimate_delay_doppler(frame, waveforms[0], weights[0], grid);
  const auto eta = compensate(frame, waveforms[0], dd);
  const auto aod = estimate_aod(eta, aod_grid);
  ChainTrial t;
  t.delay_ok = std::abs(dd.delay - tgt.delay) <= dd.delay_step + 1e-15;
  t.doppler_ok = std::abs(dd.doppler - tgt.doppler) <= dd.doppler_step;
  const double err = std::abs(std::remainder(aod.aod - tgt.aod, kTwoPi));
  t.aod_ok = err <= aod_grid.step();
  return t;
}

// 3: estimation chain round trip, noise-free and at 20 dB echo SNR.
inline CheckResult estimation_suite(std::uint64_t seed = 3) {
  return timed("estimation chain", 120.0, [seed](std::ostream& os) {
    Rng rng(seed);
    int clean_ok = 0;
    const int clean_trials = 50;
    for (int i = 0; i < clean_trials; ++i) {
      const auto t = estimation_trial(rng, std::numeric_limits<double>::quiet_NaN());
      clean_ok += t.delay_ok && t.doppler_ok && t.aod_ok;
    }
    int noisy_ok = 0;
    const int noisy_trials = 200;
    for (int i = 0; i < noisy_trials; ++i) {
      const auto t = estimation_trial(rng, 20.0);
      noisy_ok += t.delay_ok && t.doppler_ok && t.aod_ok;
    }
    const double frac = static_cast<double>(noisy_ok) / noisy_trials;
    os << "noise-free " << clean_ok << "/" << clean_trials << " within one bin; 20 dB " << noisy_ok << "/"
       << noisy_trials << " (" << frac << ")";
    return clean_ok == clean_trials && frac >= 0.95;
  });
}

// 4: CRLB scaling laws and agreement with a numerical Fisher information.
inline CheckResult crlb_suite(std::uint64_t seed = 4) {
  return timed("crlb properties", 60.0, [seed](std::ostream& os) {
    Rng rng(seed);
    const std::size_t n = 32;
    const Codebook cb(n);
    double worst_half = 0.0;
    double worst_four = 0.0;
    double worst_fisher = 0.0;
    for (int i = 0; i < 10; ++i) {
      const double phi = uniform(rng, -kPi, kPi);
      const CVector w = cu_beam(phi, cb).weight();
      const double power = uniform(rng, 1e-4, 3e-2);
      const double noise = dbm_to_watts(uniform(rng, -115.0, -100.0));
      const double beta = reflection_coefficient(uniform(rng, 10.0, 70.0), n, 28e9, 25.0);
      const double m = 1000.0;
      const double v = crlb_aod(power, w, phi, m, noise, beta).variance;
      const double v2 = crlb_aod(2.0 * power, w, phi, m, noise, beta).variance;
      const double v4 = crlb_aod(power, CVector(w / 2.0), phi, m, noise, beta).variance;
      worst_half = std::max(worst_half, std::abs(v2 / v - 0.5) / 0.5);
      worst_four = std::max(worst_four, std::abs(v4 / v - 4.0) / 4.0);
      const double alpha2 = beta * beta * power * oracle::fejer(0.0, n) * std::norm(steering_vector(phi, n).dot(w));
      const double j = oracle::numeric_fisher(phi, n, alpha2, noise / m);
      worst_fisher = std::max(worst_fisher, std::abs(v * j - 1.0));
    }
    os << "power doubling rel. error " << worst_half << ", 4x gain loss rel. error " << worst_four
       << ", closed form vs numerical Fisher max rel. error " << worst_fisher;
    return worst_half < 1e-12 && worst_four < 1e-12 && worst_fisher < 0.01;
  });
}

// 5: water-filling grants as many users as the best subset.
inline CheckResult waterfill_suite(std::uint64_t seed = 5) {
  return timed("water-filling optimality", 10.0, [seed](std::ostream& os) {
    Rng rng(seed);
    int mismatches = 0;
    int budget_violations = 0;
    for (int t = 0; t < 1000; ++t) {
      const auto u = static_cast<std::size_t>(uniform_int(rng, 1, 3));
      const double budget = 1.0;
      std::vector<double> req(u);
      // Requirements on a 0.05 grid so ties and exact fits occur.
      for (auto& r : req) r = 0.05 * uniform_int(rng, 0, 30);
      const auto alloc = waterfill_power(req, budget);
      const auto granted = static_cast<std::size_t>(std::count(alloc.granted.begin(), alloc.granted.end(), true));
      if (granted != oracle::best_granted_count(req, budget)) ++mismatches;
      double sum = 0.0;
      for (std::size_t i = 0; i < u; ++i) {
        sum += alloc.powers[i];
        if (alloc.granted[i] && alloc.powers[i] < req[i] - 1e-15) ++budget_violations;
        if (!alloc.granted[i] && alloc.powers[i] != 0.0) ++budget_violations;
      }
      if (sum > budget * (1.0 + 1e-12)) ++budget_violations;
    }
    os << mismatches << " granted-count mismatches and " << budget_violations << " allocation violations in 1000";
    return mismatches == 0 && budget_violations == 0;
  });
}

// Max relative error of analytic vs central-difference gradients of
// log pi(a|s) + V(s) and of the PPO loss on a random small network.
inline double gradient_check_error(std::uint64_t seed) {
  Rng rng(seed);
  rl::ActorCritic net({5, 8, 9});
  net.initialize(rng, 1.0);
  for (Eigen::Index i = 0; i < net.size(); ++i) net.params()[i] += 0.1 * standard_normal(rng);
  const Eigen::Index batch = 6;
  rl::Matrix obs(5, batch);
  for (Eigen::Index i = 0; i < obs.size(); ++i) obs(i) = standard_normal(rng);
  std::vector<std::size_t> actions(batch);
  for (auto& a : actions) a = static_cast<std::size_t>(uniform_int(rng, 0, 8));
  const auto f0 = net.forward(obs);
  std::vector<double> old_lp(batch), adv(batch), ret(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    // Old policy slightly off the current one, inside the clip range.
    old_lp[ui] = std::log(f0.probs(static_cast<Eigen::Index>(actions[ui]), i)) + 0.05 * standard_normal(rng);
    adv[ui] = standard_normal(rng);
    ret[ui] = standard_normal(rng);
  }
  rl::PpoHyperparams hp;
  hp.entropy_coef = 0.01;  // keep the entropy term in the checked gradient

  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };
  double worst = 0.0;
  const double h = 1e-5;

  // log pi(a|s) + V(s) summed over the batch.
  auto logp_value = [&](const rl::ActorCritic& n) {
    const auto f = n.forward(obs);
    double s = 0.0;
    for (Eigen::Index i = 0; i < batch; ++i) {
      s += std::log(f.probs(static_cast<Eigen::Index>(actions[static_cast<std::size_t>(i)]), i)) + f.values[i];
    }
    return s;
  };
  rl::Matrix dlogits = -f0.probs;
  for (Eigen::Index i = 0; i < batch; ++i) dlogits(static_cast<Eigen::Index>(actions[static_cast<std::size_t>(i)]), i) += 1.0;
  RVector g1 = RVector::Zero(net.size());
  net.backward(f0, dlogits, RVector::Ones(batch), g1);

  RVector g2;
  rl::ppo_loss_and_grad(net, obs, actions, old_lp, adv, ret, hp, g2);
  auto loss = [&](const rl::ActorCritic& n) {
    RVector unused;
    return rl::ppo_loss_and_grad(n, obs, actions, old_lp, adv, ret, hp, unused).total;
  };

  rl::ActorCritic probe = net;
  for (Eigen::Index k = 0; k < net.size(); ++k) {
    const double x = net.params()[k];
    probe.params()[k] = x + h;
    const double lp = logp_value(probe);
    const double pp = loss(probe);
    probe.params()[k] = x - h;
    const double lm = logp_value(probe);
    const double pm = loss(probe);
    probe.params()[k] = x;
    worst = std::max(worst, rel(g1[k], (lp - lm) / (2.0 * h)));
    worst = std::max(worst, rel(g2[k], (pp - pm) / (2.0 * h)));
  }
  return worst;
}

// Single-state two-action bandit: action 0 pays 1, action 1 pays 0. Returns
// pi(action 0) after `updates` PPO updates.
inline double bandit_probability(std::uint64_t seed, std::size_t updates = 200) {
  Rng rng(seed);
  rl::ActorCritic net({1, 16, 2});
  net.initialize(rng);
  rl::PpoHyperparams hp;
  hp.rollout_steps = 32;
  hp.minibatch = 32;
  hp.epochs = 4;
  hp.learning_rate = 3e-3;
  rl::Adam adam(net.size(), hp.learning_rate);
  const RVector obs = RVector::Ones(1);
  for (std::size_t u = 0; u < updates; ++u) {
    rl::RolloutBuffer buf;
    for (std::size_t s = 0; s < hp.rollout_steps; ++s) {
      const auto out = rl::policy_forward(net, obs);
      const auto a = rl::sample_action(out.probs, rng);
      buf.add(obs, a, rl::log_prob(out.probs, a), a == 0 ? 1.0 : 0.0, out.value, true);
    }
    rl::ppo_update(net, adam, buf, hp, rng);
  }
  return rl::policy_forward(net, obs).probs[0];
}

// 6: action coding identity, gradient correctness, bandit convergence.
inline CheckResult ppo_suite(std::uint64_t seed = 6) {
  return timed("ppo correctness", 120.0, [seed](std::ostream& os) {
    std::size_t coding_errors = 0;
    for (std::size_t u = 1; u <= 4; ++u) {
      const std::size_t size = rl::action_space_size(u);
      std::size_t expected = 1;
      for (std::size_t i = 0; i < u; ++i) expected *= 3;
      if (size != expected) ++coding_errors;
      for (std::size_t code = 0; code < size; ++code) {
        const auto digits = rl::action_digits(code, u);
        if (rl::encode_action(digits) != code) ++coding_errors;
      }
    }
    const double grad_err = gradient_check_error(seed);
    const double p0 = bandit_probability(seed);
    os << coding_errors << " coding errors over all 3^U codes (U <= 4); gradient max rel. error " << grad_err
       << "; bandit pi(best) " << p0 << " after 200 updates";
    return coding_errors == 0 && grad_err < 1e-4 && p0 > 0.95;
  });
}

inline std::vector<CheckResult> run_property_suites() {
  return {codebook_suite(), sinr_suite(), estimation_suite(), crlb_suite(), waterfill_suite(), ppo_suite()};
}

}  // namespace beamsense::check
