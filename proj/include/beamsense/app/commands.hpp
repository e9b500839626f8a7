#pragma once

// The train / evaluate / sweep-speed commands behind the CLI.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "beamsense/app/config.hpp"
#include "beamsense/app/csv.hpp"
#include "beamsense/error.hpp"
#include "beamsense/rl/checkpoint.hpp"
#include "beamsense/sim/episode.hpp"
#include "beamsense/sim/metrics.hpp"
#include "beamsense/sim/policy.hpp"
#include "beamsense/sim/trainer.hpp"

namespace beamsense::app {

using Log = std::function<void(const std::string&)>;

inline std::shared_ptr<const rl::ActorCritic> load_network(const ExperimentConfig& cfg) {
  if (cfg.checkpoint.empty()) return nullptr;
  auto ck = rl::load_checkpoint(cfg.checkpoint);
  return std::make_shared<const rl::ActorCritic>(std::move(ck.network));
}

inline sim::PolicyFactory policy_factory(const sim::PolicySpec& choice,
                                         const std::shared_ptr<const rl::ActorCritic>& net) {
  if (choice.kind == sim::PolicySpec::Kind::kPpo && !net) {
    throw Error(ErrorKind::kConfigError, "policy ppo requires a checkpoint (experiment.checkpoint or --checkpoint)");
  }
  return [choice, net] { return sim::make_policy(choice, net); };
}

inline std::vector<sim::EpisodeResult> run_policy(const ExperimentConfig& cfg, const std::string& policy,
                                                  double speed_mean,
                                                  const std::shared_ptr<const rl::ActorCritic>& net) {
  auto frame = cfg.frame;
  frame.speed_mean = speed_mean;
  const auto choice = sim::parse_policy(policy);
  return sim::evaluate(frame, policy_factory(choice, net), {cfg.episodes, cfg.seed, cfg.jobs});
}

inline std::vector<double> throughputs(const std::vector<sim::EpisodeResult>& rs) {
  std::vector<double> out;
  out.reserve(rs.size());
  for (const auto& r : rs) out.push_back(r.thp);
  return out;
}

struct EvaluateOutput {
  std::vector<sim::EpisodeResult> episodes;
  double mean_thp = 0.0;
  sim::Interval ci;
  std::filesystem::path episodes_csv;
  std::filesystem::path cdf_csv;
};

// Writes <out>/episodes.csv and <out>/cdf.csv for cfg.policy at frame.speed_mean.
inline EvaluateOutput cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                   const Log& log = {}) {
  validate(cfg);
  EvaluateOutput out;
  out.episodes = run_policy(cfg, cfg.policy, cfg.frame.speed_mean, load_network(cfg));
  const auto thp = throughputs(out.episodes);
  out.mean_thp = sim::mean(thp);
  out.ci = sim::bootstrap_ci(thp);

  out.episodes_csv = out_dir / "episodes.csv";
  auto f = open_output(out.episodes_csv);
  write_episodes(f, cfg.experiment_id, cfg.frame.speed_mean, out.episodes);
  close_checked(f, out.episodes_csv);

  out.cdf_csv = out_dir / "cdf.csv";
  auto g = open_output(out.cdf_csv);
  write_cdf(g, sim::cdf_table(thp));
  close_checked(g, out.cdf_csv);
  if (log) {
    log(cfg.policy + ": mean Thp " + num(out.mean_thp) + " [" + num(out.ci.low) + ", " + num(out.ci.high) +
        "] over " + std::to_string(thp.size()) + " episodes");
  }
  return out;
}

// One row per (policy, speed) into <out>/sweep.csv, all on shared episode seeds.
inline std::vector<SweepRow> cmd_sweep_speed(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                             const Log& log = {}) {
  validate(cfg);
  std::shared_ptr<const rl::ActorCritic> net;
  for (const auto& p : cfg.sweep_policies) {
    if (sim::parse_policy(p).kind == sim::PolicySpec::Kind::kPpo) net = load_network(cfg);
  }
  std::vector<SweepRow> rows;
  for (const auto& policy : cfg.sweep_policies) {
    for (double v : cfg.sweep_speeds) {
      const auto thp = throughputs(run_policy(cfg, policy, v, net));
      SweepRow row{policy, v, thp.size(), sim::mean(thp), sim::bootstrap_ci(thp)};
      if (log) log(policy + " @ " + num(v) + " m/s: mean Thp " + num(row.mean_thp));
      rows.push_back(std::move(row));
    }
  }
  const auto path = out_dir / "sweep.csv";
  auto f = open_output(path);
  write_sweep(f, rows);
  close_checked(f, path);
  return rows;
}

struct TrainOutput {
  sim::TrainingResult result;
  std::filesystem::path checkpoint;
  std::filesystem::path curve_csv;
};

// Trains PPO for ppo.train_steps and writes <out>/checkpoint.json and
// <out>/training.csv. A diverged update keeps the last good parameters, which
// are still saved before the error is reported.
inline TrainOutput cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, const Log& log = {}) {
  validate(cfg);
  sim::TrainingOptions opt;
  opt.steps = cfg.train_steps;
  opt.seed = cfg.train_seed;
  opt.spawn_sets = cfg.spawn_sets;
  opt.hidden = cfg.hidden;
  opt.hp = cfg.ppo;

  TrainOutput out;
  out.curve_csv = out_dir / "training.csv";
  auto curve = open_output(out.curve_csv);
  write_training_header(curve);
  out.result = sim::train_ppo(cfg.frame, opt, [&](const sim::UpdateRow& row) {
    write_training_row(curve, row);
    curve.flush();
    if (log) {
      log("update " + std::to_string(row.update) + " steps " + std::to_string(row.steps) + " mean reward " +
          num(row.mean_reward) + " episode Thp " + num(row.mean_episode_thp));
    }
  });
  close_checked(curve, out.curve_csv);
  out.checkpoint = out_dir / "checkpoint.json";
  rl::save_checkpoint(out.result.checkpoint, out.checkpoint);
  if (out.result.aborted) {
    throw Error(ErrorKind::kNumericFailure, "training stopped at step " + std::to_string(out.result.checkpoint.training_steps) +
                                                " (" + out.result.message + "); last good checkpoint saved to " +
                                                out.checkpoint.string());
  }
  return out;
}

}  // namespace beamsense::app
