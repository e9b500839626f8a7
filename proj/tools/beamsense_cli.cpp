// beamsense command line: train, evaluate, sweep-speed, selftest.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "beamsense/app/commands.hpp"
#include "beamsense/app/config.hpp"
#include "beamsense/check/oracles.hpp"
#include "beamsense/error.hpp"

namespace {

using beamsense::Error;
using beamsense::ErrorKind;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> episodes;
  std::optional<std::string> policy;
  std::optional<std::string> checkpoint;
  std::optional<std::size_t> steps;
  std::string out = "out";
};

beamsense::app::ExperimentConfig resolve(const Overrides& o) {
  auto cfg = o.config.empty() ? beamsense::app::ExperimentConfig{} : beamsense::app::load_config(o.config);
  if (o.seed) cfg.seed = cfg.train_seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.episodes) cfg.episodes = *o.episodes;
  if (o.policy) cfg.policy = *o.policy;
  if (o.checkpoint) cfg.checkpoint = *o.checkpoint;
  if (o.steps) cfg.train_steps = *o.steps;
  beamsense::app::validate(cfg);
  return cfg;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::kConfigError:
    case ErrorKind::kInvalidArgument: return 2;
    case ErrorKind::kIoError: return 3;
    case ErrorKind::kNumericFailure: return 4;
    default: return 5;
  }
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

int run_selftest() {
  bool all = true;
  for (const auto& r : beamsense::check::run_property_suites()) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.seconds << " s): " << r.detail << '\n';
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam management with sensing-assisted tracking: training, evaluation and sweeps"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "global seed");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--policy", o.policy, "ppo | aod | aod-genie | xtdma-X");
    sub->add_option("--episodes", o.episodes, "evaluation episodes")->check(CLI::PositiveNumber);
    sub->add_option("--checkpoint", o.checkpoint, "PPO checkpoint (JSON)");
  };
  auto* train = app.add_subcommand("train", "train PPO; writes checkpoint.json and training.csv");
  add_common(train);
  train->add_option("--steps", o.steps, "training steps");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate one policy; writes episodes.csv and cdf.csv");
  add_common(evaluate);
  auto* sweep = app.add_subcommand("sweep-speed", "mean throughput per policy and speed; writes sweep.csv");
  add_common(sweep);
  app.add_subcommand("selftest", "run the property suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand("selftest")) return run_selftest();
    const auto cfg = resolve(o);
    const std::filesystem::path out = o.out;
    if (train->parsed()) {
      const auto r = beamsense::app::cmd_train(cfg, out, log_line);
      std::cout << "checkpoint " << r.checkpoint.string() << '\n';
    } else if (evaluate->parsed()) {
      const auto r = beamsense::app::cmd_evaluate(cfg, out, log_line);
      std::cout << cfg.policy << " mean_thp " << beamsense::app::num(r.mean_thp) << " ci ["
                << beamsense::app::num(r.ci.low) << ", " << beamsense::app::num(r.ci.high) << "]\n";
    } else if (sweep->parsed()) {
      for (const auto& row : beamsense::app::cmd_sweep_speed(cfg, out, log_line)) {
        std::cout << row.policy << " v=" << beamsense::app::num(row.speed_mean) << " mean_thp "
                  << beamsense::app::num(row.mean_thp) << '\n';
      }
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  }
}
