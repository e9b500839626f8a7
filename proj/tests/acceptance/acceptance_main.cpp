// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Artifacts go under --out (default: acceptance_out).

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "beamsense/app/commands.hpp"
#include "beamsense/check/oracles.hpp"

namespace {

namespace app = beamsense::app;
namespace sim = beamsense::sim;
using beamsense::check::CheckResult;

using Samples = std::vector<double>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const CheckResult& r, int index, bool& all) {
  std::cout << (r.passed ? "PASS" : "FAIL") << " [" << index << "] " << r.name << " (" << r.seconds
            << " s): " << r.detail << std::endl;
  all = all && r.passed;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << v;
  return s.str();
}

struct Comparison {
  bool ok = false;
  std::string text;
};

// Strict: disjoint bootstrap intervals or paired mean difference > 0.01.
Comparison strict(const std::string& a, const Samples& xa, const std::string& b, const Samples& xb) {
  const bool ok = sim::strictly_ahead(xa, xb);
  return {ok, a + " > " + b + " (diff " + fmt(sim::paired_mean_difference(xa, xb)) + ")"};
}

// Weak: paired mean difference >= -tolerance.
Comparison weak(const std::string& a, const Samples& xa, const std::string& b, const Samples& xb, double tol) {
  const double d = sim::paired_mean_difference(xa, xb);
  return {d >= -tol, a + " >= " + b + " (diff " + fmt(d) + ")"};
}

bool files_equal(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  return !sa.empty() && sa == sb;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"acceptance runner"};
  std::string out_dir = "acceptance_out";
  std::size_t episodes = 2000;
  std::size_t steps = 100000;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  cli.add_option("--out", out_dir, "artifact directory");
  cli.add_option("--episodes", episodes, "episodes per policy and speed");
  cli.add_option("--steps", steps, "PPO training steps");
  cli.add_option("--jobs", jobs, "worker threads");
  CLI11_PARSE(cli, argc, argv);

  const std::filesystem::path out = out_dir;
  bool all = true;

  const auto suites = beamsense::check::run_property_suites();
  for (std::size_t i = 0; i < suites.size(); ++i) report(suites[i], static_cast<int>(i + 1), all);

  app::ExperimentConfig cfg;
  cfg.episodes = episodes;
  cfg.jobs = jobs;
  cfg.train_steps = steps;
  cfg.checkpoint = (out / "train" / "checkpoint.json").string();
  const std::vector<std::string> policies{"aod-genie", "ppo", "aod", "xtdma-15", "xtdma-25", "xtdma-35"};
  const std::vector<double> speeds{15.0, 20.0, 25.0, 30.0};
  const auto log = [](const std::string& s) { std::cerr << "  " << s << std::endl; };

  // Criterion 7: training plus the v = 20 comparison.
  std::map<std::string, std::map<double, Samples>> thp;
  std::shared_ptr<const beamsense::rl::ActorCritic> net;
  {
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream detail;
    bool ok = true;
    try {
      app::cmd_train(cfg, out / "train", {});
      net = app::load_network(cfg);
      for (const auto& p : policies) {
        thp[p][20.0] = app::throughputs(app::run_policy(cfg, p, 20.0, net));
        log(p + " @ 20 m/s: mean Thp " + fmt(sim::mean(thp[p][20.0])));
      }
      const auto& t = thp;
      const std::vector<Comparison> cmp{
          weak("aod-genie", t.at("aod-genie").at(20.0), "ppo", t.at("ppo").at(20.0), 0.01),
          strict("ppo", t.at("ppo").at(20.0), "xtdma-25", t.at("xtdma-25").at(20.0)),
          strict("xtdma-25", t.at("xtdma-25").at(20.0), "xtdma-15", t.at("xtdma-15").at(20.0)),
          strict("xtdma-25", t.at("xtdma-25").at(20.0), "xtdma-35", t.at("xtdma-35").at(20.0)),
          strict("ppo", t.at("ppo").at(20.0), "aod", t.at("aod").at(20.0)),
      };
      detail << "means:";
      for (const auto& p : policies) detail << ' ' << p << '=' << fmt(sim::mean(t.at(p).at(20.0)));
      detail << "; ";
      for (const auto& c : cmp) {
        detail << (c.ok ? "ok " : "VIOLATED ") << c.text << "; ";
        ok = ok && c.ok;
      }
    } catch (const std::exception& e) {
      detail << "exception: " << e.what();
      ok = false;
    }
    report({"Thp ordering at v = 20", ok, detail.str(), seconds_since(t0), 0.0}, 7, all);
  }

  // Criterion 8: speed sweep on shared seeds.
  {
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream detail;
    bool ok = true;
    try {
      if (!net) throw beamsense::Error(beamsense::ErrorKind::kConfigError, "no trained network");
      std::vector<app::SweepRow> rows;
      for (const auto& p : policies) {
        for (double v : speeds) {
          auto& xs = thp[p][v];
          if (xs.empty()) {
            xs = app::throughputs(app::run_policy(cfg, p, v, net));
            log(p + " @ " + fmt(v) + " m/s: mean Thp " + fmt(sim::mean(xs)));
          }
          rows.push_back({p, v, xs.size(), sim::mean(xs), sim::bootstrap_ci(xs)});
        }
      }
      const auto path = out / "sweep" / "sweep.csv";
      auto f = app::open_output(path);
      app::write_sweep(f, rows);
      app::close_checked(f, path);

      for (const auto& p : policies) {
        const double m15 = sim::mean(thp[p][15.0]);
        const double m30 = sim::mean(thp[p][30.0]);
        const bool mono = m30 <= m15 + 0.02;
        detail << (mono ? "ok " : "VIOLATED ") << p << " v30 " << fmt(m30) << " <= v15 " << fmt(m15) << " + 0.02; ";
        ok = ok && mono;
      }
      for (double v : speeds) {
        for (const auto& p : policies) {
          if (p.rfind("xtdma", 0) != 0) continue;
          const auto c = weak("ppo", thp["ppo"][v], p, thp[p][v], 0.01);
          if (!c.ok) detail << "VIOLATED at v=" << fmt(v) << ' ' << c.text << "; ";
          ok = ok && c.ok;
        }
      }
      if (ok) detail << "ppo >= every xtdma variant at every speed within 0.01";
    } catch (const std::exception& e) {
      detail << "exception: " << e.what();
      ok = false;
    }
    report({"Thp versus speed", ok, detail.str(), seconds_since(t0), 0.0}, 8, all);
  }

  // Criterion 9: two full evaluate runs, one serial and one threaded.
  {
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream detail;
    bool ok = true;
    try {
      auto a = cfg;
      a.policy = net ? "ppo" : "xtdma-25";
      a.jobs = 1;
      auto b = a;
      b.jobs = std::max<std::size_t>(2, jobs);
      const auto ra = app::cmd_evaluate(a, out / "determinism" / "run1");
      const auto rb = app::cmd_evaluate(b, out / "determinism" / "run2");
      const bool eq1 = files_equal(ra.episodes_csv, rb.episodes_csv);
      const bool eq2 = files_equal(ra.cdf_csv, rb.cdf_csv);
      ok = eq1 && eq2;
      detail << "policy " << a.policy << ", " << a.episodes << " episodes, jobs 1 vs " << b.jobs
             << ": episodes.csv " << (eq1 ? "identical" : "DIFFERENT") << ", cdf.csv "
             << (eq2 ? "identical" : "DIFFERENT");
    } catch (const std::exception& e) {
      detail << "exception: " << e.what();
      ok = false;
    }
    report({"byte-identical reruns", ok, detail.str(), seconds_since(t0), 0.0}, 9, all);
  }

  std::cout << (all ? "ALL PASS" : "SOME CRITERIA FAILED") << std::endl;
  return all ? 0 : 1;
}
