#pragma once

// CSV tables written by the commands. Headers are fixed; numbers use the
// shortest round-trip representation, so equal runs give equal bytes.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beamsense/error.hpp"
#include "beamsense/sim/episode.hpp"
#include "beamsense/sim/metrics.hpp"
#include "beamsense/sim/trainer.hpp"

namespace beamsense::app {

inline constexpr std::string_view kEpisodesHeader =
    "experiment_id,policy,speed_mean,seed,episode,thp,mean_sinr_db,sensing_fraction";
inline constexpr std::string_view kCdfHeader = "thp,cdf";
inline constexpr std::string_view kSweepHeader = "policy,speed_mean,episodes,mean_thp,ci_low,ci_high";
inline constexpr std::string_view kTrainingHeader =
    "update,steps,episodes,mean_reward,mean_episode_thp,policy_loss,value_loss,entropy,approx_kl,clip_fraction";

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Opens `path` for writing, creating parent directories.
inline std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write '" + path.string() + "'");
  return out;
}

inline void close_checked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw Error(ErrorKind::kIoError, "error while writing '" + path.string() + "'");
}

inline void write_episodes(std::ostream& out, std::string_view experiment_id, double speed_mean,
                           std::span<const sim::EpisodeResult> rows, bool header = true) {
  if (header) out << kEpisodesHeader << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << experiment_id << ',' << r.policy << ',' << num(speed_mean) << ',' << r.seed << ',' << i << ','
        << num(r.thp) << ',' << num(r.mean_sinr_db) << ',' << num(r.sensing_fraction) << '\n';
  }
}

inline void write_cdf(std::ostream& out, std::span<const sim::CdfPoint> cdf) {
  out << kCdfHeader << '\n';
  for (const auto& p : cdf) out << num(p.x) << ',' << num(p.cdf) << '\n';
}

struct SweepRow {
  std::string policy;
  double speed_mean = 0.0;
  std::size_t episodes = 0;
  double mean_thp = 0.0;
  sim::Interval ci;
};

inline void write_sweep(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << r.policy << ',' << num(r.speed_mean) << ',' << r.episodes << ',' << num(r.mean_thp) << ','
        << num(r.ci.low) << ',' << num(r.ci.high) << '\n';
  }
}

inline void write_training_header(std::ostream& out) { out << kTrainingHeader << '\n'; }

inline void write_training_row(std::ostream& out, const sim::UpdateRow& r) {
  out << r.update << ',' << r.steps << ',' << r.episodes << ',' << num(r.mean_reward) << ','
      << num(r.mean_episode_thp) << ',' << num(r.diag.policy_loss) << ',' << num(r.diag.value_loss) << ','
      << num(r.diag.entropy) << ',' << num(r.diag.approx_kl) << ',' << num(r.diag.clip_fraction) << '\n';
}

}  // namespace beamsense::app
