#pragma once

// Experiment configuration as an INI file. Every key has a default, unknown
// sections and keys are rejected, and serialize() writes every key so that
// parse(serialize(c)) == c.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "beamsense/error.hpp"
#include "beamsense/rl/ppo.hpp"
#include "beamsense/sensing.hpp"
#include "beamsense/sim/frame_config.hpp"
#include "beamsense/sim/policy.hpp"

namespace beamsense::app {

struct ExperimentConfig {
  std::string experiment_id = "default";
  std::uint64_t seed = 1;
  std::size_t episodes = 2000;
  std::size_t jobs = 1;
  std::string policy = "xtdma-25";
  std::vector<double> sweep_speeds{15.0, 20.0, 25.0, 30.0};
  std::vector<std::string> sweep_policies{"aod-genie", "ppo", "aod", "xtdma-15", "xtdma-25", "xtdma-35"};
  std::string checkpoint;  // PPO checkpoint to load for ppo evaluation; empty: none

  sim::FrameConfig frame;

  long train_steps = 100000;
  std::uint64_t train_seed = 1;
  std::size_t spawn_sets = 12;
  std::size_t hidden = 64;
  rl::PpoHyperparams ppo;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorKind::kConfigError, "key '" + key + "': cannot parse '" + value + "' as " + expected);
}

inline double parse_double(const std::string& key, const std::string& value) {
  if (value == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(v)) bad_value(key, value, "a number");
  return v;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "an integer");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "a boolean (true/false)");
}

inline CrlbForm parse_crlb_form(const std::string& key, const std::string& value) {
  if (value == "fisher") return CrlbForm::kFisher;
  if (value == "second-derivative") return CrlbForm::kSecondDerivative;
  bad_value(key, value, "fisher or second-derivative");
}

inline std::string crlb_form_name(CrlbForm f) { return f == CrlbForm::kFisher ? "fisher" : "second-derivative"; }

// One binding per key: how to read it into the config and how to print it.
struct Binding {
  std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> read;
  std::function<std::string(const ExperimentConfig&)> write;
};

// Ordered (section, key) table; the order is the serialization order.
using BindingTable = std::vector<std::pair<std::string, Binding>>;

#define BEAMSENSE_REAL(path, expr)                                                                          \
  {                                                                                                         \
    path, Binding {                                                                                         \
      [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.expr = parse_double(k, v); }, \
          [](const ExperimentConfig& c) { return format_double(c.expr); }                                   \
    }                                                                                                       \
  }
#define BEAMSENSE_INT(path, expr)                                                                             \
  {                                                                                                           \
    path, Binding {                                                                                           \
      [](ExperimentConfig& c, const std::string& k, const std::string& v) {                                   \
        c.expr = parse_int<std::remove_cvref_t<decltype(c.expr)>>(k, v);                                      \
      },                                                                                                      \
          [](const ExperimentConfig& c) { return std::to_string(c.expr); }                                    \
    }                                                                                                         \
  }
#define BEAMSENSE_BOOL(path, expr)                                                                          \
  {                                                                                                         \
    path, Binding {                                                                                         \
      [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.expr = parse_bool(k, v); },   \
          [](const ExperimentConfig& c) { return std::string(c.expr ? "true" : "false"); }                  \
    }                                                                                                       \
  }
#define BEAMSENSE_STRING(path, expr)                                                                        \
  {                                                                                                         \
    path, Binding {                                                                                         \
      [](ExperimentConfig& c, const std::string&, const std::string& v) { c.expr = v; },                    \
          [](const ExperimentConfig& c) { return c.expr; }                                                  \
    }                                                                                                       \
  }

inline const BindingTable& bindings() {
  static const BindingTable table = {
      BEAMSENSE_STRING("experiment.id", experiment_id),
      BEAMSENSE_INT("experiment.seed", seed),
      BEAMSENSE_INT("experiment.episodes", episodes),
      BEAMSENSE_INT("experiment.jobs", jobs),
      BEAMSENSE_STRING("experiment.policy", policy),
      {"experiment.sweep_speeds",
       Binding{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                 c.sweep_speeds.clear();
                 for (const auto& item : split_list(v)) c.sweep_speeds.push_back(parse_double(k, item));
               },
               [](const ExperimentConfig& c) {
                 std::string s;
                 for (std::size_t i = 0; i < c.sweep_speeds.size(); ++i) {
                   if (i > 0) s += ", ";
                   s += format_double(c.sweep_speeds[i]);
                 }
                 return s;
               }}},
      {"experiment.sweep_policies",
       Binding{[](ExperimentConfig& c, const std::string&, const std::string& v) { c.sweep_policies = split_list(v); },
               [](const ExperimentConfig& c) {
                 std::string s;
                 for (std::size_t i = 0; i < c.sweep_policies.size(); ++i) {
                   if (i > 0) s += ", ";
                   s += c.sweep_policies[i];
                 }
                 return s;
               }}},
      BEAMSENSE_STRING("experiment.checkpoint", checkpoint),

      BEAMSENSE_INT("frame.ttis", frame.ttis),
      BEAMSENSE_REAL("frame.tti_seconds", frame.tti_seconds),
      BEAMSENSE_INT("frame.users", frame.users),
      BEAMSENSE_INT("frame.packet_trials", frame.packet_trials),
      BEAMSENSE_REAL("frame.packet_prob", frame.packet_prob),
      BEAMSENSE_INT("frame.packets_per_success", frame.packets_per_success),
      BEAMSENSE_REAL("frame.speed_mean", frame.speed_mean),
      BEAMSENSE_REAL("frame.speed_std", frame.speed_std),
      BEAMSENSE_REAL("frame.min_separation_steps", frame.min_separation_steps),

      BEAMSENSE_REAL("link.total_power_w", frame.link.total_power_w),
      BEAMSENSE_REAL("link.noise_power_w", frame.link.noise_power_w),
      BEAMSENSE_REAL("link.rate_threshold", frame.link.rate_threshold),

      BEAMSENSE_INT("channel.antennas", frame.channel.n_antennas),
      BEAMSENSE_REAL("channel.carrier_hz", frame.channel.carrier_hz),
      BEAMSENSE_REAL("channel.rician_k", frame.channel.rician_k),
      BEAMSENSE_INT("channel.paths", frame.channel.n_paths),

      BEAMSENSE_REAL("sensing.sample_rate", frame.sensing.sample_rate),
      BEAMSENSE_REAL("sensing.integration_time", frame.sensing.integration_time),
      BEAMSENSE_REAL("sensing.rcs", frame.sensing.rcs),
      BEAMSENSE_INT("sensing.aod_oversampling", frame.sensing.aod_oversampling),
      BEAMSENSE_REAL("sensing.max_speed", frame.sensing.max_speed),
      {"sensing.crlb_form",
       Binding{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                 c.frame.crlb_form = parse_crlb_form(k, v);
               },
               [](const ExperimentConfig& c) { return crlb_form_name(c.frame.crlb_form); }}},

      BEAMSENSE_REAL("grid.half_extent", frame.grid.half_extent),
      BEAMSENSE_REAL("grid.street_offset", frame.grid.street_offset),

      BEAMSENSE_REAL("policy.physical_threshold", frame.physical_threshold),
      BEAMSENSE_BOOL("policy.xtdma_multibeam", frame.xtdma_multibeam),
      BEAMSENSE_BOOL("policy.xtdma_hold_sweep_estimate", frame.xtdma_hold_sweep_estimate),

      BEAMSENSE_INT("ppo.train_steps", train_steps),
      BEAMSENSE_INT("ppo.train_seed", train_seed),
      BEAMSENSE_INT("ppo.spawn_sets", spawn_sets),
      BEAMSENSE_INT("ppo.hidden", hidden),
      BEAMSENSE_REAL("ppo.clip", ppo.clip),
      BEAMSENSE_REAL("ppo.gamma", ppo.gamma),
      BEAMSENSE_REAL("ppo.gae_lambda", ppo.gae_lambda),
      BEAMSENSE_REAL("ppo.learning_rate", ppo.learning_rate),
      BEAMSENSE_INT("ppo.rollout_steps", ppo.rollout_steps),
      BEAMSENSE_INT("ppo.epochs", ppo.epochs),
      BEAMSENSE_INT("ppo.minibatch", ppo.minibatch),
      BEAMSENSE_REAL("ppo.entropy_coef", ppo.entropy_coef),
      BEAMSENSE_REAL("ppo.value_coef", ppo.value_coef),
      BEAMSENSE_REAL("ppo.max_grad_norm", ppo.max_grad_norm),
      BEAMSENSE_BOOL("ppo.normalize_advantages", ppo.normalize_advantages),
  };
  return table;
}

#undef BEAMSENSE_REAL
#undef BEAMSENSE_INT
#undef BEAMSENSE_BOOL
#undef BEAMSENSE_STRING

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  c.frame.validate();
  c.ppo.validate();
  require(c.episodes >= 1, ErrorKind::kConfigError, "experiment.episodes must be >= 1");
  require(c.jobs >= 1, ErrorKind::kConfigError, "experiment.jobs must be >= 1");
  require(!c.sweep_speeds.empty(), ErrorKind::kConfigError, "experiment.sweep_speeds must not be empty");
  for (double v : c.sweep_speeds) require(v >= 0.0, ErrorKind::kConfigError, "sweep speeds must be >= 0");
  require(!c.sweep_policies.empty(), ErrorKind::kConfigError, "experiment.sweep_policies must not be empty");
  sim::parse_policy(c.policy);
  for (const auto& p : c.sweep_policies) sim::parse_policy(p);
  require(c.train_steps >= 0, ErrorKind::kConfigError, "ppo.train_steps must be >= 0");
  require(c.spawn_sets >= 1 && c.hidden >= 1, ErrorKind::kConfigError, "ppo.spawn_sets and ppo.hidden must be >= 1");
  require(c.ppo.clip == 0.2, ErrorKind::kConfigError, "ppo.clip is fixed at 0.2");
}

inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::kConfigError, origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  std::map<std::string, const detail::Binding*> known;
  for (const auto& [path, b] : detail::bindings()) known.emplace(path, &b);
  ExperimentConfig c;
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) {
      throw Error(ErrorKind::kConfigError, origin + ": key '" + section + "' outside of any section");
    }
    for (const auto& [key, node] : keys) {
      const std::string path = section + "." + key;
      const auto it = known.find(path);
      if (it == known.end()) throw Error(ErrorKind::kConfigError, origin + ": unknown key '" + path + "'");
      it->second->read(c, path, detail::trim(node.data()));
    }
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open config file '" + path + "'");
  return parse_config(in, path);
}

inline std::string serialize(const ExperimentConfig& c) {
  std::ostringstream out;
  std::string current;
  for (const auto& [path, b] : detail::bindings()) {
    const auto dot = path.find('.');
    const std::string section = path.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << path.substr(dot + 1) << " = " << b.write(c) << '\n';
  }
  return out.str();
}

}  // namespace beamsense::app
