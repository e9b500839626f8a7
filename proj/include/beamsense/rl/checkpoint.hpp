#pragma once

// Checkpoint layout (JSON, UTF-8):
//   {
//     "format": "beamsense-ppo", "version": 1,
//     "training_steps": <int>,
//     "hyperparams": { "clip": .., "gamma": .., ... },
//     "feature_scaling": { "total_packets_scale": .., "noise_power": .., "clip": .. },
//     "architecture": { "inputs": 9, "hidden": 64, "actions": 9, "activation": "tanh" },
//     "tensors": [ { "name": "trunk.0.weight", "shape": [64, 9], "data": [row-major] }, ... ]
//   }
// Tensors appear in forward order: trunk.0, trunk.1, actor, critic (weight, bias).

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "beamsense/error.hpp"
#include "beamsense/rl/network.hpp"
#include "beamsense/rl/observation.hpp"
#include "beamsense/rl/ppo.hpp"

namespace beamsense::rl {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "beamsense-ppo";

struct Checkpoint {
  ActorCritic network;
  PpoHyperparams hyperparams;
  FeatureScaling scaling;
  long training_steps = 0;
};

inline nlohmann::json to_json(const Checkpoint& ck) {
  using nlohmann::json;
  const auto& hp = ck.hyperparams;
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["training_steps"] = ck.training_steps;
  j["hyperparams"] = {{"clip", hp.clip},
                      {"gamma", hp.gamma},
                      {"gae_lambda", hp.gae_lambda},
                      {"learning_rate", hp.learning_rate},
                      {"rollout_steps", hp.rollout_steps},
                      {"epochs", hp.epochs},
                      {"minibatch", hp.minibatch},
                      {"entropy_coef", hp.entropy_coef},
                      {"value_coef", hp.value_coef},
                      {"max_grad_norm", hp.max_grad_norm},
                      {"normalize_advantages", hp.normalize_advantages}};
  j["feature_scaling"] = {{"total_packets_scale", ck.scaling.total_packets_scale},
                          {"noise_power", ck.scaling.noise_power},
                          {"clip", ck.scaling.clip}};
  const auto& sh = ck.network.shape();
  j["architecture"] = {
      {"inputs", sh.inputs}, {"hidden", sh.hidden}, {"actions", sh.actions}, {"activation", "tanh"}};
  json tensors = json::array();
  for (std::size_t i = 0; i < ck.network.slots().size(); ++i) {
    const auto& slot = ck.network.slots()[i];
    const auto t = ck.network.tensor(i);
    json data = json::array();
    for (Eigen::Index r = 0; r < slot.rows; ++r) {
      for (Eigen::Index c = 0; c < slot.cols; ++c) data.push_back(t(r, c));
    }
    // Biases are stored as 1-D tensors.
    json shape = slot.cols == 1 ? json::array({slot.rows}) : json::array({slot.rows, slot.cols});
    tensors.push_back({{"name", slot.name}, {"shape", shape}, {"data", std::move(data)}});
  }
  j["tensors"] = std::move(tensors);
  return j;
}

inline Checkpoint from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(ErrorKind::kIoError, "checkpoint: unrecognized format tag");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorKind::kIoError, "checkpoint: unsupported version " + std::to_string(j.at("version").get<int>()));
    }
    Checkpoint ck;
    ck.training_steps = j.at("training_steps").get<long>();
    const auto& h = j.at("hyperparams");
    auto& hp = ck.hyperparams;
    hp.clip = h.at("clip").get<double>();
    hp.gamma = h.at("gamma").get<double>();
    hp.gae_lambda = h.at("gae_lambda").get<double>();
    hp.learning_rate = h.at("learning_rate").get<double>();
    hp.rollout_steps = h.at("rollout_steps").get<std::size_t>();
    hp.epochs = h.at("epochs").get<std::size_t>();
    hp.minibatch = h.at("minibatch").get<std::size_t>();
    hp.entropy_coef = h.at("entropy_coef").get<double>();
    hp.value_coef = h.at("value_coef").get<double>();
    hp.max_grad_norm = h.at("max_grad_norm").get<double>();
    hp.normalize_advantages = h.at("normalize_advantages").get<bool>();
    const auto& fs = j.at("feature_scaling");
    ck.scaling.total_packets_scale = fs.at("total_packets_scale").get<double>();
    ck.scaling.noise_power = fs.at("noise_power").get<double>();
    ck.scaling.clip = fs.at("clip").get<double>();
    const auto& a = j.at("architecture");
    NetworkShape shape{a.at("inputs").get<std::size_t>(), a.at("hidden").get<std::size_t>(),
                       a.at("actions").get<std::size_t>()};
    ck.network = ActorCritic(shape);
    const auto& tensors = j.at("tensors");
    if (tensors.size() != ck.network.slots().size()) throw Error(ErrorKind::kIoError, "checkpoint: tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& slot = ck.network.slots()[i];
      const auto& t = tensors[i];
      if (t.at("name").get<std::string>() != slot.name) {
        throw Error(ErrorKind::kIoError, "checkpoint: expected tensor " + slot.name);
      }
      const auto& data = t.at("data");
      if (data.size() != static_cast<std::size_t>(slot.rows * slot.cols)) {
        throw Error(ErrorKind::kIoError, "checkpoint: wrong element count in " + slot.name);
      }
      auto dst = ck.network.tensor(i);
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < slot.rows; ++r) {
        for (Eigen::Index c = 0; c < slot.cols; ++c) dst(r, c) = data[k++].get<double>();
      }
    }
    if (!ck.network.finite()) throw Error(ErrorKind::kNumericFailure, "checkpoint holds non-finite parameters");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kIoError, std::string("checkpoint: malformed JSON: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write checkpoint " + path.string());
  // max_digits10 round trip is guaranteed by the serializer.
  out << to_json(ck).dump(1) << '\n';
  if (!out) throw Error(ErrorKind::kIoError, "failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kIoError, std::string("checkpoint: malformed JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace beamsense::rl
