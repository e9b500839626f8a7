#pragma once

// Actor-critic MLP: a shared trunk of two tanh layers feeding a softmax policy
// head and a scalar value head. Parameters live in one flat vector so the
// optimizer, checkpoints and gradient checks can treat them uniformly.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "beamsense/error.hpp"
#include "beamsense/random.hpp"
#include "beamsense/types.hpp"

namespace beamsense::rl {

using Matrix = Eigen::MatrixXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

struct NetworkShape {
  std::size_t inputs = 9;
  std::size_t hidden = 64;
  std::size_t actions = 9;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct TensorSlot {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index offset;
};

struct ForwardBatch {
  Matrix x, h1, h2, logits, probs;  // column per sample
  RVector values;
};

class ActorCritic {
 public:
  ActorCritic() : ActorCritic(NetworkShape{}) {}

  explicit ActorCritic(NetworkShape shape) : shape_(shape) {
    require(shape.inputs > 0 && shape.hidden > 0 && shape.actions > 0, ErrorKind::kInvalidArgument,
            "network dimensions must be positive");
    const auto in = static_cast<Eigen::Index>(shape.inputs);
    const auto h = static_cast<Eigen::Index>(shape.hidden);
    const auto a = static_cast<Eigen::Index>(shape.actions);
    Eigen::Index off = 0;
    auto add = [&](std::string name, Eigen::Index r, Eigen::Index c) {
      slots_.push_back({std::move(name), r, c, off});
      off += r * c;
    };
    add("trunk.0.weight", h, in);
    add("trunk.0.bias", h, 1);
    add("trunk.1.weight", h, h);
    add("trunk.1.bias", h, 1);
    add("actor.weight", a, h);
    add("actor.bias", a, 1);
    add("critic.weight", 1, h);
    add("critic.bias", 1, 1);
    params_ = RVector::Zero(off);
  }

  // Scaled Gaussian initialization; the policy head starts near uniform.
  void initialize(Rng& rng, double actor_gain = 0.01) {
    for (std::size_t s = 0; s < slots_.size(); ++s) {
      const auto& slot = slots_[s];
      if (slot.cols == 1) continue;  // biases stay zero
      double gain = std::sqrt(2.0);
      if (slot.name == "actor.weight") gain = actor_gain;
      if (slot.name == "critic.weight") gain = 1.0;
      const double scale = gain / std::sqrt(static_cast<double>(slot.cols));
      for (Eigen::Index i = 0; i < slot.rows * slot.cols; ++i) params_[slot.offset + i] = scale * standard_normal(rng);
    }
  }

  const NetworkShape& shape() const { return shape_; }
  const std::vector<TensorSlot>& slots() const { return slots_; }
  RVector& params() { return params_; }
  const RVector& params() const { return params_; }
  Eigen::Index size() const { return params_.size(); }

  MatrixMap tensor(std::size_t i) { return {params_.data() + slots_[i].offset, slots_[i].rows, slots_[i].cols}; }
  ConstMatrixMap tensor(std::size_t i) const {
    return {params_.data() + slots_[i].offset, slots_[i].rows, slots_[i].cols};
  }

  bool finite() const { return params_.allFinite(); }

  ForwardBatch forward(const Matrix& x) const {
    require(x.rows() == static_cast<Eigen::Index>(shape_.inputs), ErrorKind::kInvalidArgument,
            "policy_forward: observation dimension mismatch");
    if (!finite()) throw Error(ErrorKind::kNumericFailure, "non-finite network parameters");
    ForwardBatch f;
    f.x = x;
    f.h1 = ((tensor(0) * x).colwise() + RVector(tensor(1).col(0))).array().tanh();
    f.h2 = ((tensor(2) * f.h1).colwise() + RVector(tensor(3).col(0))).array().tanh();
    f.logits = (tensor(4) * f.h2).colwise() + RVector(tensor(5).col(0));
    f.probs.resize(f.logits.rows(), f.logits.cols());
    for (Eigen::Index c = 0; c < f.logits.cols(); ++c) {
      const double mx = f.logits.col(c).maxCoeff();
      const RVector e = (f.logits.col(c).array() - mx).exp();
      f.probs.col(c) = e / e.sum();
    }
    f.values = ((tensor(6) * f.h2).array() + tensor(7)(0, 0)).row(0).transpose();
    return f;
  }

  // Accumulates dL/dparams given dL/dlogits and dL/dvalue for each column.
  void backward(const ForwardBatch& f, const Matrix& dlogits, const RVector& dvalues, RVector& grad) const {
    require(grad.size() == params_.size(), ErrorKind::kInvalidArgument, "gradient size mismatch");
    auto g = [&](std::size_t i) -> MatrixMap { return {grad.data() + slots_[i].offset, slots_[i].rows, slots_[i].cols}; };
    g(4) += dlogits * f.h2.transpose();
    g(5) += dlogits.rowwise().sum();
    g(6) += dvalues.transpose() * f.h2.transpose();
    g(7)(0, 0) += dvalues.sum();
    Matrix dh2 = tensor(4).transpose() * dlogits + tensor(6).transpose() * dvalues.transpose();
    Matrix dz2 = dh2.array() * (1.0 - f.h2.array().square());
    g(2) += dz2 * f.h1.transpose();
    g(3) += dz2.rowwise().sum();
    Matrix dh1 = tensor(2).transpose() * dz2;
    Matrix dz1 = dh1.array() * (1.0 - f.h1.array().square());
    g(0) += dz1 * f.x.transpose();
    g(1) += dz1.rowwise().sum();
  }

 private:
  NetworkShape shape_;
  std::vector<TensorSlot> slots_;
  RVector params_;
};

struct PolicyOutput {
  RVector probs;
  double value = 0.0;
};

inline PolicyOutput policy_forward(const ActorCritic& net, const RVector& obs) {
  const auto f = net.forward(obs);
  return {f.probs.col(0), f.values[0]};
}

inline std::size_t sample_action(const RVector& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(probs.size() - 1);
}

inline std::size_t greedy_action(const RVector& probs) {
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

inline double log_prob(const RVector& probs, std::size_t action) {
  return std::log(std::max(probs[static_cast<Eigen::Index>(action)], 1e-300));
}

// Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, double lr, double eps = 1e-5, double beta1 = 0.9, double beta2 = 0.999)
      : lr_(lr), eps_(eps), beta1_(beta1), beta2_(beta2), m_(RVector::Zero(n)), v_(RVector::Zero(n)) {}

  void step(RVector& params, const RVector& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

  void set_lr(double lr) { lr_ = lr; }
  long steps() const { return t_; }

 private:
  double lr_ = 3e-4;
  double eps_ = 1e-5;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  RVector m_, v_;
  long t_ = 0;
};

}  // namespace beamsense::rl
