#pragma once

// Uniform linear array primitives: steering vectors, the DFT codebook,
// composite (multi-codeword) beams and beam gain.
//
// Angles are "normalized": theta = pi * sin(physical), the per-element phase
// progression of a half-wavelength ULA. Codeword i is the steering vector of
// its grid angle, so |a^H(phi_i) f_i|^2 = 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "beamsense/error.hpp"
#include "beamsense/types.hpp"

namespace beamsense {

inline double normalized_from_physical(double physical_rad) { return kPi * std::sin(physical_rad); }

inline double physical_from_normalized(double theta) {
  return std::asin(std::clamp(theta / kPi, -1.0, 1.0));
}

inline CVector steering_vector(double theta, std::size_t n) {
  require(n >= 1, ErrorKind::kInvalidArgument, "steering_vector: n must be >= 1");
  CVector a(static_cast<Eigen::Index>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    a[static_cast<Eigen::Index>(k)] = std::polar(scale, static_cast<double>(k) * theta);
  }
  return a;
}

// Element-wise derivatives of the steering vector with respect to theta.
inline CVector steering_derivative(double theta, std::size_t n, int order) {
  CVector a = steering_vector(theta, n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex jk(0.0, static_cast<double>(k));
    Complex factor(1.0, 0.0);
    for (int o = 0; o < order; ++o) factor *= jk;
    a[static_cast<Eigen::Index>(k)] *= factor;
  }
  return a;
}

class Codebook {
 public:
  explicit Codebook(std::size_t n) : n_(n) {
    require(n >= 1, ErrorKind::kInvalidArgument, "dft_codebook: n must be >= 1");
    angles_.reserve(n);
    words_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      // phi_i = pi (2i - 1 - N)/N with 1-based i; here i is 0-based.
      const double phi = kPi * (2.0 * static_cast<double>(i) + 1.0 - static_cast<double>(n)) /
                         static_cast<double>(n);
      angles_.push_back(phi);
      words_.col(static_cast<Eigen::Index>(i)) = steering_vector(phi, n);
    }
  }

  std::size_t size() const { return n_; }
  double grid_step() const { return kTwoPi / static_cast<double>(n_); }
  double angle(std::size_t i) const { return angles_.at(i); }
  std::span<const double> angles() const { return angles_; }
  const CMatrix& matrix() const { return words_; }
  CVector codeword(std::size_t i) const {
    require(i < n_, ErrorKind::kInvalidArgument, "codeword index out of range");
    return words_.col(static_cast<Eigen::Index>(i));
  }

  // Index of the grid angle nearest to theta; ties go to the smaller index and
  // angles outside the grid clamp to the edge codewords.
  std::size_t nearest(double theta) const {
    const double pos = (theta + kPi) / grid_step() - 0.5;
    if (!(pos > 0.0)) return 0;
    const double last = static_cast<double>(n_ - 1);
    if (pos >= last) return n_ - 1;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n_ - 1);
    const double d_lo = std::abs(theta - angles_[lo]);
    const double d_hi = std::abs(angles_[hi] - theta);
    constexpr double kTieTolerance = 1e-12;
    return d_hi < d_lo - kTieTolerance ? hi : lo;
  }

 private:
  std::size_t n_;
  std::vector<double> angles_;
  CMatrix words_;
};

inline Codebook dft_codebook(std::size_t n) { return Codebook(n); }

// Equal-power superposition of codewords: w = sum_{i in C} e^{j psi_i} f_i / sqrt(|C|).
// Members are co-phased about the array center, psi_i = -(N-1)(phi_i - phi_first)/2.
// With the element-0 phase reference of the codewords, adjacent members would
// otherwise cancel halfway between their grid angles (gain ~0.003 at N = 32
// instead of ~0.81). A single codeword keeps its weight unchanged.
class CompositeBeam {
 public:
  CompositeBeam() = default;

  CompositeBeam(const Codebook& codebook, std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    require(!indices_.empty(), ErrorKind::kInvalidArgument, "composite beam needs at least one codeword");
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    weight_ = CVector::Zero(static_cast<Eigen::Index>(codebook.size()));
    const double half_aperture = (static_cast<double>(codebook.size()) - 1.0) / 2.0;
    const double ref = codebook.angle(indices_.front());
    for (auto i : indices_) weight_ += std::polar(1.0, -half_aperture * (codebook.angle(i) - ref)) * codebook.codeword(i);
    weight_ /= std::sqrt(static_cast<double>(indices_.size()));
  }

  static CompositeBeam single(const Codebook& codebook, std::size_t index) {
    return CompositeBeam(codebook, {index});
  }

  const std::vector<std::size_t>& indices() const { return indices_; }
  const CVector& weight() const { return weight_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::size_t front() const { return indices_.front(); }
  std::size_t back() const { return indices_.back(); }

  // Mean grid angle of the member codewords.
  double center_angle(const Codebook& codebook) const {
    double s = 0.0;
    for (auto i : indices_) s += codebook.angle(i);
    return s / static_cast<double>(indices_.size());
  }

  friend bool operator==(const CompositeBeam& a, const CompositeBeam& b) { return a.indices_ == b.indices_; }

 private:
  std::vector<std::size_t> indices_;
  CVector weight_;
};

// |a^H(theta) w|^2
inline double beam_gain(double theta, const CVector& weight) {
  const CVector a = steering_vector(theta, static_cast<std::size_t>(weight.size()));
  return std::norm(a.dot(weight));
}

inline double beam_gain(double theta, const CompositeBeam& beam) {
  require(!beam.empty(), ErrorKind::kInvalidArgument, "beam_gain: empty beam");
  return beam_gain(theta, beam.weight());
}

inline double beam_gain(double theta, const CompositeBeam& beam, std::size_t n_antennas) {
  require(static_cast<std::size_t>(beam.weight().size()) == n_antennas, ErrorKind::kInvalidArgument,
          "beam_gain: dimension mismatch");
  return beam_gain(theta, beam);
}

// Physical 3 dB beamwidth, 2 asin(1.2 / n).
inline double beamwidth_3db(std::size_t n) {
  require(n >= 2, ErrorKind::kInvalidArgument, "beamwidth_3db: n must be >= 2");
  return 2.0 * std::asin(1.2 / static_cast<double>(n));
}

// Physical-angle threshold mapped into the normalized domain around the
// operating angle theta (local linearization of pi sin).
inline double normalized_threshold(double physical_threshold, double theta) {
  return kPi * std::cos(physical_from_normalized(theta)) * physical_threshold;
}

}  // namespace beamsense
