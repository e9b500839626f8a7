#pragma once

// Monostatic sensing: echo synthesis at the co-located receive array and the
// per-user estimation chain (matched-filter delay/Doppler search, waveform
// compensation, AoD spectrum peak, Cramer-Rao bound, beamforming output).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "beamsense/array_geometry.hpp"
#include "beamsense/error.hpp"
#include "beamsense/random.hpp"
#include "beamsense/types.hpp"

namespace beamsense {

struct SensingParams {
  double sample_rate = 1.0e6;        // Hz
  double integration_time = 1.0e-3;  // s of echo integrated per TTI
  double rcs = 25.0;                 // m^2
  std::size_t aod_oversampling = 8;  // AoD search grid points per codebook step
  double max_speed = 40.0;           // m/s covered by the Doppler grid

  std::size_t samples() const { return static_cast<std::size_t>(std::llround(integration_time * sample_rate)); }

  bool operator==(const SensingParams&) const = default;
};

// beta = N sqrt(v_c^2 rcs / f_c^2 / (4 pi)^3 / d^4)
inline double reflection_coefficient(double distance, std::size_t n_antennas, double carrier_hz, double rcs) {
  const double lambda = kSpeedOfLight / carrier_hz;
  return static_cast<double>(n_antennas) *
         std::sqrt(lambda * lambda * rcs / std::pow(4.0 * kPi, 3.0) / std::pow(distance, 4.0));
}

// Unit-power QPSK sequence; independent draws are uncorrelated across users.
inline CVector qpsk_waveform(std::size_t m, Rng& rng) {
  CVector s(static_cast<Eigen::Index>(m));
  const double a = 1.0 / std::sqrt(2.0);
  for (Eigen::Index t = 0; t < s.size(); ++t) {
    const auto bits = rng();
    s[t] = Complex((bits & 1U) ? a : -a, (bits & 2U) ? a : -a);
  }
  return s;
}

struct EchoTarget {
  double aod = 0.0;      // normalized
  double beta = 0.0;     // reflection coefficient
  double doppler = 0.0;  // Hz
  double delay = 0.0;    // s, round trip
};

struct EchoFrame {
  CMatrix samples;  // N_r x M, column t is y(t)
  double sample_rate = 0.0;
  std::vector<double> betas;

  Eigen::Index n_rx() const { return samples.rows(); }
  Eigen::Index n_samples() const { return samples.cols(); }
};

// Y(t) = sum_u beta_u e^{j 2 pi mu_u t} a(phi_u) a^H(phi_u) s(t - tau_u) + w(t),
// s(t) = sum_i sqrt(P_i) f_i s_i(t). Delays are applied as whole-sample lags.
inline EchoFrame synthesize_echo(std::span<const EchoTarget> targets, std::span<const CVector> beam_weights,
                                 std::span<const double> powers, std::span<const CVector> waveforms,
                                 double sample_rate, double noise_power, Rng& rng, bool add_noise = true) {
  require(beam_weights.size() == powers.size() && powers.size() == waveforms.size(), ErrorKind::kInvalidArgument,
          "synthesize_echo: inconsistent stream counts");
  require(!waveforms.empty() && waveforms.front().size() >= 1, ErrorKind::kInvalidArgument,
          "synthesize_echo: need at least one sample");
  const Eigen::Index m = waveforms.front().size();
  const Eigen::Index n = beam_weights.front().size();
  EchoFrame frame;
  frame.sample_rate = sample_rate;
  frame.samples = CMatrix::Zero(n, m);
  for (const auto& tgt : targets) {
    frame.betas.push_back(tgt.beta);
    const CVector a = steering_vector(tgt.aod, static_cast<std::size_t>(n));
    // Scalar stream a^H(phi) s(t) before delay and Doppler.
    CVector proj = CVector::Zero(m);
    for (std::size_t i = 0; i < waveforms.size(); ++i) {
      if (powers[i] <= 0.0) continue;
      const Complex g = std::sqrt(powers[i]) * a.dot(beam_weights[i]);
      proj += g * waveforms[i];
    }
    const auto lag = static_cast<Eigen::Index>(std::llround(tgt.delay * sample_rate));
    for (Eigen::Index t = 0; t < m; ++t) {
      const Eigen::Index src = t - lag;
      if (src < 0 || src >= m) continue;
      const double time = static_cast<double>(t) / sample_rate;
      const Complex c = tgt.beta * std::polar(1.0, kTwoPi * tgt.doppler * time) * proj[src];
      frame.samples.col(t) += c * a;
    }
  }
  if (add_noise) {
    const double s = std::sqrt(noise_power / 2.0);
    boost::random::normal_distribution<double> nd(0.0, s);
    for (Eigen::Index t = 0; t < m; ++t) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double re = nd(rng);
        const double im = nd(rng);
        frame.samples(r, t) += Complex(re, im);
      }
    }
  }
  return frame;
}

// The receiver reads the echo only through the combined streams z_i = f_i^H Y
// and through Y w for time weights w. CompressedEcho draws exactly those
// quantities with the joint law of the full frame, at O(U M) noise draws
// instead of O(N M). With a unitary Q whose first U columns contain every
// combiner, the noise splits into A = Q_F^H W (U x M, drawn in full) and
// B = Q_perp^H W, which only enters as B [w_1 .. w_U] = (B Q_w) R_w for a thin
// QR of the weights; B Q_w is again white. Draw counts do not depend on the
// beams, powers or estimates.
class CompressedEcho {
 public:
  CompressedEcho(std::span<const EchoTarget> targets, std::span<const CVector> beam_weights,
                 std::span<const double> powers, std::span<const CVector> waveforms, double sample_rate,
                 double noise_power, Rng& rng, bool add_noise = true)
      : sample_rate_(sample_rate), noise_power_(noise_power), add_noise_(add_noise) {
    require(beam_weights.size() == powers.size() && powers.size() == waveforms.size() && !waveforms.empty(),
            ErrorKind::kInvalidArgument, "CompressedEcho: inconsistent stream counts");
    const Eigen::Index m = waveforms.front().size();
    const Eigen::Index n = beam_weights.front().size();
    const auto u = static_cast<Eigen::Index>(beam_weights.size());
    require(m >= 1 && u <= n, ErrorKind::kInvalidArgument, "CompressedEcho: need M >= 1 and U <= N");
    CMatrix f(n, u);
    for (Eigen::Index i = 0; i < u; ++i) f.col(i) = beam_weights[static_cast<std::size_t>(i)];

    steer_.resize(n, static_cast<Eigen::Index>(targets.size()));
    signal_ = CMatrix::Zero(static_cast<Eigen::Index>(targets.size()), m);
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const auto& tgt = targets[k];
      const auto kk = static_cast<Eigen::Index>(k);
      steer_.col(kk) = steering_vector(tgt.aod, static_cast<std::size_t>(n));
      CVector proj = CVector::Zero(m);
      for (std::size_t i = 0; i < waveforms.size(); ++i) {
        if (powers[i] <= 0.0) continue;
        proj += std::sqrt(powers[i]) * steer_.col(kk).dot(beam_weights[i]) * waveforms[i];
      }
      const auto lag = static_cast<Eigen::Index>(std::llround(tgt.delay * sample_rate));
      // Phasor recurrence, re-anchored every 64 samples to bound rounding drift.
      const Complex rot = std::polar(1.0, kTwoPi * tgt.doppler / sample_rate);
      Complex ph;
      for (Eigen::Index t = std::max<Eigen::Index>(lag, 0); t < m && t - lag < m; ++t) {
        ph = (t % 64 == 0 || t == std::max<Eigen::Index>(lag, 0))
                 ? std::polar(1.0, kTwoPi * tgt.doppler * static_cast<double>(t) / sample_rate)
                 : ph * rot;
        signal_(kk, t) = tgt.beta * ph * proj[t - lag];
      }
    }
    z_ = f.adjoint() * steer_ * signal_;

    const Eigen::HouseholderQR<CMatrix> qr(f);
    basis_ = qr.householderQ();
    if (add_noise_) {
      noise_f_ = draw(u, m, rng);
      // f_i = Q_F r_i, so f_i^H W = r_i^H A.
      const CMatrix r = basis_.leftCols(u).adjoint() * f;
      z_ += r.adjoint() * noise_f_;
    }
  }

  std::size_t streams() const { return static_cast<std::size_t>(z_.rows()); }
  Eigen::Index n_rx() const { return basis_.rows(); }
  Eigen::Index n_samples() const { return z_.cols(); }
  double sample_rate() const { return sample_rate_; }

  // z_i = f_i^H Y
  Eigen::RowVectorXcd combined(std::size_t i) const { return z_.row(static_cast<Eigen::Index>(i)); }

  // Column i is Y w_i. Call once per echo: the complement noise is drawn here.
  CMatrix spatial(std::span<const CVector> time_weights, Rng& rng) const {
    const Eigen::Index u = z_.rows();
    const Eigen::Index m = z_.cols();
    const Eigen::Index n = basis_.rows();
    require(static_cast<Eigen::Index>(time_weights.size()) == u, ErrorKind::kInvalidArgument,
            "CompressedEcho::spatial: one weight vector per stream");
    CMatrix w(m, u);
    for (Eigen::Index i = 0; i < u; ++i) {
      require(time_weights[static_cast<std::size_t>(i)].size() == m, ErrorKind::kInvalidArgument,
              "CompressedEcho::spatial: weight length mismatch");
      w.col(i) = time_weights[static_cast<std::size_t>(i)];
    }
    CMatrix out = steer_ * (signal_ * w);
    if (add_noise_) {
      out += basis_.leftCols(u) * (noise_f_ * w);
      const Eigen::HouseholderQR<CMatrix> qw(w);
      const CMatrix qthin = qw.householderQ() * CMatrix::Identity(m, u);
      const CMatrix rw = qthin.adjoint() * w;
      out += basis_.rightCols(n - u) * (draw(n - u, u, rng) * rw);
    }
    return out;
  }

 private:
  CMatrix draw(Eigen::Index rows, Eigen::Index cols, Rng& rng) const {
    boost::random::normal_distribution<double> nd(0.0, std::sqrt(noise_power_ / 2.0));
    CMatrix g(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        const double re = nd(rng);
        const double im = nd(rng);
        g(r, c) = Complex(re, im);
      }
    }
    return g;
  }

  double sample_rate_;
  double noise_power_;
  bool add_noise_;
  CMatrix steer_;    // N x targets
  CMatrix signal_;   // targets x M, delayed and Doppler-shifted beta a^H x(t)
  CMatrix z_;        // U x M
  CMatrix basis_;    // N x N unitary
  CMatrix noise_f_;  // U x M
};

// Search grid for the matched filter: whole-sample delay lags and a uniform
// Doppler grid. Doppler phasors e^{-j 2 pi mu t} are tabulated once.
class DelayDopplerGrid {
 public:
  DelayDopplerGrid(std::size_t n_lags, double doppler_step, std::size_t half_doppler_bins, std::size_t m,
                   double sample_rate)
      : sample_rate_(sample_rate), doppler_step_(doppler_step) {
    require(n_lags >= 1 && m >= 1, ErrorKind::kInvalidArgument, "delay/Doppler grid must not be empty");
    for (std::size_t k = 0; k < n_lags; ++k) lags_.push_back(static_cast<Eigen::Index>(k));
    const auto half = static_cast<long>(half_doppler_bins);
    for (long k = -half; k <= half; ++k) dopplers_.push_back(static_cast<double>(k) * doppler_step);
    phasors_.resize(static_cast<Eigen::Index>(dopplers_.size()), static_cast<Eigen::Index>(m));
    for (std::size_t d = 0; d < dopplers_.size(); ++d) {
      for (std::size_t t = 0; t < m; ++t) {
        phasors_(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t)) =
            std::polar(1.0, -kTwoPi * dopplers_[d] * static_cast<double>(t) / sample_rate);
      }
    }
  }

  // Grid covering round trips up to 2*max_range and |mu| <= 2 v f_c / v_c.
  static DelayDopplerGrid for_scenario(const SensingParams& p, double max_range, double carrier_hz) {
    const double tau_max = 2.0 * max_range / kSpeedOfLight;
    const auto n_lags = static_cast<std::size_t>(std::ceil(tau_max * p.sample_rate)) + 1;
    const double step = 1.0 / (2.0 * p.integration_time);
    const double mu_max = 2.0 * p.max_speed * carrier_hz / kSpeedOfLight;
    const auto half = static_cast<std::size_t>(std::ceil(mu_max / step));
    return DelayDopplerGrid(n_lags, step, half, p.samples(), p.sample_rate);
  }

  std::span<const Eigen::Index> lags() const { return lags_; }
  std::span<const double> dopplers() const { return dopplers_; }
  const CMatrix& phasors() const { return phasors_; }
  double sample_rate() const { return sample_rate_; }
  double delay_step() const { return 1.0 / sample_rate_; }
  double doppler_step() const { return doppler_step_; }
  bool empty() const { return lags_.empty() || dopplers_.empty(); }

 private:
  double sample_rate_;
  double doppler_step_;
  std::vector<Eigen::Index> lags_;
  std::vector<double> dopplers_;
  CMatrix phasors_;
};

struct DelayDopplerEstimate {
  double delay = 0.0;     // s
  double doppler = 0.0;   // Hz
  double distance = 0.0;  // m, delay * v_c / 2
  std::size_t lag_index = 0;
  std::size_t doppler_index = 0;
  double delay_step = 0.0;
  double doppler_step = 0.0;
  double peak = 0.0;
};

namespace detail {
// x_tau(t) = z(t) s*(t - lag), zero where the replica is undefined.
inline CVector delayed_product(const Eigen::Ref<const Eigen::RowVectorXcd>& z, const CVector& waveform,
                               Eigen::Index lag) {
  const Eigen::Index m = z.size();
  CVector x = CVector::Zero(m);
  for (Eigen::Index t = lag; t < m; ++t) x[t] = z[t] * std::conj(waveform[t - lag]);
  return x;
}
}  // namespace detail

// argmax over the grid of |sum_t z(t) s_q*(t - tau) e^{-j 2 pi mu t}|^2 for a
// beam-combined stream z = f^H Y. Ties break toward the smallest (lag, Doppler)
// index in lexicographic order.
inline DelayDopplerEstimate estimate_delay_doppler(const Eigen::RowVectorXcd& z, const CVector& waveform,
                                                   const DelayDopplerGrid& grid) {
  require(!grid.empty(), ErrorKind::kInvalidArgument, "estimate_delay_doppler: empty grid");
  require(waveform.size() == z.size() && grid.phasors().cols() == z.size(), ErrorKind::kInvalidArgument,
          "estimate_delay_doppler: dimension mismatch");
  DelayDopplerEstimate best;
  best.peak = -1.0;
  for (std::size_t li = 0; li < grid.lags().size(); ++li) {
    const CVector x = detail::delayed_product(z, waveform, grid.lags()[li]);
    const CVector corr = grid.phasors() * x;
    for (std::size_t di = 0; di < grid.dopplers().size(); ++di) {
      const double p = std::norm(corr[static_cast<Eigen::Index>(di)]);
      if (p > best.peak) {
        best.peak = p;
        best.lag_index = li;
        best.doppler_index = di;
      }
    }
  }
  best.delay = static_cast<double>(grid.lags()[best.lag_index]) * grid.delay_step();
  best.doppler = grid.dopplers()[best.doppler_index];
  best.distance = best.delay * kSpeedOfLight / 2.0;
  best.delay_step = grid.delay_step();
  best.doppler_step = grid.doppler_step();
  return best;
}

inline DelayDopplerEstimate estimate_delay_doppler(const EchoFrame& frame, const CVector& waveform,
                                                   const CVector& combiner, const DelayDopplerGrid& grid) {
  require(combiner.size() == frame.n_rx(), ErrorKind::kInvalidArgument, "estimate_delay_doppler: combiner size");
  const Eigen::RowVectorXcd z = combiner.adjoint() * frame.samples;
  return estimate_delay_doppler(z, waveform, grid);
}

// w(t) = (1/M) s_q*(t - tau) e^{-j 2 pi mu t}, so that eta_q = Y w.
inline CVector compensation_weights(const CVector& waveform, const DelayDopplerEstimate& est, double sample_rate) {
  const Eigen::Index m = waveform.size();
  const auto lag = static_cast<Eigen::Index>(std::llround(est.delay * sample_rate));
  CVector w = CVector::Zero(m);
  for (Eigen::Index t = lag; t < m; ++t) {
    const double time = static_cast<double>(t) / sample_rate;
    w[t] = std::conj(waveform[t - lag]) * std::polar(1.0, -kTwoPi * est.doppler * time) / static_cast<double>(m);
  }
  return w;
}

// Same weights with the Doppler phasor taken from the search grid.
inline CVector compensation_weights(const CVector& waveform, const DelayDopplerEstimate& est,
                                    const DelayDopplerGrid& grid) {
  const Eigen::Index m = waveform.size();
  require(grid.phasors().cols() == m && est.lag_index < grid.lags().size() &&
              est.doppler_index < grid.dopplers().size(),
          ErrorKind::kInvalidArgument, "compensation_weights: estimate not on this grid");
  const Eigen::Index lag = grid.lags()[est.lag_index];
  const auto row = grid.phasors().row(static_cast<Eigen::Index>(est.doppler_index));
  CVector w = CVector::Zero(m);
  for (Eigen::Index t = lag; t < m; ++t) w[t] = std::conj(waveform[t - lag]) * row[t] / static_cast<double>(m);
  return w;
}

// eta_q = (1/M) sum_t y(t) s_q*(t - tau) e^{-j 2 pi mu t}
inline CVector compensate(const EchoFrame& frame, const CVector& waveform, const DelayDopplerEstimate& est) {
  require(waveform.size() == frame.n_samples(), ErrorKind::kInvalidArgument, "compensate: waveform length mismatch");
  return frame.samples * compensation_weights(waveform, est, frame.sample_rate);
}

// Oversampled AoD search grid over [-pi, pi) that contains every codebook angle.
class AodGrid {
 public:
  AodGrid(std::size_t n_antennas, std::size_t oversampling) : n_(n_antennas) {
    require(n_antennas >= 1 && oversampling >= 1, ErrorKind::kInvalidArgument, "AoD grid must not be empty");
    const std::size_t g = n_antennas * oversampling;
    step_ = kTwoPi / static_cast<double>(g);
    steering_.resize(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(n_antennas));
    for (std::size_t j = 0; j < g; ++j) {
      const double theta = -kPi + static_cast<double>(j) * step_;
      angles_.push_back(theta);
      steering_.row(static_cast<Eigen::Index>(j)) = steering_vector(theta, n_antennas).adjoint();
    }
  }

  std::span<const double> angles() const { return angles_; }
  double step() const { return step_; }
  std::size_t n_antennas() const { return n_; }
  const CMatrix& steering_rows() const { return steering_; }  // row j = a^H(theta_j)

 private:
  std::size_t n_;
  double step_ = 0.0;
  std::vector<double> angles_;
  CMatrix steering_;
};

struct AoDEstimate {
  double aod = 0.0;       // grid argmax
  double refined = 0.0;   // continuous refinement (equals aod unless requested)
  std::size_t index = 0;
  RVector spectrum;
  double resolution = 0.0;
  bool has_peak = false;
};

// spectrum(theta) = |a^H(theta) eta|^2, argmax with ties toward smaller theta.
// With `refine`, the peak is polished by golden-section search within one grid
// step of the argmax.
inline AoDEstimate estimate_aod(const CVector& eta, const AodGrid& grid, bool refine = false) {
  require(static_cast<std::size_t>(eta.size()) == grid.n_antennas(), ErrorKind::kInvalidArgument,
          "estimate_aod: dimension mismatch");
  AoDEstimate est;
  est.resolution = grid.step();
  est.spectrum = (grid.steering_rows() * eta).cwiseAbs2();
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < est.spectrum.size(); ++j) {
    if (est.spectrum[j] > est.spectrum[best]) best = j;
  }
  est.index = static_cast<std::size_t>(best);
  est.aod = grid.angles()[est.index];
  est.refined = est.aod;
  est.has_peak = est.spectrum[best] > 0.0;
  if (refine && est.has_peak) {
    auto f = [&](double th) { return std::norm(steering_vector(th, grid.n_antennas()).dot(eta)); };
    double lo = est.aod - grid.step();
    double hi = est.aod + grid.step();
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - r * (hi - lo);
    double x2 = lo + r * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + r * (hi - lo);
        f2 = f(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - r * (hi - lo);
        f1 = f(x1);
      }
    }
    est.refined = wrap_angle(0.5 * (lo + hi));
  }
  return est;
}

enum class CrlbForm {
  // Fisher information of eta = alpha a(phi) + noise with the transmit gain
  // held fixed: derivative term ||a'||^2 + a^H a' + a'^H a (= ||a'||^2).
  kFisher,
  // Same expression with the element-wise second derivative in place of the
  // first, denominator clamped to stay positive.
  kSecondDerivative,
};

struct CrlbReport {
  double variance = std::numeric_limits<double>::infinity();  // rad^2
  double stddev = std::numeric_limits<double>::infinity();    // rad
  bool bounded = false;
};

inline double crlb_derivative_term(double phi, std::size_t n, CrlbForm form) {
  const CVector a = steering_vector(phi, n);
  const CVector d = steering_derivative(phi, n, form == CrlbForm::kFisher ? 1 : 2);
  const double term = d.squaredNorm() + 2.0 * a.dot(d).real();
  // Positive guard; for n >= 3 the raw term is already positive.
  return std::max(term, d.squaredNorm() * 1e-12 + std::numeric_limits<double>::min());
}

// sigma^2 >= (sigma_w^2 / (beta^2 P |a^H(phi) f|^2)) / (2 T (derivative term)),
// where T is the number of integrated samples (noise on eta is sigma_w^2 / T).
inline CrlbReport crlb_aod(double power, const CVector& beam_weight, double phi, double integration_samples,
                           double noise_power, double beta, CrlbForm form = CrlbForm::kFisher) {
  CrlbReport r;
  const double gain = beam_gain(phi, beam_weight);
  const double snr = beta * beta * power * gain / noise_power;
  if (!(snr > 0.0) || !(integration_samples > 0.0)) return r;  // unbounded
  const auto n = static_cast<std::size_t>(beam_weight.size());
  r.variance = 1.0 / (snr * 2.0 * integration_samples * crlb_derivative_term(phi, n, form));
  r.stddev = std::sqrt(r.variance);
  r.bounded = std::isfinite(r.variance);
  return r;
}

// b = (1/M) sum_t |z(t)|^2 for z = f^H Y
inline double beamforming_output(const Eigen::RowVectorXcd& z) { return z.squaredNorm() / static_cast<double>(z.size()); }

inline double beamforming_output(const EchoFrame& frame, const CVector& beam_weight) {
  require(beam_weight.size() == frame.n_rx(), ErrorKind::kInvalidArgument, "beamforming_output: dimension mismatch");
  const Eigen::RowVectorXcd z = beam_weight.adjoint() * frame.samples;
  return z.squaredNorm() / static_cast<double>(frame.n_samples());
}

}  // namespace beamsense
