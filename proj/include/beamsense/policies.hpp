#pragma once

// Heuristic beam management: user classification, CU/SU beam construction,
// count-maximizing power allocation, the X-TDMA sweep schedule and the
// CRLB-driven AoD policy (plus its genie variant).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "beamsense/array_geometry.hpp"
#include "beamsense/error.hpp"
#include "beamsense/sensing.hpp"
#include "beamsense/types.hpp"

namespace beamsense {

enum class UserType : int { kSensing = 0, kCommunication = 1 };

inline int lambda(UserType t) { return static_cast<int>(t); }

struct BeamAssignment {
  std::vector<UserType> types;
  std::vector<CompositeBeam> beams;

  std::size_t size() const { return types.size(); }
};

struct PowerAllocation {
  std::vector<double> powers;  // W per user
  std::vector<bool> granted;
};

inline UserType classify_user(double sigma, double threshold) {
  return sigma <= threshold ? UserType::kCommunication : UserType::kSensing;
}

inline CompositeBeam cu_beam(double aod_estimate, const Codebook& codebook) {
  require(std::isfinite(aod_estimate), ErrorKind::kInvalidArgument, "cu_beam: non-finite estimate");
  return CompositeBeam::single(codebook, codebook.nearest(aod_estimate));
}

inline constexpr std::size_t kMinSensingBeams = 2;
inline constexpr std::size_t kMaxSensingBeams = 5;

// Codewords whose grid angles fall in [phi - sigma, phi + sigma], always
// containing the snap of phi; at least 2 and at most 5 codewords, keeping
// those nearest to phi when the interval covers more.
inline CompositeBeam su_beams(double aod_estimate, double sigma, const Codebook& codebook) {
  require(std::isfinite(aod_estimate), ErrorKind::kInvalidArgument, "su_beams: non-finite estimate");
  const std::size_t n = codebook.size();
  require(n >= kMinSensingBeams, ErrorKind::kInvalidArgument, "su_beams: codebook too small");
  const std::size_t snap = codebook.nearest(aod_estimate);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == snap || std::abs(codebook.angle(i) - aod_estimate) <= sigma) chosen.push_back(i);
  }
  auto closer = [&](std::size_t a, std::size_t b) {
    const double da = std::abs(codebook.angle(a) - aod_estimate);
    const double db = std::abs(codebook.angle(b) - aod_estimate);
    return da < db || (da == db && a < b);
  };
  if (chosen.size() > kMaxSensingBeams) {
    std::sort(chosen.begin(), chosen.end(), closer);
    chosen.resize(kMaxSensingBeams);
  }
  if (chosen.size() < kMinSensingBeams) {
    std::optional<std::size_t> neighbor;
    if (snap > 0) neighbor = snap - 1;
    if (snap + 1 < n && (!neighbor || closer(snap + 1, *neighbor))) neighbor = snap + 1;
    chosen.push_back(*neighbor);
  }
  return CompositeBeam(codebook, std::move(chosen));
}

// Grants users in ascending order of requirement while the budget lasts, then
// splits the leftover equally among granted users. Ungranted users get zero.
inline PowerAllocation waterfill_power(std::span<const double> requirements, double total_power) {
  require(total_power > 0.0, ErrorKind::kInvalidArgument, "waterfill_power: budget must be positive");
  const std::size_t u = requirements.size();
  for (double r : requirements) {
    require(r >= 0.0, ErrorKind::kInvalidArgument, "waterfill_power: requirements must be >= 0");
  }
  std::vector<std::size_t> order(u);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return requirements[a] < requirements[b]; });
  PowerAllocation out;
  out.powers.assign(u, 0.0);
  out.granted.assign(u, false);
  double used = 0.0;
  std::size_t n_granted = 0;
  for (auto i : order) {
    if (!std::isfinite(requirements[i]) || used + requirements[i] > total_power) break;
    used += requirements[i];
    out.powers[i] = requirements[i];
    out.granted[i] = true;
    ++n_granted;
  }
  if (n_granted > 0) {
    const double extra = (total_power - used) / static_cast<double>(n_granted);
    for (std::size_t i = 0; i < u; ++i) {
      if (out.granted[i]) out.powers[i] += extra;
    }
  }
  return out;
}

// What the BS believes about one user after the previous TTI.
struct UserEstimate {
  double aod = 0.0;       // normalized AoD estimate
  double distance = 0.0;  // m, from the delay estimate
  bool valid = false;
};

// Link parameters the power requirements are computed from.
struct RequirementModel {
  std::size_t n_antennas = 32;
  double carrier_hz = 28e9;
  double rcs = 25.0;
  double noise_power = 0.0;
  double rate_threshold = 4.0;
  double integration_samples = 1000.0;
  double min_distance = 1.0;  // floor applied to distance estimates
};

// Minimum power (W) for a CU to meet the rate threshold, ignoring interference:
// (2^c - 1) sigma^2 / |h^ H f|^2 with h approximated from the estimates.
inline double cu_requirement(const UserEstimate& est, const CompositeBeam& beam, const RequirementModel& m) {
  const double d = std::max(est.distance, m.min_distance);
  const double a1 = std::sqrt(static_cast<double>(m.n_antennas)) * (kSpeedOfLight / m.carrier_hz) / (4.0 * kPi * d);
  const double xi = a1 * a1 * beam_gain(est.aod, beam) / m.noise_power;
  if (!(xi > 0.0)) return std::numeric_limits<double>::infinity();
  return (std::pow(2.0, m.rate_threshold) - 1.0) / xi;
}

// Power (W) at which the sensing requirement th^2 / xi_s is met, with
// xi_s = beta^2 |a^H f|^2 T / sigma^2.
inline double su_requirement(const UserEstimate& est, const CompositeBeam& beam, double threshold,
                             const RequirementModel& m) {
  const double d = std::max(est.distance, m.min_distance);
  const double beta = reflection_coefficient(d, m.n_antennas, m.carrier_hz, m.rcs);
  const double xi = beta * beta * beam_gain(est.aod, beam) * m.integration_samples / m.noise_power;
  if (!(xi > 0.0)) return std::numeric_limits<double>::infinity();
  return threshold * threshold / xi;
}

inline std::vector<double> power_requirements(const BeamAssignment& a, std::span<const UserEstimate> estimates,
                                              std::span<const double> thresholds, const RequirementModel& m) {
  std::vector<double> req(a.size());
  for (std::size_t u = 0; u < a.size(); ++u) {
    req[u] = a.types[u] == UserType::kCommunication ? cu_requirement(estimates[u], a.beams[u], m)
                                                    : su_requirement(estimates[u], a.beams[u], thresholds[u], m);
  }
  return req;
}

// X-TDMA: one all-user sweep slot before every X communication slots. Sweep
// slots use multi-beams around the last sweep estimate; communication slots
// point single beams at it.
inline bool is_sweep_slot(std::size_t tti, std::size_t period) {
  require(period >= 1, ErrorKind::kInvalidArgument, "xtdma: X must be >= 1");
  return tti % (period + 1) == 0;
}

inline BeamAssignment xtdma_policy(std::size_t tti, std::size_t period, std::span<const double> sweep_estimates,
                                   std::span<const double> sweep_halfwidths, const Codebook& codebook) {
  BeamAssignment out;
  const bool sweep = is_sweep_slot(tti, period);
  for (std::size_t u = 0; u < sweep_estimates.size(); ++u) {
    out.types.push_back(sweep ? UserType::kSensing : UserType::kCommunication);
    out.beams.push_back(sweep ? su_beams(sweep_estimates[u], sweep_halfwidths[u], codebook)
                              : cu_beam(sweep_estimates[u], codebook));
  }
  return out;
}

// Per-user inputs of the AoD policy, all referring to the previous TTI.
struct AodPolicyInput {
  UserEstimate estimate;
  double power = 0.0;         // P_u used when the echo was collected
  CVector beam_weight;        // f_u used when the echo was collected
  double true_aod = 0.0;      // genie only
  double true_distance = 0.0; // genie only
  double fallback_aod = 0.0;  // center of the last beam, used without an estimate
};

struct AodPolicyParams {
  double physical_threshold = 0.0;  // rad, 3 dB beamwidth
  double integration_samples = 1000.0;
  double noise_power = 0.0;
  std::size_t n_antennas = 32;
  double carrier_hz = 28e9;
  double rcs = 25.0;
  double min_distance = 1.0;
  CrlbForm crlb_form = CrlbForm::kFisher;
};

struct AodDecision {
  BeamAssignment assignment;
  std::vector<double> sigmas;      // CRLB std used for beams (normalized rad)
  std::vector<double> thresholds;  // normalized thresholds
};

// Non-genie: classify on the CRLB evaluated at the estimate. Genie: classify on
// the true estimation error and evaluate CRLB and beams at the true AoD.
inline AodDecision aod_policy(std::span<const AodPolicyInput> users, bool genie, const Codebook& codebook,
                              const AodPolicyParams& p) {
  AodDecision out;
  for (const auto& in : users) {
    if (!genie && !in.estimate.valid) {
      const double th = normalized_threshold(p.physical_threshold, in.fallback_aod);
      out.assignment.types.push_back(UserType::kSensing);
      out.assignment.beams.push_back(su_beams(in.fallback_aod, th, codebook));
      out.sigmas.push_back(std::numeric_limits<double>::infinity());
      out.thresholds.push_back(th);
      continue;
    }
    const double phi = genie ? in.true_aod : in.estimate.aod;
    const double d = std::max(genie ? in.true_distance : in.estimate.distance, p.min_distance);
    const double beta = reflection_coefficient(d, p.n_antennas, p.carrier_hz, p.rcs);
    const auto crlb = crlb_aod(in.power, in.beam_weight, phi, p.integration_samples, p.noise_power, beta, p.crlb_form);
    const double th = normalized_threshold(p.physical_threshold, phi);
    const double score =
        genie ? (in.estimate.valid ? angle_distance(in.estimate.aod, in.true_aod) : std::numeric_limits<double>::infinity())
              : crlb.stddev;
    const UserType type = classify_user(score, th);
    out.assignment.types.push_back(type);
    if (type == UserType::kCommunication) {
      out.assignment.beams.push_back(cu_beam(phi, codebook));
    } else {
      // An unbounded CRLB saturates at the widest allowed beam.
      const double halfwidth = std::isfinite(crlb.stddev) ? crlb.stddev : kPi;
      out.assignment.beams.push_back(su_beams(phi, halfwidth, codebook));
    }
    out.sigmas.push_back(crlb.stddev);
    out.thresholds.push_back(th);
  }
  return out;
}

}  // namespace beamsense
