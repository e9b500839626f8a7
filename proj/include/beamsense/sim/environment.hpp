#pragma once

// One frame of the ISAC downlink as a step/reset environment. Each step runs
//   power allocation -> mobility -> channels -> SINR and packet accounting ->
//   echo and estimation chain -> reward,
// and the decision for TTI n sees only what was measured up to TTI n-1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "beamsense/array_geometry.hpp"
#include "beamsense/channel.hpp"
#include "beamsense/error.hpp"
#include "beamsense/mobility.hpp"
#include "beamsense/policies.hpp"
#include "beamsense/random.hpp"
#include "beamsense/rl/observation.hpp"
#include "beamsense/sensing.hpp"
#include "beamsense/sim/frame_config.hpp"

namespace beamsense::sim {

// What a policy may look at when choosing the beams of the next TTI.
struct DecisionContext {
  std::size_t tti = 0;
  std::size_t users = 0;
  std::vector<UserType> prev_types;
  std::vector<CompositeBeam> prev_beams;
  std::vector<double> prev_powers;
  std::vector<UserEstimate> estimates;  // latest estimate per user
  std::vector<double> sweep_estimates;  // AoD estimate of each user's last SU TTI
  std::vector<double> true_aods;        // at the last completed TTI, genie only
  std::vector<double> true_distances;
  std::vector<int> buffers;
  int total_packets = 0;
  rl::BHistory b_history;
  RVector observation;
};

struct TtiRecord {
  std::size_t tti = 0;
  std::vector<UserType> types;
  std::vector<std::vector<std::size_t>> beams;
  std::vector<double> requirements;
  std::vector<double> powers;
  std::vector<double> sinr;
  std::vector<bool> success;    // CU passing the rate threshold
  std::vector<int> delivered;   // packets removed this TTI
  std::vector<int> buffers;     // after the TTI
  std::vector<double> b;        // beamforming output
  std::vector<double> aod_estimate;
  std::vector<double> crlb_std;
  std::vector<double> true_aod;
  std::vector<double> true_distance;
  double reward = 0.0;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  TtiRecord record;
};

class Environment {
 public:
  explicit Environment(FrameConfig cfg)
      : cfg_(std::move(cfg)),
        codebook_((cfg_.validate(), cfg_.channel.n_antennas)),
        dd_grid_(DelayDopplerGrid::for_scenario(cfg_.sensing, cfg_.grid.diagonal() / 2.0, cfg_.channel.carrier_hz)),
        aod_grid_(cfg_.channel.n_antennas, cfg_.sensing.aod_oversampling) {
    scaling_.noise_power = cfg_.link.noise_power_w;
  }

  const FrameConfig& config() const { return cfg_; }
  const Codebook& codebook() const { return codebook_; }
  const rl::FeatureScaling& scaling() const { return scaling_; }
  const DecisionContext& context() const { return ctx_; }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  bool done() const { return ctx_.tti >= cfg_.ttis; }
  int total_packets() const { return ctx_.total_packets; }
  int delivered() const { return delivered_; }
  int remaining() const { return std::accumulate(ctx_.buffers.begin(), ctx_.buffers.end(), 0); }
  double throughput() const {
    return static_cast<double>(ctx_.total_packets - remaining()) / static_cast<double>(ctx_.total_packets);
  }

  const DecisionContext& reset(std::uint64_t episode_seed) { return reset(episode_seed, episode_seed); }

  // The spawn stream can be pinned separately so training can cycle a fixed
  // set of initial positions while everything else varies.
  const DecisionContext& reset(std::uint64_t episode_seed, std::uint64_t spawn_seed) {
    const std::size_t u = cfg_.users;
    Rng spawn = make_stream(spawn_seed, Stream::kSpawn);
    Rng speed = make_stream(episode_seed, Stream::kSpeed);
    Rng buffers = make_stream(episode_seed, Stream::kBuffers);
    mobility_rng_ = make_stream(episode_seed, Stream::kMobility);
    channel_rng_ = make_stream(episode_seed, Stream::kChannel);
    echo_rng_ = make_stream(episode_seed, Stream::kEcho);

    vehicles_ = spawn_vehicles(cfg_.grid, u, cfg_.min_separation_steps * codebook_.grid_step(),
                               cfg_.channel.carrier_hz, spawn);
    for (auto& v : vehicles_) v.speed = std::max(0.0, cfg_.speed_mean + cfg_.speed_std * standard_normal(speed));

    ctx_ = DecisionContext{};
    ctx_.users = u;
    do {
      ctx_.buffers.clear();
      for (std::size_t i = 0; i < u; ++i) ctx_.buffers.push_back(binomial(buffers, cfg_.packet_trials, cfg_.packet_prob));
      ctx_.total_packets = std::accumulate(ctx_.buffers.begin(), ctx_.buffers.end(), 0);
    } while (ctx_.total_packets == 0);
    batch_ = cfg_.batch_for(ctx_.total_packets);
    delivered_ = 0;

    // Ideal beam sweep: each user starts on the codeword nearest its true AoD.
    const auto geo = geometries();
    ctx_.prev_types.assign(u, UserType::kCommunication);
    ctx_.prev_beams.clear();
    for (const auto& g : geo) ctx_.prev_beams.push_back(cu_beam(g.aod, codebook_));
    ctx_.prev_powers.assign(u, cfg_.link.total_power_w / static_cast<double>(u));
    ctx_.estimates.assign(u, UserEstimate{});
    ctx_.sweep_estimates.assign(u, 0.0);
    for (std::size_t i = 0; i < u; ++i) ctx_.sweep_estimates[i] = ctx_.prev_beams[i].center_angle(codebook_);
    for (auto& h : ctx_.b_history) h.assign(u, 0.0);

    // The initial observation comes from one echo of the aligned beams.
    const auto sensed = sense(geo, ctx_.prev_beams, ctx_.prev_powers);
    absorb(sensed, ctx_.prev_types, true);
    record_truth(geo);
    ctx_.tti = 0;
    ctx_.observation = rl::encode_state(ctx_.buffers, ctx_.total_packets, ctx_.b_history, scaling_);
    return ctx_;
  }

  // Executes one TTI with the given beams. `power_override`, when given,
  // replaces the water-filling result.
  StepResult step(const BeamAssignment& decision, const std::vector<double>* power_override = nullptr) {
    require(!done(), ErrorKind::kInvalidArgument, "step called after the frame ended");
    const std::size_t u = cfg_.users;
    if (decision.types.size() != u || decision.beams.size() != u) {
      throw Error(ErrorKind::kPolicyFailure, "decision does not cover every user");
    }
    for (const auto& beam : decision.beams) {
      if (beam.empty()) throw Error(ErrorKind::kPolicyFailure, "decision contains an empty beam");
      if (beam.back() >= codebook_.size()) throw Error(ErrorKind::kPolicyFailure, "beam index outside the codebook");
    }
    StepResult out;
    TtiRecord& rec = out.record;
    rec.tti = ctx_.tti;
    rec.types = decision.types;
    for (const auto& beam : decision.beams) rec.beams.push_back(beam.indices());

    // (1) power allocation from the current estimates.
    std::vector<UserEstimate> est(u);
    std::vector<double> thresholds(u);
    for (std::size_t i = 0; i < u; ++i) {
      est[i] = ctx_.estimates[i];
      if (!est[i].valid) est[i] = {ctx_.prev_beams[i].center_angle(codebook_), cfg_.min_distance(), true};
      est[i].distance = std::max(est[i].distance, cfg_.min_distance());
      thresholds[i] = normalized_threshold(cfg_.threshold(), est[i].aod);
    }
    rec.requirements = power_requirements(decision, est, thresholds, requirement_model());
    std::vector<double> powers;
    if (power_override) {
      require(power_override->size() == u, ErrorKind::kInvalidArgument, "power override size mismatch");
      powers = *power_override;
    } else {
      powers = waterfill_power(rec.requirements, cfg_.link.total_power_w).powers;
    }
    rec.powers = powers;

    // Reward uses the backlog at decision time.
    const std::vector<int> buffers_before = ctx_.buffers;

    // (2) mobility, (3) channels.
    for (auto& v : vehicles_) v = step_vehicle(v, cfg_.tti_seconds, cfg_.grid, mobility_rng_);
    const auto geo = geometries();
    std::vector<ChannelRealization> channels;
    for (const auto& g : geo) channels.push_back(realize_channel(g, cfg_.channel, channel_rng_));

    // (4) SINR and packet accounting; only CUs carry data.
    rec.sinr.resize(u);
    rec.success.assign(u, false);
    rec.delivered.assign(u, 0);
    for (std::size_t i = 0; i < u; ++i) {
      rec.sinr[i] = sinr(i, channels, decision.beams, powers, cfg_.link.noise_power_w);
      if (decision.types[i] != UserType::kCommunication) continue;
      if (!packet_success(rec.sinr[i], cfg_.link.rate_threshold)) continue;
      rec.success[i] = true;
      const int sent = std::min(ctx_.buffers[i], batch_);
      ctx_.buffers[i] -= sent;
      rec.delivered[i] = sent;
      delivered_ += sent;
    }
    rec.buffers = ctx_.buffers;

    // (5) echo and estimation.
    const auto sensed = sense(geo, decision.beams, powers);
    absorb(sensed, decision.types);
    rec.b = sensed.b;
    rec.aod_estimate.resize(u);
    rec.crlb_std.resize(u);
    for (std::size_t i = 0; i < u; ++i) {
      rec.aod_estimate[i] = ctx_.estimates[i].valid ? ctx_.estimates[i].aod : std::numeric_limits<double>::quiet_NaN();
      rec.crlb_std[i] = sensed.crlb_std[i];
      rec.true_aod.push_back(geo[i].aod);
      rec.true_distance.push_back(geo[i].distance);
    }

    // (6) reward.
    std::vector<int> lambdas(u);
    for (std::size_t i = 0; i < u; ++i) lambdas[i] = lambda(decision.types[i]);
    rec.reward = rl::reward(buffers_before, ctx_.total_packets, lambdas, rec.sinr, cfg_.link.rate_threshold);

    ctx_.prev_types = decision.types;
    ctx_.prev_beams = decision.beams;
    ctx_.prev_powers = powers;
    record_truth(geo);
    ++ctx_.tti;
    ctx_.observation = rl::encode_state(ctx_.buffers, ctx_.total_packets, ctx_.b_history, scaling_);
    out.reward = rec.reward;
    out.done = done();
    return out;
  }

  RequirementModel requirement_model() const {
    RequirementModel m;
    m.n_antennas = cfg_.channel.n_antennas;
    m.carrier_hz = cfg_.channel.carrier_hz;
    m.rcs = cfg_.sensing.rcs;
    m.noise_power = cfg_.link.noise_power_w;
    m.rate_threshold = cfg_.link.rate_threshold;
    m.integration_samples = static_cast<double>(cfg_.sensing.samples());
    m.min_distance = cfg_.min_distance();
    return m;
  }

 private:
  struct Sensed {
    std::vector<double> b;
    std::vector<std::optional<UserEstimate>> estimates;
    std::vector<double> crlb_std;
  };

  std::vector<GeometrySnapshot> geometries() const {
    std::vector<GeometrySnapshot> geo;
    for (const auto& v : vehicles_) geo.push_back(geometry(v, cfg_.grid, cfg_.channel.carrier_hz));
    return geo;
  }

  Sensed sense(const std::vector<GeometrySnapshot>& geo, std::span<const CompositeBeam> beams,
               std::span<const double> powers) {
    const std::size_t u = cfg_.users;
    const std::size_t m = cfg_.sensing.samples();
    const std::size_t n = cfg_.channel.n_antennas;
    std::vector<EchoTarget> targets;
    for (const auto& g : geo) {
      targets.push_back({g.aod, reflection_coefficient(g.distance, n, cfg_.channel.carrier_hz, cfg_.sensing.rcs),
                         g.doppler, 2.0 * g.distance / kSpeedOfLight});
    }
    std::vector<CVector> weights;
    std::vector<CVector> waveforms;
    for (std::size_t i = 0; i < u; ++i) {
      weights.push_back(beams[i].weight());
      waveforms.push_back(qpsk_waveform(m, echo_rng_));
    }
    const CompressedEcho echo(targets, weights, powers, waveforms, cfg_.sensing.sample_rate, cfg_.link.noise_power_w,
                              echo_rng_);
    Sensed s;
    s.b.resize(u);
    s.estimates.resize(u);
    s.crlb_std.assign(u, std::numeric_limits<double>::infinity());
    std::vector<std::optional<DelayDopplerEstimate>> dd(u);
    std::vector<CVector> time_weights(u, CVector::Zero(static_cast<Eigen::Index>(m)));
    for (std::size_t i = 0; i < u; ++i) {
      const Eigen::RowVectorXcd z = echo.combined(i);
      s.b[i] = beamforming_output(z);
      // A silent stream has no echo of its own to estimate from.
      if (powers[i] <= 0.0) continue;
      dd[i] = estimate_delay_doppler(z, waveforms[i], dd_grid_);
      time_weights[i] = compensation_weights(waveforms[i], *dd[i], dd_grid_);
    }
    const CMatrix eta = echo.spatial(time_weights, echo_rng_);
    for (std::size_t i = 0; i < u; ++i) {
      if (!dd[i]) continue;
      const auto aod = estimate_aod(eta.col(static_cast<Eigen::Index>(i)), aod_grid_);
      if (!aod.has_peak) continue;
      const double d = std::max(dd[i]->distance, cfg_.min_distance());
      s.estimates[i] = UserEstimate{aod.aod, d, true};
      const double beta = reflection_coefficient(d, n, cfg_.channel.carrier_hz, cfg_.sensing.rcs);
      s.crlb_std[i] = crlb_aod(powers[i], weights[i], aod.aod, static_cast<double>(m), cfg_.link.noise_power_w, beta,
                               cfg_.crlb_form)
                          .stddev;
    }
    return s;
  }

  // Shifts the b history and caches fresh estimates. Estimates taken while a
  // user was sensed (or during initial alignment) also refresh its sweep value.
  void absorb(const Sensed& s, std::span<const UserType> types, bool alignment = false) {
    for (std::size_t k = 0; k + 1 < rl::kHistoryLength; ++k) ctx_.b_history[k] = ctx_.b_history[k + 1];
    ctx_.b_history.back() = s.b;
    for (std::size_t i = 0; i < cfg_.users; ++i) {
      if (!s.estimates[i]) continue;
      ctx_.estimates[i] = *s.estimates[i];
      if (alignment || types[i] == UserType::kSensing) ctx_.sweep_estimates[i] = s.estimates[i]->aod;
    }
  }

  void record_truth(const std::vector<GeometrySnapshot>& geo) {
    ctx_.true_aods.clear();
    ctx_.true_distances.clear();
    for (const auto& g : geo) {
      ctx_.true_aods.push_back(g.aod);
      ctx_.true_distances.push_back(g.distance);
    }
  }

  FrameConfig cfg_;
  Codebook codebook_;
  DelayDopplerGrid dd_grid_;
  AodGrid aod_grid_;
  rl::FeatureScaling scaling_;

  std::vector<VehicleState> vehicles_;
  Rng mobility_rng_;
  Rng channel_rng_;
  Rng echo_rng_;
  DecisionContext ctx_;
  int batch_ = 1;
  int delivered_ = 0;
};

}  // namespace beamsense::sim
