#pragma once

#include <cmath>
#include <cstddef>

#include "beamsense/array_geometry.hpp"
#include "beamsense/channel.hpp"
#include "beamsense/error.hpp"
#include "beamsense/mobility.hpp"
#include "beamsense/sensing.hpp"

namespace beamsense::sim {

// Everything one frame needs. Defaults are the reference scenario.
struct FrameConfig {
  std::size_t ttis = 100;
  double tti_seconds = 0.010;
  std::size_t users = 2;
  int packet_trials = 100;  // B_u0 ~ Binomial(trials, prob)
  double packet_prob = 0.6;
  int packets_per_success = 0;  // 0: ceil(B_tot / (ttis * users))

  LinkBudget link;
  ChannelParams channel;
  SensingParams sensing;
  StreetGrid grid;

  double speed_mean = 20.0;  // m/s
  double speed_std = 2.0;
  double physical_threshold = 0.0;    // rad; 0 selects the 3 dB beamwidth
  double min_separation_steps = 2.0;  // spawn separation in codebook grid steps
  bool xtdma_multibeam = true;        // sweep slots use multi-beams (else single)
  bool xtdma_hold_sweep_estimate = false;  // CU slots steer at the last sweep estimate (else the latest)
  CrlbForm crlb_form = CrlbForm::kFisher;

  double threshold() const {
    return physical_threshold > 0.0 ? physical_threshold : beamwidth_3db(channel.n_antennas);
  }

  // Floor for distance estimates: midpoint of the zero-delay bin.
  double min_distance() const { return kSpeedOfLight / (4.0 * sensing.sample_rate); }

  int batch_for(int total_packets) const {
    if (packets_per_success > 0) return packets_per_success;
    const auto slots = static_cast<int>(ttis * users);
    return std::max(1, (total_packets + slots - 1) / slots);
  }

  void validate() const {
    require(ttis >= 1, ErrorKind::kConfigError, "frame.ttis must be >= 1");
    require(tti_seconds > 0.0, ErrorKind::kConfigError, "frame.tti_seconds must be > 0");
    require(users >= 1 && users <= 6, ErrorKind::kConfigError, "frame.users must be in [1, 6]");
    require(packet_trials >= 1 && packet_prob > 0.0 && packet_prob <= 1.0, ErrorKind::kConfigError,
            "packet law needs trials >= 1 and 0 < prob <= 1");
    require(packets_per_success >= 0, ErrorKind::kConfigError, "frame.packets_per_success must be >= 0");
    require(link.total_power_w > 0.0 && link.noise_power_w > 0.0 && link.rate_threshold >= 0.0,
            ErrorKind::kConfigError, "link budget values must be positive");
    require(channel.n_antennas >= 3, ErrorKind::kConfigError, "channel.antennas must be >= 3");
    require(channel.carrier_hz > 0.0 && channel.rician_k > 0.0 && channel.n_paths >= 1, ErrorKind::kConfigError,
            "channel parameters out of range");
    require(sensing.sample_rate > 0.0 && sensing.integration_time > 0.0 && sensing.samples() >= 1,
            ErrorKind::kConfigError, "sensing needs at least one sample per TTI");
    require(sensing.rcs > 0.0 && sensing.aod_oversampling >= 1 && sensing.max_speed >= 0.0, ErrorKind::kConfigError,
            "sensing parameters out of range");
    require(grid.half_extent > 0.0 && grid.street_offset > 0.0 && grid.street_offset < grid.half_extent,
            ErrorKind::kConfigError, "street grid must satisfy 0 < offset < half_extent");
    require(speed_mean >= 0.0 && speed_std >= 0.0, ErrorKind::kConfigError, "speeds must be >= 0");
    require(physical_threshold >= 0.0 && min_separation_steps >= 0.0, ErrorKind::kConfigError,
            "threshold and separation must be >= 0");
  }

  bool operator==(const FrameConfig&) const = default;
};

}  // namespace beamsense::sim
