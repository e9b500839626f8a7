#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "beamsense/policies.hpp"
#include "beamsense/sensing.hpp"

namespace beamsense {
namespace {

struct Scene {
  std::vector<EchoTarget> targets;
  std::vector<CVector> weights;
  std::vector<double> powers;
  std::vector<CVector> waveforms;
};

Scene two_user_scene(Rng& rng, std::size_t m) {
  const Codebook cb(32);
  Scene s;
  s.targets = {{cb.angle(8) + 0.03, 2e-4, 1500.0, 3e-6}, {cb.angle(20) - 0.02, 1e-4, -900.0, 1e-6}};
  s.weights = {cu_beam(s.targets[0].aod, cb).weight(), CompositeBeam(cb, {19, 20, 21}).weight()};
  s.powers = {0.01, 0.02};
  s.waveforms = {qpsk_waveform(m, rng), qpsk_waveform(m, rng)};
  return s;
}

TEST(CompressedEcho, NoiseFreeMatchesFullFrame) {
  Rng rng(1);
  const std::size_t m = 400;
  const auto s = two_user_scene(rng, m);
  Rng r1(7), r2(7);
  const auto frame = synthesize_echo(s.targets, s.weights, s.powers, s.waveforms, 1e6, 1e-14, r1, false);
  const CompressedEcho echo(s.targets, s.weights, s.powers, s.waveforms, 1e6, 1e-14, r2, false);
  std::vector<CVector> tw;
  for (std::size_t i = 0; i < 2; ++i) {
    const Eigen::RowVectorXcd z = s.weights[i].adjoint() * frame.samples;
    EXPECT_LT((echo.combined(i) - z).norm(), 1e-12 * (1.0 + z.norm()));
    tw.push_back(qpsk_waveform(m, rng) / static_cast<double>(m));
  }
  const CMatrix eta = echo.spatial(tw, r2);
  for (std::size_t i = 0; i < 2; ++i) {
    const CVector ref = frame.samples * tw[i];
    EXPECT_LT((eta.col(static_cast<Eigen::Index>(i)) - ref).norm(), 1e-12 * (1.0 + ref.norm()));
  }
}

TEST(CompressedEcho, NoiseHasFullFrameSecondMoments) {
  // Signal-free: z_i = f_i^H W and Y w = W w carry white noise of power
  // sigma^2 per entry, and both views see the same W: f_1^H (Y w_0) = z_1 w_0.
  Rng rng(2);
  const std::size_t m = 64;
  const double noise = 2.0;
  const Codebook cb(8);
  const std::vector<EchoTarget> none;
  const std::vector<CVector> f{cb.codeword(1), CompositeBeam(cb, {3, 4}).weight()};
  const std::vector<double> p{1.0, 1.0};
  const std::vector<CVector> wf{qpsk_waveform(m, rng), qpsk_waveform(m, rng)};
  std::vector<CVector> tw{qpsk_waveform(m, rng), qpsk_waveform(m, rng)};
  tw[1] = 0.5 * tw[1] + 0.5 * tw[0];
  double z_power = 0.0, eta_power = 0.0;
  Complex cross{0.0, 0.0};
  const int trials = 3000;
  for (int t = 0; t < trials; ++t) {
    const CompressedEcho e(none, f, p, wf, 1e6, noise, rng, true);
    const CMatrix eta = e.spatial(tw, rng);
    z_power += e.combined(0).squaredNorm() / static_cast<double>(m);
    eta_power += eta.col(1).squaredNorm() / static_cast<double>(eta.rows());
    cross += f[1].dot(eta.col(0)) * std::conj((e.combined(1) * tw[0])(0));
  }
  EXPECT_NEAR(z_power / trials / noise, 1.0, 0.05);
  EXPECT_NEAR(eta_power / trials / (noise * tw[1].squaredNorm()), 1.0, 0.05);
  EXPECT_NEAR(std::abs(cross / static_cast<double>(trials)) / (noise * tw[0].squaredNorm()), 1.0, 0.08);
}

TEST(DelayDoppler, NoiseFreeRecoversTruth) {
  Rng rng(3);
  SensingParams sp;
  const auto grid = DelayDopplerGrid::for_scenario(sp, 75.0, 28e9);
  const auto m = sp.samples();
  const Codebook cb(32);
  const EchoTarget tgt{cb.angle(5), 1e-4, 2 * grid.doppler_step(), 1.0 / sp.sample_rate};
  const std::vector<EchoTarget> ts{tgt};
  const std::vector<CVector> w{cb.codeword(5)};
  const std::vector<double> p{0.03};
  const std::vector<CVector> wf{qpsk_waveform(m, rng)};
  const auto frame = synthesize_echo(ts, w, p, wf, sp.sample_rate, 1e-14, rng, false);
  const auto est = estimate_delay_doppler(frame, wf[0], w[0], grid);
  EXPECT_NEAR(est.delay, tgt.delay, 1e-12);
  EXPECT_NEAR(est.doppler, tgt.doppler, 1e-9);
  const auto eta = compensate(frame, wf[0], est);
  EXPECT_NEAR(estimate_aod(eta, AodGrid(32, 8)).aod, tgt.aod, 1e-9);
}

TEST(CompensationWeights, GridAndDirectFormsAgree) {
  Rng rng(4);
  SensingParams sp;
  const auto grid = DelayDopplerGrid::for_scenario(sp, 75.0, 28e9);
  const CVector wf = qpsk_waveform(sp.samples(), rng);
  DelayDopplerEstimate est;
  est.lag_index = 1;
  est.doppler_index = grid.dopplers().size() / 3;
  est.delay = static_cast<double>(grid.lags()[est.lag_index]) / sp.sample_rate;
  est.doppler = grid.dopplers()[est.doppler_index];
  const CVector a = compensation_weights(wf, est, sp.sample_rate);
  const CVector b = compensation_weights(wf, est, grid);
  EXPECT_LT((a - b).norm(), 1e-9 * a.norm());
}

TEST(Crlb, ScalesInverselyWithPowerAndIntegration) {
  const Codebook cb(32);
  const double phi = cb.angle(7) + 0.02;
  const CVector w = cu_beam(phi, cb).weight();
  const double v = crlb_aod(0.01, w, phi, 1000, 1e-14, 1e-4).variance;
  EXPECT_NEAR(crlb_aod(0.01, w, phi, 4000, 1e-14, 1e-4).variance / v, 0.25, 1e-12);
  EXPECT_NEAR(crlb_aod(0.04, w, phi, 1000, 1e-14, 1e-4).variance / v, 0.25, 1e-12);
}

TEST(Crlb, ZeroPowerIsUnbounded) {
  const Codebook cb(32);
  EXPECT_FALSE(std::isfinite(crlb_aod(0.0, cb.codeword(3), cb.angle(3), 1000, 1e-14, 1e-4).stddev));
}

TEST(ReflectionCoefficient, FallsWithSquaredDistance) {
  EXPECT_NEAR(reflection_coefficient(20.0, 32, 28e9, 25.0) / reflection_coefficient(40.0, 32, 28e9, 25.0), 4.0,
              1e-9);
}

}  // namespace
}  // namespace beamsense
