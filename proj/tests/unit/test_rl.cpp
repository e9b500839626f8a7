#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "beamsense/rl/action_space.hpp"
#include "beamsense/rl/checkpoint.hpp"
#include "beamsense/rl/network.hpp"
#include "beamsense/rl/observation.hpp"
#include "beamsense/rl/ppo.hpp"

namespace beamsense::rl {
namespace {

TEST(ActionSpace, DigitsRoundTrip) {
  EXPECT_EQ(action_space_size(2), 9u);
  for (std::size_t c = 0; c < 27; ++c) EXPECT_EQ(encode_action(action_digits(c, 3)), c);
}

TEST(ActionSpace, CuKeepActionHoldsBeam) {
  const Codebook cb(32);
  const auto prev = CompositeBeam::single(cb, 10);
  const UserEstimate est{cb.angle(14), 30.0, true};
  EXPECT_EQ(decode_user_action(0, UserType::kCommunication, prev, est, cb), prev);
}

TEST(ActionSpace, SuToCuSteersAtEstimate) {
  const Codebook cb(32);
  const CompositeBeam prev(cb, {9, 10, 11});
  const UserEstimate est{cb.angle(14), 30.0, true};
  const auto b = decode_user_action(0, UserType::kSensing, prev, est, cb);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b.front(), 14u);
}

TEST(ActionSpace, SensingWindowsAreThreeWideAndClamped) {
  const Codebook cb(32);
  const UserEstimate est;
  const auto left = decode_user_action(1, UserType::kCommunication, CompositeBeam::single(cb, 10), est, cb);
  EXPECT_EQ(left.indices(), (std::vector<std::size_t>{8, 9, 10}));
  const auto right = decode_user_action(2, UserType::kCommunication, CompositeBeam::single(cb, 10), est, cb);
  EXPECT_EQ(right.indices(), (std::vector<std::size_t>{10, 11, 12}));
  const auto edge = decode_user_action(1, UserType::kCommunication, CompositeBeam::single(cb, 0), est, cb);
  EXPECT_EQ(edge.indices(), (std::vector<std::size_t>{0, 1, 2}));
  const auto edge2 = decode_user_action(2, UserType::kSensing, CompositeBeam(cb, {29, 30, 31}), est, cb);
  EXPECT_EQ(edge2.indices(), (std::vector<std::size_t>{29, 30, 31}));
}

TEST(Reward, CountsOnlyCommunicationSuccesses) {
  const std::vector<int> buffers{10, 10};
  const std::vector<int> lambdas{1, 0};
  const std::vector<double> sinrs{100.0, 100.0};
  const double r = reward(buffers, 40, lambdas, sinrs, 4.0);
  EXPECT_NEAR(r, 1.0 + std::exp(0.5), 1e-12);
  const std::vector<double> weak{15.0, 100.0};  // log2(16) = 4 is not above the threshold
  EXPECT_EQ(reward(buffers, 40, lambdas, weak, 4.0), 0.0);
}

TEST(Observation, LayoutAndClipping) {
  FeatureScaling sc;
  BHistory h{std::vector<double>{0.0, sc.noise_power}, std::vector<double>{1e300, 1.0},
             std::vector<double>{sc.noise_power * 10.0, sc.noise_power * 100.0}};
  const std::vector<int> buf{5, 15};
  const auto s = encode_state(buf, 40, h, sc);
  ASSERT_EQ(s.size(), 9);
  EXPECT_DOUBLE_EQ(s[0], 0.125);
  EXPECT_DOUBLE_EQ(s[1], 0.375);
  EXPECT_EQ(s[3], -sc.clip);
  EXPECT_NEAR(s[4], 0.0, 1e-12);
  EXPECT_EQ(s[5], sc.clip);
  EXPECT_NEAR(s[7], 1.0, 1e-12);
  EXPECT_NEAR(s[8], 2.0, 1e-12);
}

TEST(Gae, MatchesHandComputation) {
  RolloutBuffer b;
  b.add(RVector::Zero(1), 0, 0.0, 1.0, 0.5, false);
  b.add(RVector::Zero(1), 0, 0.0, 2.0, 0.25, true);
  b.add(RVector::Zero(1), 0, 0.0, 0.0, 1.0, false);
  b.last_value = 2.0;
  b.compute_gae(0.9, 0.8);
  const double d2 = 0.0 + 0.9 * 2.0 - 1.0;
  const double d1 = 2.0 - 0.25;
  const double d0 = 1.0 + 0.9 * 0.25 - 0.5;
  EXPECT_NEAR(b.advantages[2], d2, 1e-12);
  EXPECT_NEAR(b.advantages[1], d1, 1e-12);
  EXPECT_NEAR(b.advantages[0], d0 + 0.72 * d1, 1e-12);
  EXPECT_NEAR(b.returns[0], b.advantages[0] + 0.5, 1e-12);
}

TEST(Surrogate, ClipsBothSides) {
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, 1.0, 0.2), 0.5);
}

TEST(Network, ProbabilitiesNormalized) {
  Rng rng(1);
  ActorCritic net({9, 64, 9});
  net.initialize(rng);
  Matrix x = Matrix::Random(9, 5);
  const auto f = net.forward(x);
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(f.probs.col(i).sum(), 1.0, 1e-12);
}

TEST(Checkpoint, JsonRoundTripIsExact) {
  Rng rng(2);
  Checkpoint ck;
  ck.network = ActorCritic({9, 16, 9});
  ck.network.initialize(rng, 1.0);
  ck.training_steps = 1234;
  ck.hyperparams.learning_rate = 1e-3;
  const auto path = std::filesystem::temp_directory_path() / "beamsense_ck_test.json";
  save_checkpoint(ck, path);
  const auto back = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.network.params(), ck.network.params());
  EXPECT_EQ(back.training_steps, 1234);
  EXPECT_EQ(back.hyperparams, ck.hyperparams);
}

TEST(Checkpoint, MissingFileIsIoError) {
  try {
    load_checkpoint("/nonexistent/ck.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIoError);
  }
}

TEST(PpoUpdate, NonFiniteLossRestoresParameters) {
  Rng rng(3);
  ActorCritic net({1, 4, 2});
  net.initialize(rng);
  const RVector before = net.params();
  PpoHyperparams hp;
  Adam adam(net.size(), hp.learning_rate);
  RolloutBuffer b;
  b.add(RVector::Ones(1), 0, -0.7, std::nan(""), 0.0, true);
  b.add(RVector::Ones(1), 1, -0.7, 1.0, 0.0, true);
  EXPECT_THROW(ppo_update(net, adam, b, hp, rng), Error);
  EXPECT_EQ(net.params(), before);
}

}  // namespace
}  // namespace beamsense::rl
