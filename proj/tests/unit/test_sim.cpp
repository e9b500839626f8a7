#include <gtest/gtest.h>

#include <memory>
#include <numeric>
#include <vector>

#include "beamsense/sim/episode.hpp"
#include "beamsense/sim/policy.hpp"
#include "beamsense/sim/trainer.hpp"

namespace beamsense::sim {
namespace {

FrameConfig small_frame() {
  FrameConfig cfg;
  cfg.ttis = 40;
  return cfg;
}

void check_invariants(const EpisodeResult& r, std::size_t users) {
  EXPECT_GE(r.thp, 0.0);
  EXPECT_LE(r.thp, 1.0);
  EXPECT_EQ(r.delivered + r.remaining, r.total_packets);
  std::vector<int> prev;
  for (const auto& t : r.trace) {
    ASSERT_EQ(t.buffers.size(), users);
    for (std::size_t u = 0; u < users; ++u) {
      if (!prev.empty()) {
        EXPECT_LE(t.buffers[u], prev[u]);
      }
      if (t.delivered[u] > 0) {
        EXPECT_EQ(t.types[u], UserType::kCommunication);
        EXPECT_TRUE(t.success[u]);
      }
      if (t.types[u] == UserType::kSensing) {
        EXPECT_EQ(t.delivered[u], 0);
      }
    }
    prev = t.buffers;
  }
}

TEST(Episode, InvariantsHoldForBaselines) {
  const auto cfg = small_frame();
  Environment env(cfg);
  for (const char* name : {"aod", "aod-genie", "xtdma-5", "xtdma-25"}) {
    auto policy = make_policy(parse_policy(name));
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto r = run_episode(env, *policy, episode_seed(9, s));
      ASSERT_EQ(r.trace.size(), cfg.ttis);
      check_invariants(r, cfg.users);
    }
  }
}

TEST(Episode, SameSeedSameTrace) {
  const auto cfg = small_frame();
  Environment a(cfg), b(cfg);
  auto pa = make_policy(parse_policy("aod"));
  auto pb = make_policy(parse_policy("aod"));
  const auto ra = run_episode(a, *pa, 42);
  const auto rb = run_episode(b, *pb, 42);
  ASSERT_EQ(ra.trace.size(), rb.trace.size());
  for (std::size_t i = 0; i < ra.trace.size(); ++i) {
    EXPECT_EQ(ra.trace[i].sinr, rb.trace[i].sinr);
    EXPECT_EQ(ra.trace[i].buffers, rb.trace[i].buffers);
    EXPECT_EQ(ra.trace[i].aod_estimate, rb.trace[i].aod_estimate);
  }
  EXPECT_EQ(ra.thp, rb.thp);
}

TEST(Episode, PoliciesShareGeometryForASeed) {
  const auto cfg = small_frame();
  Environment env(cfg);
  auto p1 = make_policy(parse_policy("aod"));
  auto p2 = make_policy(parse_policy("xtdma-15"));
  const auto r1 = run_episode(env, *p1, 77);
  const auto r2 = run_episode(env, *p2, 77);
  EXPECT_EQ(r1.total_packets, r2.total_packets);
  for (std::size_t i = 0; i < r1.trace.size(); ++i) EXPECT_EQ(r1.trace[i].true_aod, r2.trace[i].true_aod);
}

TEST(Evaluate, ThreadCountDoesNotChangeResults) {
  const auto cfg = small_frame();
  const PolicyFactory f = [] { return make_policy(parse_policy("xtdma-25")); };
  const auto a = evaluate(cfg, f, {6, 3, 1});
  const auto b = evaluate(cfg, f, {6, 3, 3});
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].seed, b[i].seed);
    EXPECT_EQ(a[i].thp, b[i].thp);
    EXPECT_EQ(a[i].mean_sinr_db, b[i].mean_sinr_db);
  }
}

TEST(Evaluate, GenieNotWorseThanEstimatedAod) {
  const auto cfg = small_frame();
  const auto g = evaluate(cfg, [] { return make_policy(parse_policy("aod-genie")); }, {30, 5, 1});
  const auto e = evaluate(cfg, [] { return make_policy(parse_policy("aod")); }, {30, 5, 1});
  double sg = 0.0, se = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sg += g[i].thp;
    se += e[i].thp;
  }
  EXPECT_GE(sg + 0.3, se);
}

TEST(PolicyName, ParsesAndRejects) {
  EXPECT_EQ(parse_policy("xtdma-35").period, 35u);
  EXPECT_EQ(parse_policy("xtdma").period, 25u);
  EXPECT_EQ(parse_policy("aod-genie").name(), "aod-genie");
  EXPECT_THROW(parse_policy("xtdma-0"), Error);
  EXPECT_THROW(parse_policy("greedy"), Error);
  EXPECT_THROW(make_policy(parse_policy("ppo")), Error);
}

TEST(Training, ZeroStepsKeepsInitialization) {
  FrameConfig cfg = small_frame();
  TrainingOptions opt;
  opt.steps = 0;
  const auto a = train_ppo(cfg, opt, {});
  TrainingOptions opt2 = opt;
  const auto b = train_ppo(cfg, opt2, {});
  EXPECT_EQ(a.checkpoint.training_steps, 0);
  EXPECT_TRUE(a.curve.empty());
  EXPECT_EQ(a.checkpoint.network.params(), b.checkpoint.network.params());
}

TEST(Training, SameSeedSameCurve) {
  FrameConfig cfg = small_frame();
  TrainingOptions opt;
  opt.steps = 200;
  opt.hp.rollout_steps = 100;
  opt.hp.epochs = 2;
  const auto a = train_ppo(cfg, opt, {});
  const auto b = train_ppo(cfg, opt, {});
  ASSERT_EQ(a.curve.size(), 2u);
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].mean_reward, b.curve[i].mean_reward);
    EXPECT_EQ(a.curve[i].diag.policy_loss, b.curve[i].diag.policy_loss);
  }
  EXPECT_EQ(a.checkpoint.network.params(), b.checkpoint.network.params());
}

}  // namespace
}  // namespace beamsense::sim
