#include <gtest/gtest.h>

#include "beamsense/check/oracles.hpp"

namespace beamsense::check {
namespace {

void expect_pass(const CheckResult& r) { EXPECT_TRUE(r.passed) << r.name << ": " << r.detail; }

TEST(Suites, Codebook) { expect_pass(codebook_suite()); }
TEST(Suites, Sinr) { expect_pass(sinr_suite()); }
TEST(Suites, EstimationChain) { expect_pass(estimation_suite()); }
TEST(Suites, Crlb) { expect_pass(crlb_suite()); }
TEST(Suites, Waterfill) { expect_pass(waterfill_suite()); }
TEST(Suites, Ppo) { expect_pass(ppo_suite()); }

TEST(Oracle, FejerPeakAndNulls) {
  EXPECT_DOUBLE_EQ(oracle::fejer(0.0, 32), 1.0);
  EXPECT_NEAR(oracle::fejer(kTwoPi / 32.0, 32), 0.0, 1e-20);
}

TEST(Oracle, SubsetCountSimpleCases) {
  EXPECT_EQ(oracle::best_granted_count({0.6, 0.6}, 1.0), 1u);
  EXPECT_EQ(oracle::best_granted_count({0.5, 0.5}, 1.0), 2u);
  EXPECT_EQ(oracle::best_granted_count({1.5}, 1.0), 0u);
}

}  // namespace
}  // namespace beamsense::check
