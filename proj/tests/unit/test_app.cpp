#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "beamsense/app/commands.hpp"
#include "beamsense/app/config.hpp"

namespace beamsense::app {
namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("beamsense_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Config, RoundTripIsIdentity) {
  ExperimentConfig c;
  c.seed = 99;
  c.frame.speed_mean = 27.5;
  c.sweep_speeds = {10.0, 12.25};
  c.frame.crlb_form = CrlbForm::kSecondDerivative;
  c.ppo.learning_rate = 1.25e-4;
  std::istringstream in(serialize(c));
  const auto back = parse_config(in);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize(back), serialize(c));
}

TEST(Config, DefaultsAreTheReferenceScenario) {
  const ExperimentConfig c;
  EXPECT_EQ(c.frame.channel.n_antennas, 32u);
  EXPECT_DOUBLE_EQ(c.frame.channel.carrier_hz, 28e9);
  EXPECT_EQ(c.frame.users, 2u);
  EXPECT_EQ(c.frame.ttis, 100u);
  EXPECT_DOUBLE_EQ(c.frame.tti_seconds, 0.01);
  EXPECT_DOUBLE_EQ(c.frame.sensing.integration_time, 1e-3);
  EXPECT_DOUBLE_EQ(c.frame.link.rate_threshold, 4.0);
  EXPECT_EQ(c.train_steps, 100000u);
  EXPECT_DOUBLE_EQ(c.ppo.clip, 0.2);
}

TEST(Config, UnknownKeyRejected) {
  std::istringstream in("[frame]\nttis = 10\nbogus = 1\n");
  try {
    parse_config(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfigError);
    EXPECT_NE(std::string(e.what()).find("frame.bogus"), std::string::npos);
  }
}

TEST(Config, BadValueRejected) {
  std::istringstream in("[frame]\nttis = ten\n");
  EXPECT_THROW(parse_config(in), Error);
  std::istringstream in2("[ppo]\nclip = 0.3\n");
  EXPECT_THROW(parse_config(in2), Error);
}

TEST(Config, MissingFileIsIoError) {
  try {
    load_config("/nonexistent/beamsense.ini");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIoError);
  }
}

TEST(Evaluate, SingleEpisodeGivesSingleRow) {
  ExperimentConfig c;
  c.episodes = 1;
  c.frame.ttis = 30;
  const auto dir = scratch("single");
  const auto out = cmd_evaluate(c, dir);
  std::ifstream in(out.episodes_csv);
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, kEpisodesHeader);
  EXPECT_FALSE(row.empty());
  EXPECT_FALSE(std::getline(in, extra));
  std::filesystem::remove_all(dir);
}

TEST(Evaluate, CdfMonotoneInBothColumns) {
  ExperimentConfig c;
  c.episodes = 8;
  c.frame.ttis = 30;
  c.policy = "xtdma-25";
  const auto dir = scratch("cdf");
  const auto out = cmd_evaluate(c, dir);
  std::ifstream in(out.cdf_csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCdfHeader);
  double px = -1.0, pc = -1.0;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    const double x = std::stod(line.substr(0, comma));
    const double f = std::stod(line.substr(comma + 1));
    EXPECT_GT(x, px);
    EXPECT_GE(f, pc);
    px = x;
    pc = f;
    ++rows;
  }
  EXPECT_EQ(rows, 101);
  EXPECT_DOUBLE_EQ(pc, 1.0);
  std::filesystem::remove_all(dir);
}

TEST(Evaluate, RerunsAreByteIdentical) {
  ExperimentConfig c;
  c.episodes = 5;
  c.frame.ttis = 30;
  c.policy = "aod";
  const auto d1 = scratch("det1");
  const auto d2 = scratch("det2");
  c.jobs = 1;
  const auto a = cmd_evaluate(c, d1);
  c.jobs = 3;
  const auto b = cmd_evaluate(c, d2);
  EXPECT_EQ(slurp(a.episodes_csv), slurp(b.episodes_csv));
  EXPECT_EQ(slurp(a.cdf_csv), slurp(b.cdf_csv));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST(Evaluate, PpoWithoutCheckpointIsConfigError) {
  ExperimentConfig c;
  c.policy = "ppo";
  try {
    cmd_evaluate(c, scratch("ppo"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfigError);
  }
}

TEST(Sweep, OneRowPerPolicyAndSpeed) {
  ExperimentConfig c;
  c.episodes = 2;
  c.frame.ttis = 20;
  c.sweep_speeds = {15.0};
  c.sweep_policies = {"aod", "xtdma-25"};
  const auto dir = scratch("sweep");
  const auto rows = cmd_sweep_speed(c, dir);
  ASSERT_EQ(rows.size(), 2u);
  std::ifstream in(dir / "sweep.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kSweepHeader);
  std::filesystem::remove_all(dir);
}

TEST(Train, WritesCurveAndLoadableCheckpoint) {
  ExperimentConfig c;
  c.frame.ttis = 20;
  c.train_steps = 120;
  c.ppo.rollout_steps = 60;
  c.ppo.epochs = 1;
  const auto dir = scratch("train");
  const auto out = cmd_train(c, dir);
  EXPECT_EQ(out.result.curve.size(), 2u);
  c.checkpoint = out.checkpoint.string();
  c.policy = "ppo";
  c.episodes = 2;
  EXPECT_NO_THROW(cmd_evaluate(c, dir / "eval"));
  std::ifstream in(out.curve_csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kTrainingHeader);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace beamsense::app
