#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pctl_smc/cli.hpp"
#include "support.hpp"

using namespace pctl_smc;
using namespace testing_support;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "pctl-smc");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("pctl_smc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
    dice_ = (dir_ / "dice.mdp").string();
    save_model(gen_dice({3, 4}), dice_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path dir_;
  std::string dice_;
};

std::vector<nlohmann::ordered_json> json_lines(const std::string& text) {
  std::vector<nlohmann::ordered_json> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) rows.push_back(nlohmann::ordered_json::parse(line));
  return rows;
}

}  // namespace

TEST_F(CliTest, CheckReportsAllFields) {
  const auto r = invoke({"check", "--model", dice_, "--formula", "Pmax < 0.2 (F<=10 a)", "--delta", "0.05", "--seed", "7"});
  EXPECT_EQ(r.code, 1) << r.err;
  const auto rows = json_lines(r.out);
  ASSERT_EQ(rows.size(), 1U);
  std::vector<std::string> keys;
  for (const auto& [k, v] : rows[0].items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"model", "formula", "verdict", "iterations", "samples", "time", "h1", "h2",
                                            "oracle", "delta", "seed"}));
  EXPECT_EQ(rows[0]["verdict"], "False");
  EXPECT_EQ(rows[0]["formula"], "Pmax < 0.2 (F<=10 a)");
  EXPECT_NEAR(rows[0]["oracle"].template get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(rows[0]["seed"], 7);
}

TEST_F(CliTest, RepeatAddsSummaryAndMirrorsCsv) {
  const auto jsonl = (dir_ / "r.jsonl").string();
  const auto csv = (dir_ / "r.csv").string();
  const std::vector<std::string> base{"check", "--model", dice_, "--formula", "Pmax > 0.2 (F a)", "--delta", "0.05",
                                      "--seed", "3", "--repeat", "6"};
  auto with = [&](const std::string& out) {
    auto a = base;
    a.insert(a.end(), {"--out", out});
    return invoke(a);
  };
  const auto r1 = with(jsonl);
  const auto r2 = with(csv);
  EXPECT_EQ(r1.code, 0);
  const auto rows = json_lines(r1.out);
  ASSERT_EQ(rows.size(), 7U);
  EXPECT_EQ(rows.back()["summary"]["runs"], 6);
  EXPECT_EQ(rows.back()["summary"]["correct"], 6);

  std::ifstream jin(jsonl);
  std::vector<RunReport> parsed;
  for (std::string line; std::getline(jin, line);) parsed.push_back(report_from_json(nlohmann::json::parse(line)));
  ASSERT_EQ(parsed.size(), 6U);
  const auto agg = aggregate(parsed, Decision::True);
  EXPECT_EQ(agg.correct, 6U);
  EXPECT_DOUBLE_EQ(agg.mean_iterations, rows.back()["summary"]["mean_iterations"].template get<double>());

  std::ifstream cin(csv);
  std::string header;
  std::getline(cin, header);
  EXPECT_EQ(header, kReportColumns);
  std::size_t i = 0;
  for (std::string line; std::getline(cin, line); ++i) {
    auto expect = parsed[i];
    EXPECT_EQ(line.substr(0, line.find(",True,")), "\"dice.mdp\",\"Pmax > 0.2 (F a)\"");
    EXPECT_NE(line.find("," + std::to_string(expect.iterations) + "," + std::to_string(expect.samples) + ","),
              std::string::npos);
  }
  EXPECT_EQ(i, 6U);
}

TEST_F(CliTest, SameSeedSameRun) {
  const std::vector<std::string> args{"check", "--model", dice_, "--formula", "Pmax < 0.45 (F a)", "--delta", "0.05",
                                      "--seed", "11"};
  auto a = json_lines(invoke(args).out)[0];
  auto b = json_lines(invoke(args).out)[0];
  a.erase("time");
  b.erase("time");
  EXPECT_EQ(a, b);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_GT(invoke({"check", "--model", dice_, "--formula", "Pmax < 0.2 (F a)", "--seed", "1"}).code, 2);
  EXPECT_GT(invoke({}).code, 2);
  EXPECT_GT(invoke({"frobnicate"}).code, 2);
  EXPECT_GT(invoke({"check", "--model", dice_, "--formula", "Pmax < 2 (F a)", "--delta", "0.05", "--seed", "1"}).code, 2);
  EXPECT_GT(invoke({"check", "--model", "/nonexistent.mdp", "--formula", "Pmax < 0.2 (F a)", "--delta", "0.05", "--seed",
                 "1"}).code,
            2);
  EXPECT_GT(invoke({"check", "--model", dice_, "--formula", "Pmax < 0.2 (F zz)", "--delta", "0.05", "--seed", "1"}).code,
            2);
  EXPECT_GT(invoke({"check", "--model", dice_, "--formula", "Pmax < 0.2 (F a)", "--delta", "1.5", "--seed", "1"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST_F(CliTest, OracleVerdictsAndExitCodes) {
  auto r = invoke({"oracle", "--model", dice_, "--formula", "Pmax > 0.3 (F a)"});
  EXPECT_EQ(r.code, 0);
  auto j = json_lines(r.out)[0];
  EXPECT_EQ(j["state"], "start");
  EXPECT_EQ(j["horizon"], "inf");
  EXPECT_NEAR(j["value"].template get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(j["verdict"], "True");

  r = invoke({"oracle", "--model", dice_, "--formula", "Pmax > 0.3 (F a)", "--horizon", "1"});
  EXPECT_EQ(r.code, 1);
  j = json_lines(r.out)[0];
  EXPECT_EQ(j["horizon"], 1);
  EXPECT_EQ(j["value"], 0.0);

  r = invoke({"oracle", "--model", dice_, "--formula", "Pmax > 0.3333333333333333 (F a)"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json_lines(r.out)[0]["verdict"], "Boundary");

  r = invoke({"oracle", "--model", dice_, "--formula", "Pmax > 0.1 (F a)", "--state", "r_3_3"});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, GenerateMatchesLibrary) {
  auto r = invoke({"generate", "--kind", "dice", "--faces", "3", "--sum-bound", "4"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, write_model(gen_dice({3, 4})));
  const auto file = (dir_ / "rand.mdp").string();
  r = invoke({"generate", "--kind", "random", "--seed", "5", "--states", "4", "--actions", "3", "--out", file});
  EXPECT_EQ(r.code, 0);
  RandomMdpSpec spec;
  spec.seed = 5;
  spec.num_states = 4;
  spec.num_actions = 3;
  EXPECT_TRUE(load_model(file) == gen_random(spec));
  EXPECT_GT(invoke({"generate", "--kind", "coins"}).code, 2);
}

TEST_F(CliTest, BenchSmoke) {
  const auto out = (dir_ / "bench").string();
  const auto r = invoke({"bench", "--suite", "dice", "--runs", "1", "--out", out, "--mode", "unbounded"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  std::ifstream summary(std::filesystem::path(out) / "summary.csv");
  std::string header;
  std::getline(summary, header);
  EXPECT_NE(header.find("mean_h1,mean_h2"), std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(summary, line);) ++rows;
  EXPECT_EQ(rows, 6);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / "runs.jsonl"));
}
