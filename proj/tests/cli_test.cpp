// Copyright 2026 The rpd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"

namespace rpd {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rpd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("rpd_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void gen_small(const std::string& name, int seed) {
    const auto r = run_cli({"gen-data", "--seed", std::to_string(seed), "--samples", "60", "--test-samples", "40",
                            "--dim", "6", "--informative", "2", "--out", path(name)});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpExitsZero) {
  const auto top = run_cli({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* cmd : {"gen-data", "train", "eval", "backtest", "bench-convergence", "export-plots"}) {
    EXPECT_NE(top.out.find(cmd), std::string::npos) << cmd;
    const auto sub = run_cli({cmd, "--help"});
    EXPECT_EQ(sub.code, 0) << cmd;
    EXPECT_NE(sub.out.find("--out"), std::string::npos) << cmd;
  }
}

TEST_F(CliTest, UsageErrors) {
  const auto bogus = run_cli({"gen-data", "--seed", "1", "--bogus"});
  EXPECT_EQ(bogus.code, 1);
  EXPECT_NE(bogus.err.find("--seed"), std::string::npos);
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"gen-data"}).code, 1);
  EXPECT_EQ(run_cli({"eval", "--metric", "cosine", "--train", "a", "--test", "b"}).code, 1);
}

TEST_F(CliTest, MissingInputIsAnError) {
  const auto r = run_cli({"train", "--data", path("nope.csv"), "--seed", "1", "--out", path("t")});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, GenDataIsDeterministic) {
  gen_small("a", 7);
  gen_small("b", 7);
  gen_small("c", 8);
  EXPECT_EQ(slurp(path("a/train.csv")), slurp(path("b/train.csv")));
  EXPECT_EQ(slurp(path("a/test.csv")), slurp(path("b/test.csv")));
  EXPECT_NE(slurp(path("a/train.csv")), slurp(path("c/train.csv")));
  EXPECT_TRUE(fs::exists(path("a/config.txt")));
}

TEST_F(CliTest, TrainThenEval) {
  gen_small("data", 3);
  const auto tr = run_cli({"train", "--data", path("data/train.csv"), "--seed", "3", "-T", "20", "--pairs", "100",
                           "--out", path("model")});
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_EQ(lines_of(slurp(path("model/trace.jsonl"))).size(), 20u);
  const auto metrics = nlohmann::json::parse(slurp(path("model/metrics.json")));
  EXPECT_GT(metrics["initial_violation"].get<double>(), 0.0);

  for (const char* metric : {"learned", "euclidean", "mahalanobis"}) {
    std::vector<std::string> args = {"eval", "--metric", metric, "--train", path("data/train.csv"),
                                     "--test", path("data/test.csv"), "--out", path(std::string("eval_") + metric)};
    if (std::string(metric) == "learned") {
      args.push_back("--model");
      args.push_back(path("model/model.json"));
    }
    const auto ev = run_cli(args);
    ASSERT_EQ(ev.code, 0) << metric << ": " << ev.err;
    EXPECT_NE(ev.out.find("accuracy"), std::string::npos);
    const auto m = nlohmann::json::parse(slurp(path(std::string("eval_") + metric + "/metrics.json")));
    const double acc = m["accuracy"].get<double>();
    EXPECT_GE(acc, 0.0);
    EXPECT_LE(acc, 1.0);
    EXPECT_TRUE(m["ic"].is_number());
  }
  EXPECT_EQ(run_cli({"eval", "--metric", "learned", "--train", path("data/train.csv"), "--test",
                     path("data/test.csv"), "--out", path("e")})
                .code,
            1);
}

TEST_F(CliTest, BenchConvergenceTrace) {
  const auto r = run_cli({"bench-convergence", "--T", "500", "--out", path("bench")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(slurp(path("bench/trace.jsonl")));
  ASSERT_EQ(lines.size(), 500u);
  for (const auto& line : lines) EXPECT_TRUE(nlohmann::json::parse(line)["bound_ok"].get<bool>());
  const auto summary = nlohmann::json::parse(slurp(path("bench/summary.json")));
  EXPECT_NEAR(summary["f_best"].get<double>(), 1.0, 1e-2);
  EXPECT_TRUE(summary["all_bounds_ok"].get<bool>());

  const auto ex = run_cli({"export-plots", "--trace", path("bench/trace.jsonl"), "--out", path("plots")});
  ASSERT_EQ(ex.code, 0) << ex.err;
  EXPECT_EQ(lines_of(slurp(path("plots/convergence.csv"))).size(), 501u);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  {
    std::ofstream ini(path("run.ini"));
    ini << "[bench-convergence]\nT = 20\neta0 = 0.5\n";
  }
  ASSERT_EQ(run_cli({"--config", path("run.ini"), "bench-convergence", "--out", path("a")}).code, 0);
  EXPECT_EQ(lines_of(slurp(path("a/trace.jsonl"))).size(), 20u);
  ASSERT_EQ(run_cli({"--config", path("run.ini"), "bench-convergence", "--T", "30", "--out", path("b")}).code, 0);
  const auto lines = lines_of(slurp(path("b/trace.jsonl")));
  ASSERT_EQ(lines.size(), 30u);
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(lines[0])["eta"].get<double>(), 0.5);
  EXPECT_NE(slurp(path("b/config.txt")).find("30"), std::string::npos);
}

TEST_F(CliTest, OutputDirFromEnvironment) {
  ::setenv("RPD_OUTPUT_DIR", dir_.c_str(), 1);
  const auto r = run_cli({"bench-convergence", "--T", "5"});
  ::unsetenv("RPD_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "bench-convergence" / "trace.jsonl"));
}

TEST_F(CliTest, BacktestAndExport) {
  ASSERT_EQ(run_cli({"gen-data", "--kind", "panel", "--seed", "2", "--assets", "25", "--periods", "4", "--dim", "5",
                     "--informative", "2", "--out", path("panel")})
                .code,
            0);
  const auto bt = run_cli({"backtest", "--panel", path("panel/panel.csv"), "--metric", "euclidean", "--k", "5",
                           "--top-n", "3", "--out", path("bt")});
  ASSERT_EQ(bt.code, 0) << bt.err;
  const auto pj = nlohmann::json::parse(slurp(path("bt/portfolio.json")));
  EXPECT_EQ(pj["traded_periods"].size(), 3u);
  EXPECT_EQ(run_cli({"backtest", "--panel", path("panel/panel.csv"), "--metric", "learned", "--out", path("x")}).code,
            1);
  const auto ex = run_cli({"export-plots", "--portfolio", path("bt/portfolio.json"), "--out", path("plots")});
  ASSERT_EQ(ex.code, 0) << ex.err;
  EXPECT_EQ(lines_of(slurp(path("plots/portfolio_series.csv"))).size(), 4u);
  EXPECT_TRUE(fs::exists(path("plots/annual_returns.csv")));
}

}  // namespace
}  // namespace rpd
