/* Copyright 2026 The sparsetta Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cli.h"

#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sparsetta/io.h"
#include "test_util.h"

namespace sparsetta::cli {
namespace {

using sparsetta::testing::DataPath;
using Json = nlohmann::json;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome Invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome r;
  r.code = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string D(const std::string& rel) { return DataPath(rel).string(); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("sparsetta_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  std::string WriteFile(const std::string& name, const std::string& text) const {
    std::ofstream(Path(name)) << text;
    return Path(name);
  }

  std::filesystem::path dir_;
};

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Invoke({}).code, kExitInputError);
  EXPECT_EQ(Invoke({"bogus"}).code, kExitInputError);
  EXPECT_EQ(Invoke({"schedule", "--profile", D("tiny3/profile.json")}).code, kExitInputError);
  EXPECT_EQ(Invoke({"--help"}).code, kExitOk);
}

TEST_F(CliTest, MissingFileExitsTwoWithPath) {
  const Outcome r = Invoke({"predict", "--network", D("nope.json"), "--offline",
                        D("synth20/offline.json"), "--device", D("device.json"),
                        "--state", D("states/hot.json")});
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("nope.json"), std::string::npos) << r.err;
}

TEST_F(CliTest, AssessRanksShiftedLayersFirst) {
  const Outcome r = Invoke({"assess", "--history", D("synth20/stats_history.jsonl"), "--current",
                        D("synth20/stats_current.jsonl"), "--network",
                        D("synth20/network.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  const std::vector<double> a = j.at("a").get<std::vector<double>>();
  ASSERT_EQ(a.size(), 20u);
  std::vector<std::size_t> order(a.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x] > a[y]; });
  // Forward ids 7 and 3 sit at backward indices 13 and 17.
  std::vector<std::size_t> top = {order[0] + 1, order[1] + 1};
  std::sort(top.begin(), top.end());
  EXPECT_EQ(top, (std::vector<std::size_t>{13, 17}));
  EXPECT_GT(j.at("flops").get<double>(), 0.0);
}

TEST_F(CliTest, AssessReportsLayerCountMismatch) {
  const std::string shorter = WriteFile(
      "short.jsonl", "{\"layer_id\": 0, \"means\": [0], \"vars\": [1]}\n");
  const std::string longer =
      WriteFile("long.jsonl",
                "{\"layer_id\": 0, \"means\": [0], \"vars\": [1]}\n"
                "{\"layer_id\": 1, \"means\": [0], \"vars\": [1]}\n");
  const Outcome r = Invoke({"assess", "--history", longer, "--current", shorter});
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("layer 1: present in " + longer + " but missing from " + shorter),
            std::string::npos)
      << r.err;
}

TEST_F(CliTest, PredictHotLoadedState) {
  const Outcome r = Invoke({"predict", "--network", D("resnet50/network.json"), "--offline",
                        D("resnet50/offline.json"), "--device", D("device.json"), "--state",
                        D("states/hot_loaded_contention.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(j.at("pi1").get<double>(), 7.0, 1e-12);
  EXPECT_NEAR(j.at("pi2").get<double>(), 2.4, 1e-12);
  const double total = j.at("totals").at("total_ms").get<double>();
  EXPECT_GE(total, 2.4 * 45.8 * (1 - 1e-9));
  EXPECT_LE(total, 7.0 * 45.8 * (1 + 1e-9));
}

TEST_F(CliTest, ScheduleWorkedInstanceAgreesWithOracle) {
  const Outcome r = Invoke({"schedule", "--importance", D("tiny3/importance.json"), "--profile",
                        D("tiny3/profile.json"), "--budget-ms", "7", "--resolution", "5040",
                        "--oracle"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j.at("selected_backward_indices").get<std::vector<std::size_t>>(), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(j.at("achieved_importance").get<double>(), 9.0);
  EXPECT_NE(r.err.find("MATCH dp=9 brute_force=9"), std::string::npos) << r.err;
}

TEST_F(CliTest, ScheduleWarnsOnEmptyBudget) {
  const Outcome r = Invoke({"schedule", "--importance", D("tiny3/importance.json"), "--profile",
                        D("tiny3/profile.json"), "--sigma", "0.1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_TRUE(Json::parse(r.out).at("selected_backward_indices").empty());
}

TEST_F(CliTest, ScheduleRejectsBadSigma) {
  EXPECT_EQ(Invoke({"schedule", "--importance", D("tiny3/importance.json"), "--profile",
                    D("tiny3/profile.json"), "--sigma", "1.5"})
                .code,
            kExitInputError);
}

TEST_F(CliTest, SimulateIsByteIdenticalAcrossRuns) {
  const std::vector<std::string> args = {"simulate", "--scenario",
                                         D("scenarios/single_shift.json"), "--csv",
                                         Path("a.csv")};
  const Outcome first = Invoke(args);
  ASSERT_EQ(first.code, kExitOk) << first.err;
  const std::string csv = io::ReadText(Path("a.csv"));
  const Outcome second = Invoke(args);
  EXPECT_EQ(first.out, second.out);
  EXPECT_EQ(csv, io::ReadText(Path("a.csv")));
  EXPECT_FALSE(csv.empty());
}

TEST_F(CliTest, SimulateOverridesApply) {
  const Outcome r = Invoke({"simulate", "--scenario", D("scenarios/single_shift.json"), "--seed",
                        "3", "--sigma", "0.5", "--mode", "parallel", "--no-replay", "--out",
                        Path("r.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(io::ReadText(Path("r.json")));
  EXPECT_EQ(j.at("seed").get<int>(), 3);
  EXPECT_EQ(j.at("mode").get<std::string>(), "parallel");
  EXPECT_FALSE(j.at("aggregates").contains("latency_ratio"));
  EXPECT_EQ(j.at("batches").at(0).at("sigma").get<double>(), 0.5);
  EXPECT_EQ(Invoke({"simulate", "--scenario", D("scenarios/single_shift.json"), "--mode",
                    "sideways"})
                .code,
            kExitInputError);
}

TEST_F(CliTest, SimulateLenientFlagAcceptsExtraFields) {
  std::string text = io::ReadText(DataPath("scenarios/single_shift.json"));
  text.replace(text.find('{') + 1, 0, "\"comment\": \"x\",");
  // Relative paths resolve against the scenario's own directory.
  std::string absolute = text;
  const std::string dir = DataPath("scenarios").string() + "/";
  for (std::size_t p = absolute.find("\"../"); p != std::string::npos;
       p = absolute.find("\"../", p)) {
    absolute.insert(p + 1, dir);
    p += dir.size() + 4;
  }
  const std::string path = WriteFile("s.json", absolute);
  EXPECT_EQ(Invoke({"simulate", "--scenario", path}).code, kExitInputError);
  EXPECT_EQ(Invoke({"--lenient", "simulate", "--scenario", path}).code, kExitOk);
}

TEST_F(CliTest, OracleCheckReportsMatches) {
  const Outcome r = Invoke({"oracle-check", "--instances", "40", "--max-n", "10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("40/40 match"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("wall time:"), std::string::npos);
  EXPECT_EQ(Invoke({"oracle-check", "--instances", "0"}).code, kExitInputError);
  EXPECT_EQ(Invoke({"oracle-check", "--max-n", "21"}).code, kExitInputError);
}

}  // namespace
}  // namespace sparsetta::cli
