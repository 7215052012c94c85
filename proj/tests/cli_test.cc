// Copyright 2026 The Elasim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "elasim/report.h"
#include "gtest/gtest.h"

namespace elasim {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("elasim_cli_" +
            std::string(
                ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "small.json") << R"({
      "model": {"preset": "llama3_8b_262k"},
      "device": {"preset": "a100_80gb"},
      "workload": {"kind": "poisson", "rate": 1.0, "count": 30,
                   "input_tokens": 2048, "output_tokens": 256},
      "seed": 5,
      "record_plans": true
    })";
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(const std::string& args) {
    const std::string cmd = std::string(ELASIM_CLI) + " " + args + " 2>" +
                            (dir_ / "stderr.txt").string();
    return std::system(cmd.c_str());
  }
  std::string Slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  std::string Cfg() { return (dir_ / "small.json").string(); }

  fs::path dir_;
};

TEST_F(CliTest, SimulateWritesRepeatableFiles) {
  const fs::path a = dir_ / "a.json";
  const fs::path b = dir_ / "b.json";
  ASSERT_EQ(Run("simulate --config " + Cfg() + " --out " + a.string()), 0);
  ASSERT_EQ(Run("simulate --config " + Cfg() + " --out " + b.string()), 0);
  EXPECT_EQ(Slurp(a), Slurp(b));
  EXPECT_TRUE(fs::exists(dir_ / "a.series.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a.requests.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a.plans.jsonl"));
  EXPECT_EQ(Slurp(dir_ / "a.series.csv"), Slurp(dir_ / "b.series.csv"));
  const Json j = Json::parse(Slurp(a));
  EXPECT_EQ(j["config"]["workload"]["count"], 30);
}

TEST_F(CliTest, FootprintActivationShareGrows) {
  const fs::path out = dir_ / "fp.json";
  ASSERT_EQ(Run("footprint --config " + Cfg() +
                " --contexts 2048,200000 --out " + out.string()),
            0);
  const Json j = Json::parse(Slurp(out));
  ASSERT_EQ(j["rows"].size(), 2u);
  EXPECT_LT(j["rows"][0]["activation"].get<double>(),
            j["rows"][1]["activation"].get<double>());
}

TEST_F(CliTest, CompareHasThreeRatios) {
  const fs::path out = dir_ / "cmp.json";
  ASSERT_EQ(Run("compare --config " + Cfg() + " --out " + out.string()), 0);
  const Json j = Json::parse(Slurp(out));
  ASSERT_EQ(j["rows"].size(), 3u);
  for (const Json& row : j["rows"]) EXPECT_TRUE(row.contains("ratio"));
}

TEST_F(CliTest, StaticOverrideSkipsTransfers) {
  const fs::path out = dir_ / "s.json";
  ASSERT_EQ(Run("simulate --config " + Cfg() + " --mode static --out " +
                out.string()),
            0);
  const Json j = Json::parse(Slurp(out));
  EXPECT_EQ(j["mode"], "static");
  EXPECT_EQ(j["pools"]["ownership_transfers"], 0);
}

TEST_F(CliTest, BadConfigFailsWithMessage) {
  std::ofstream(dir_ / "bad.json")
      << R"({"model": {"preset": "llama3_8b_262k"},
            "device": {"preset": "a100_80gb", "chunk_bytes": -4}})";
  EXPECT_NE(Run("simulate --config " + (dir_ / "bad.json").string() +
                " --out " + (dir_ / "x.json").string()),
            0);
  EXPECT_NE(Slurp(dir_ / "stderr.txt").find("device.chunk_bytes"),
            std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "x.json"));
}

TEST_F(CliTest, UnsortedRateGridRejected) {
  EXPECT_NE(Run("sweep-rate --config " + Cfg() + " --rates 2,1 --out " +
                (dir_ / "sw.json").string()),
            0);
}

}  // namespace
}  // namespace elasim
