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

#include <fstream>
#include <sstream>
#include <string>

#include "elasim/config.h"
#include "gtest/gtest.h"

namespace elasim {
namespace {

const char* kMinimal = R"({
  "model": {"preset": "llama3_8b_262k"},
  "device": {"preset": "a100_80gb"}
})";

bool Mentions(const ConfigError& e, const std::string& needle) {
  for (const std::string& m : e.errors()) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

TEST(ParseConfig, MinimalFillsDefaults) {
  const ExperimentConfig c = parse_config_text(kMinimal);
  EXPECT_EQ(c.sim.theta.value(), physical_chunks(c.sim.model, c.sim.device) / 50);
  EXPECT_EQ(c.sim.theta.value(), 666);
  EXPECT_EQ(c.sim.buffer.alpha, 2);
  EXPECT_EQ(c.sim.buffer.window, 5);
  EXPECT_EQ(c.sim.buffer.threshold, 3);
  EXPECT_EQ(c.sim.slo_multiplier, 25.0);
  EXPECT_EQ(c.sim.mode, Mode::kElastic);
}

TEST(ParseConfig, NegativeChunkBytes) {
  try {
    parse_config_text(R"({"model": {"preset": "llama3_8b_262k"},
      "device": {"preset": "a100_80gb", "chunk_bytes": -1}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_TRUE(Mentions(e, "device.chunk_bytes"));
  }
}

TEST(ParseConfig, UnknownKeyNamed) {
  try {
    parse_config_text(R"({"model": {"preset": "llama3_8b_262k"},
      "device": {"preset": "a100_80gb"}, "buffer": {"alfa": 2}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_TRUE(Mentions(e, "buffer.alfa: unknown key"));
  }
}

TEST(ParseConfig, MissingFieldsListed) {
  try {
    parse_config_text(R"({"model": {"n_layers": 2}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_TRUE(Mentions(e, "model.hidden: missing field"));
    EXPECT_TRUE(Mentions(e, "device: missing field"));
    EXPECT_GE(e.errors().size(), 3u);
  }
}

TEST(ParseConfig, MalformedJson) {
  EXPECT_THROW(parse_config_text("{"), ConfigError);
}

TEST(ParseConfig, RoundTrip) {
  ExperimentConfig c = parse_config_text(R"({
    "model": {"preset": "llama3_8b_262k", "act_coeff": 20.5},
    "device": {"preset": "a100_80gb", "map_cost": 7e-6},
    "scheduler": {"theta": 100, "prefill_priority": false},
    "buffer": {"capacity_chunks": 4096, "alpha": 3, "policy": "adaptive"},
    "workload": {"kind": "trace", "trace": [
      {"arrival_s": 0.5, "input_tokens": 10, "output_tokens": 3}]},
    "mode": "static",
    "slo": {"multiplier": 10, "ttft": 2.5},
    "seed": 9,
    "output": "x.json"
  })");
  const ExperimentConfig again = parse_config(to_json(c));
  EXPECT_EQ(again, c);
  const ExperimentConfig minimal = parse_config_text(kMinimal);
  EXPECT_EQ(parse_config(to_json(minimal)), minimal);
}

TEST(IngestTrace, ThreeRecords) {
  std::istringstream in(
      "{\"arrival_s\": 0.0, \"input_tokens\": 5, \"output_tokens\": 2}\n"
      "\n"
      "{\"arrival_s\": 0.5, \"input_tokens\": 6, \"output_tokens\": 3}\n"
      "{\"arrival_s\": 1.5, \"input_tokens\": 7, \"output_tokens\": 4}\n");
  const TraceIngest t = ingest_trace(in);
  EXPECT_EQ(t.workload.trace.size(), 3u);
  EXPECT_EQ(t.workload.kind, WorkloadKind::kTrace);
  EXPECT_TRUE(t.warnings.empty());
}

TEST(IngestTrace, ZeroInputFailsWithLine) {
  std::istringstream in(
      "{\"arrival_s\": 0.0, \"input_tokens\": 5, \"output_tokens\": 2}\n"
      "{\"arrival_s\": 0.1, \"input_tokens\": 0, \"output_tokens\": 2}\n");
  try {
    ingest_trace(in);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_TRUE(Mentions(e, "line 2"));
  }
}

TEST(IngestTrace, MalformedLine) {
  std::istringstream in("not json\n");
  try {
    ingest_trace(in);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_TRUE(Mentions(e, "line 1"));
  }
}

TEST(IngestTrace, UnsortedIsSortedWithWarning) {
  std::istringstream in(
      "{\"arrival_s\": 2.0, \"input_tokens\": 5, \"output_tokens\": 2}\n"
      "{\"arrival_s\": 1.0, \"input_tokens\": 6, \"output_tokens\": 2}\n"
      "{\"arrival_s\": 3.0, \"input_tokens\": 7, \"output_tokens\": 2}\n");
  const TraceIngest t = ingest_trace(in);
  ASSERT_EQ(t.warnings.size(), 1u);
  for (size_t i = 1; i < t.workload.trace.size(); ++i) {
    EXPECT_LE(t.workload.trace[i - 1].arrival_s, t.workload.trace[i].arrival_s);
  }
  EXPECT_EQ(t.workload.trace[0].input_tokens, 6);
}

}  // namespace
}  // namespace elasim
