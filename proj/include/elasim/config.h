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

#ifndef ELASIM_CONFIG_H_
#define ELASIM_CONFIG_H_

// Experiment configuration files (JSON) and JSON-lines request traces.

#include <istream>
#include <string>
#include <vector>

#include "elasim/report.h"
#include "elasim/sim.h"

namespace elasim {

// Carries every field-level problem found, not just the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct ExperimentConfig {
  SimConfig sim;
  std::string output;  // empty: chosen by the command line

  bool operator==(const ExperimentConfig&) const = default;
};

// `base_dir` resolves relative trace paths.
ExperimentConfig parse_config(const Json& doc, const std::string& base_dir = ".");
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& base_dir = ".");
ExperimentConfig parse_config_file(const std::string& path);

// Effective config with every default filled in. Re-parses to an equal
// config.
Json to_json(const ExperimentConfig& c);

struct TraceIngest {
  WorkloadSpec workload;
  std::vector<std::string> warnings;
};

// One JSON object per line: arrival_s, input_tokens, output_tokens. Blank
// lines are skipped. Out-of-order arrivals are sorted with a warning.
TraceIngest ingest_trace(std::istream& in);
TraceIngest ingest_trace_file(const std::string& path);

}  // namespace elasim

#endif  // ELASIM_CONFIG_H_
