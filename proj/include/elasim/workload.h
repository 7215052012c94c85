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

#ifndef ELASIM_WORKLOAD_H_
#define ELASIM_WORKLOAD_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace elasim {

enum class WorkloadKind : uint8_t { kPoisson, kFixedBatch, kTrace };

struct TraceRecord {
  double arrival_s = 0;
  int64_t input_tokens = 0;
  int64_t output_tokens = 0;

  bool operator==(const TraceRecord&) const = default;
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kPoisson;
  double rate = 1.0;  // requests/s, Poisson only
  int64_t input_tokens = 2048;
  int64_t output_tokens = 2048;
  int64_t count = 100;
  uint64_t seed = 0;
  std::vector<TraceRecord> trace;  // Trace only

  bool operator==(const WorkloadSpec&) const = default;
};

std::string_view to_string(WorkloadKind kind);
WorkloadKind workload_kind_from_string(const std::string& s);

std::vector<std::string> validate(const WorkloadSpec& w);

// Arrival sequence sorted by time. Poisson gaps come from a generator seeded
// with `seed`, so equal specs give equal sequences.
std::vector<TraceRecord> generate_arrivals(const WorkloadSpec& w);

}  // namespace elasim

#endif  // ELASIM_WORKLOAD_H_
