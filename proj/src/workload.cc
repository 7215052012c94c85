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

#include "elasim/workload.h"

#include <algorithm>
#include <random>

#include "elasim/common.h"

namespace elasim {

std::string_view to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::kPoisson:
      return "poisson";
    case WorkloadKind::kFixedBatch:
      return "fixed_batch";
    case WorkloadKind::kTrace:
      return "trace";
  }
  return "?";
}

WorkloadKind workload_kind_from_string(const std::string& s) {
  if (s == "poisson") return WorkloadKind::kPoisson;
  if (s == "fixed_batch") return WorkloadKind::kFixedBatch;
  if (s == "trace") return WorkloadKind::kTrace;
  throw Error("unknown workload kind '" + s + "'");
}

std::vector<std::string> validate(const WorkloadSpec& w) {
  std::vector<std::string> errs;
  if (w.kind == WorkloadKind::kTrace) {
    if (w.trace.empty()) errs.push_back("workload.trace has no records");
    for (size_t i = 0; i < w.trace.size(); ++i) {
      const TraceRecord& r = w.trace[i];
      if (!(r.arrival_s >= 0) || r.input_tokens < 1 || r.output_tokens < 1) {
        errs.push_back("workload.trace[" + std::to_string(i) +
                       "] needs arrival_s >= 0 and token counts >= 1");
      }
    }
    return errs;
  }
  if (w.kind == WorkloadKind::kPoisson && !(w.rate > 0)) {
    errs.push_back("workload.rate must be > 0");
  }
  if (w.input_tokens < 1) errs.push_back("workload.input_tokens must be >= 1");
  if (w.output_tokens < 1) {
    errs.push_back("workload.output_tokens must be >= 1");
  }
  if (w.count < 1) errs.push_back("workload.count must be >= 1");
  return errs;
}

std::vector<TraceRecord> generate_arrivals(const WorkloadSpec& w) {
  std::vector<TraceRecord> out;
  switch (w.kind) {
    case WorkloadKind::kTrace:
      out = w.trace;
      std::stable_sort(out.begin(), out.end(),
                       [](const TraceRecord& a, const TraceRecord& b) {
                         return a.arrival_s < b.arrival_s;
                       });
      break;
    case WorkloadKind::kFixedBatch:
      out.assign(static_cast<size_t>(w.count),
                 TraceRecord{0.0, w.input_tokens, w.output_tokens});
      break;
    case WorkloadKind::kPoisson: {
      std::mt19937_64 rng(w.seed);
      std::exponential_distribution<double> gap(w.rate);
      double t = 0;
      out.reserve(static_cast<size_t>(w.count));
      for (int64_t i = 0; i < w.count; ++i) {
        t += gap(rng);
        out.push_back(TraceRecord{t, w.input_tokens, w.output_tokens});
      }
      break;
    }
  }
  return out;
}

}  // namespace elasim
