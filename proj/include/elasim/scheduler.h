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

#ifndef ELASIM_SCHEDULER_H_
#define ELASIM_SCHEDULER_H_

// Iteration-level admission over snapshot counters. Planners are pure: they
// never touch the pools; the engine executes the returned plan.

#include <cstdint>
#include <span>
#include <vector>

#include "elasim/common.h"

namespace elasim {

struct SchedulerConfig {
  int64_t theta = 0;  // chunks kept free after every plan
  bool prefill_priority = true;
};

// Snapshot handed to a planner.
struct PlannerCounters {
  int64_t total = 0;     // chunks the planner may hand out
  int64_t free_kv = 0;
  int64_t free_act = 0;
};

struct PlanRequest {
  RequestId id;
  int64_t act_chunks = 0;
  int64_t kv_chunks = 0;
  // Decode: KV sits in the host buffer and has to be fetched.
  bool on_host = false;
};

enum class Phase : uint8_t { kPrefill, kDecode };

struct IterationPlan {
  Phase phase = Phase::kPrefill;
  std::vector<RequestId> batch;
  // >0 moves chunks from activations to KV, <0 the other way.
  int64_t inflation = 0;
  std::vector<RequestId> offloads;
  std::vector<RequestId> fetches;
  int64_t kv_demand = 0;
  int64_t act_demand = 0;
  int64_t buffer_left = 0;

  bool empty() const { return batch.empty(); }
};

// Admission scan for a prefill iteration. Requests that do not fit on the
// device may still be admitted with their KV sent to the host buffer.
IterationPlan plan_prefill(const SchedulerConfig& cfg,
                           const PlannerCounters& counters,
                           std::span<const PlanRequest> queue,
                           int64_t buffer_space);

// Admission scan for a decode iteration. Host-resident requests are fetched.
IterationPlan plan_decode(const SchedulerConfig& cfg,
                          const PlannerCounters& counters,
                          std::span<const PlanRequest> queue);

int64_t ballooning_directive(const PlannerCounters& counters,
                             int64_t kv_demand, int64_t act_demand);

// Fixed-partition admission: KV must fit the KV pool with theta to spare and
// activations must fit the activation reserve. No borrowing, no offload.
IterationPlan plan_prefill_static(const SchedulerConfig& cfg,
                                  const PlannerCounters& counters,
                                  std::span<const PlanRequest> queue);
IterationPlan plan_decode_static(const SchedulerConfig& cfg,
                                 const PlannerCounters& counters,
                                 std::span<const PlanRequest> queue);

// With prefill priority, prefill wins whenever requests wait and the prefill
// plan admits one. Without it, prefill runs only when nothing can decode.
Phase select_phase(const SchedulerConfig& cfg, bool waiting, bool decodable,
                   const IterationPlan& prefill_plan);

}  // namespace elasim

#endif  // ELASIM_SCHEDULER_H_
