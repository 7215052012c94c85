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

#include "elasim/scheduler.h"

namespace elasim {

int64_t ballooning_directive(const PlannerCounters& c, int64_t kv_demand,
                             int64_t act_demand) {
  if (c.free_kv < kv_demand && c.free_act > act_demand) {
    return kv_demand - c.free_kv;
  }
  if (c.free_act < act_demand && c.free_kv > kv_demand) {
    return c.free_act - act_demand;
  }
  return 0;
}

IterationPlan plan_prefill(const SchedulerConfig& cfg,
                           const PlannerCounters& c,
                           std::span<const PlanRequest> queue,
                           int64_t buffer_space) {
  IterationPlan plan;
  plan.phase = Phase::kPrefill;
  int64_t buffer = buffer_space;
  for (const PlanRequest& r : queue) {
    const int64_t held = plan.kv_demand + plan.act_demand;
    if (c.total - (held + r.kv_chunks + r.act_chunks) >= cfg.theta) {
      plan.batch.push_back(r.id);
      plan.kv_demand += r.kv_chunks;
      plan.act_demand += r.act_chunks;
    } else if (c.total - (held + r.act_chunks) >= cfg.theta &&
               r.kv_chunks <= buffer) {
      plan.batch.push_back(r.id);
      plan.offloads.push_back(r.id);
      plan.act_demand += r.act_chunks;
      buffer -= r.kv_chunks;
    } else {
      break;
    }
  }
  plan.buffer_left = buffer;
  plan.inflation = ballooning_directive(c, plan.kv_demand, plan.act_demand);
  return plan;
}

IterationPlan plan_decode(const SchedulerConfig& cfg,
                          const PlannerCounters& c,
                          std::span<const PlanRequest> queue) {
  IterationPlan plan;
  plan.phase = Phase::kDecode;
  for (const PlanRequest& r : queue) {
    const int64_t held = plan.kv_demand + plan.act_demand;
    if (c.total - (held + r.kv_chunks + r.act_chunks) < cfg.theta) break;
    plan.batch.push_back(r.id);
    if (r.on_host) plan.fetches.push_back(r.id);
    plan.kv_demand += r.kv_chunks;
    plan.act_demand += r.act_chunks;
  }
  plan.inflation = ballooning_directive(c, plan.kv_demand, plan.act_demand);
  return plan;
}

namespace {

IterationPlan plan_static(const SchedulerConfig& cfg, const PlannerCounters& c,
                          std::span<const PlanRequest> queue, Phase phase) {
  IterationPlan plan;
  plan.phase = phase;
  for (const PlanRequest& r : queue) {
    if (r.on_host) break;
    if (c.free_kv - (plan.kv_demand + r.kv_chunks) < cfg.theta) break;
    if (plan.act_demand + r.act_chunks > c.free_act) break;
    plan.batch.push_back(r.id);
    plan.kv_demand += r.kv_chunks;
    plan.act_demand += r.act_chunks;
  }
  return plan;
}

}  // namespace

IterationPlan plan_prefill_static(const SchedulerConfig& cfg,
                                  const PlannerCounters& c,
                                  std::span<const PlanRequest> queue) {
  return plan_static(cfg, c, queue, Phase::kPrefill);
}

IterationPlan plan_decode_static(const SchedulerConfig& cfg,
                                 const PlannerCounters& c,
                                 std::span<const PlanRequest> queue) {
  return plan_static(cfg, c, queue, Phase::kDecode);
}

Phase select_phase(const SchedulerConfig& cfg, bool waiting, bool decodable,
                   const IterationPlan& prefill_plan) {
  if (waiting && !prefill_plan.empty() &&
      (cfg.prefill_priority || !decodable)) {
    return Phase::kPrefill;
  }
  return Phase::kDecode;
}

}  // namespace elasim
