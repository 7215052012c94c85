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

#include <random>
#include <vector>

#include "elasim/scheduler.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace elasim {
namespace {

std::vector<PlanRequest> Queue(const std::vector<oracle::Item>& items) {
  std::vector<PlanRequest> q;
  for (size_t i = 0; i < items.size(); ++i) {
    q.push_back(PlanRequest{RequestId(static_cast<int64_t>(i)), items[i].act,
                            items[i].kv, items[i].swapped});
  }
  return q;
}

std::vector<int64_t> Ids(const std::vector<RequestId>& v) {
  std::vector<int64_t> out;
  for (RequestId id : v) out.push_back(id.value);
  return out;
}

std::vector<int64_t> Ints(const std::vector<int>& v) {
  return std::vector<int64_t>(v.begin(), v.end());
}

TEST(PlanPrefill, WorkedExample) {
  const SchedulerConfig cfg{10, true};
  const PlannerCounters c{100, 50, 40};
  const auto q = Queue({{20, 15}, {20, 15}, {20, 15}});
  const IterationPlan p = plan_prefill(cfg, c, q, 20);
  EXPECT_EQ(Ids(p.batch), (std::vector<int64_t>{0, 1, 2}));
  EXPECT_EQ(Ids(p.offloads), (std::vector<int64_t>{2}));
  EXPECT_EQ(p.buffer_left, 5);
  EXPECT_EQ(p.kv_demand, 30);
  EXPECT_EQ(p.act_demand, 60);
  EXPECT_EQ(p.inflation, -20);
}

TEST(PlanPrefill, EmptyQueue) {
  const IterationPlan p = plan_prefill({10, true}, {100, 50, 40}, {}, 20);
  EXPECT_TRUE(p.batch.empty());
  EXPECT_EQ(p.inflation, 0);
}

TEST(PlanPrefill, BreaksOnFirstOversizedRequest) {
  const auto q = Queue({{95, 1}, {1, 1}});
  const IterationPlan p = plan_prefill({10, true}, {100, 50, 40}, q, 100);
  EXPECT_TRUE(p.batch.empty());
}

TEST(PlanDecode, AmpleMemoryAdmitsAll) {
  const auto q = Queue({{1, 1}, {1, 1}, {1, 1}});
  const IterationPlan p = plan_decode({2, true}, {100, 2, 50}, q);
  EXPECT_EQ(p.batch.size(), 3u);
  EXPECT_EQ(p.inflation, 1);  // KV demand 3 vs 2 free
}

TEST(PlanDecode, SwappedRequestTooLargeBreaks) {
  const auto q = Queue({{1, 0, false}, {1, 96, true}, {1, 0, false}});
  const IterationPlan p = plan_decode({5, true}, {100, 50, 50}, q);
  EXPECT_EQ(Ids(p.batch), (std::vector<int64_t>{0}));
  EXPECT_TRUE(p.fetches.empty());
}

TEST(PlanDecode, SwappedRequestFetched) {
  const auto q = Queue({{1, 0, false}, {1, 20, true}});
  const IterationPlan p = plan_decode({5, true}, {100, 50, 50}, q);
  EXPECT_EQ(Ids(p.fetches), (std::vector<int64_t>{1}));
}

TEST(Ballooning, Examples) {
  EXPECT_EQ(ballooning_directive({0, 2, 10}, 5, 0), 3);
  EXPECT_EQ(ballooning_directive({0, 50, 40}, 30, 60), -20);
  EXPECT_EQ(ballooning_directive({0, 50, 40}, 30, 30), 0);
}

TEST(SelectPhase, Policy) {
  const SchedulerConfig cfg{0, true};
  IterationPlan admits;
  admits.batch.push_back(RequestId(0));
  const IterationPlan blocked;
  EXPECT_EQ(select_phase(cfg, false, true, admits), Phase::kDecode);
  EXPECT_EQ(select_phase(cfg, true, true, admits), Phase::kPrefill);
  EXPECT_EQ(select_phase(cfg, true, true, blocked), Phase::kDecode);
  const SchedulerConfig decode_first{0, false};
  EXPECT_EQ(select_phase(decode_first, true, true, admits), Phase::kDecode);
  EXPECT_EQ(select_phase(decode_first, true, false, admits), Phase::kPrefill);
}

TEST(SelectPhase, BlockedPrefillWithFullBufferDecodes) {
  const SchedulerConfig cfg{10, true};
  const PlannerCounters c{40, 20, 20};
  const auto q = Queue({{20, 20}});
  const IterationPlan pp = plan_prefill(cfg, c, q, 0);
  EXPECT_TRUE(pp.empty());
  EXPECT_EQ(select_phase(cfg, true, true, pp), Phase::kDecode);
}

TEST(StaticPlanner, KvPartitionAndReserve) {
  const SchedulerConfig cfg{2, true};
  const PlannerCounters c{0, 10, 6};
  const auto q = Queue({{3, 4}, {3, 4}, {1, 1}});
  const IterationPlan p = plan_prefill_static(cfg, c, q);
  EXPECT_EQ(p.batch.size(), 2u);
  EXPECT_EQ(p.inflation, 0);
  EXPECT_TRUE(p.offloads.empty());
}

// Random small instances against the line-by-line interpreter; also checks
// the FCFS-prefix and headroom properties.
TEST(PlannerProperty, MatchesInterpreter) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 2000; ++trial) {
    const int64_t p_t = oracle::uniform(rng, 1, 64);
    const int64_t p_kv = oracle::uniform(rng, 0, p_t);
    const int64_t p_act = oracle::uniform(rng, 0, p_t - p_kv);
    const int64_t theta = oracle::uniform(rng, 0, p_t - 1);
    const int64_t p_b = oracle::uniform(rng, 0, 40);
    const bool prefill = trial % 2 == 0;
    std::vector<oracle::Item> items(oracle::uniform(rng, 0, 8));
    for (auto& it : items) {
      it.act = oracle::uniform(rng, 0, 16);
      it.kv = oracle::uniform(rng, 0, 16);
      it.swapped = !prefill && oracle::uniform(rng, 0, 1) == 1;
    }
    const oracle::Outcome want =
        oracle::admission(prefill, p_kv, p_act, p_t, items, theta, p_b);
    const SchedulerConfig cfg{theta, true};
    const PlannerCounters c{p_t, p_kv, p_act};
    const auto q = Queue(items);
    const IterationPlan got =
        prefill ? plan_prefill(cfg, c, q, p_b) : plan_decode(cfg, c, q);
    ASSERT_EQ(Ids(got.batch), Ints(want.batch)) << "trial " << trial;
    ASSERT_EQ(Ids(got.offloads), Ints(want.offloaded));
    ASSERT_EQ(Ids(got.fetches), Ints(want.fetched));
    ASSERT_EQ(got.inflation, want.inflation);
    for (size_t i = 0; i < got.batch.size(); ++i) {
      ASSERT_EQ(got.batch[i].value, static_cast<int64_t>(i));
    }
    if (!got.batch.empty()) {
      ASSERT_GE(p_t - got.kv_demand - got.act_demand, theta);
    }
  }
}

}  // namespace
}  // namespace elasim
