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

#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "elasim/common.h"
#include "elasim/pools.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace elasim {
namespace {

constexpr int64_t kChunk = int64_t{2} << 20;

PoolOptions Opts(int64_t total, int64_t act, bool elastic = true) {
  PoolOptions o;
  o.total_chunks = total;
  o.initial_act_chunks = act;
  o.kv_span_chunks = 16;
  o.elastic = elastic;
  o.premap_budget_bytes = int64_t{50} << 20;
  o.vmm.chunk_bytes = kChunk;
  return o;
}

void ExpectSound(const ElasticPools& p) {
  const std::vector<std::string> errs = p.audit();
  EXPECT_TRUE(errs.empty()) << (errs.empty() ? "" : errs.front());
  const PoolCounters c = p.counters();
  EXPECT_EQ(c.owned_kv() + c.owned_act(), c.total);
}

// Leaves Available KV slots of the given sizes and returns their slot ids,
// in order of creation (and so of base address).
std::vector<SlotId> MakeIdleSlots(ElasticPools& p,
                                  const std::vector<int64_t>& sizes) {
  std::vector<TensorId> ids;
  std::vector<SlotId> slots;
  for (int64_t s : sizes) {
    const TensorId t = p.kv_acquire(s);
    p.kv_write(t, s);
    ids.push_back(t);
    slots.push_back(p.tensor(t).slot);
  }
  for (TensorId t : ids) p.release(t);
  return slots;
}

TEST(KvAcquire, BestFitPicksSmallestFeasible) {
  ElasticPools p(Opts(64, 0));
  const auto slots = MakeIdleSlots(p, {2, 4, 8});
  const TensorId t = p.kv_acquire(3);
  EXPECT_TRUE(p.tensor(t).reused_slot);
  EXPECT_EQ(p.tensor(t).slot, slots[1]);
  EXPECT_EQ(p.vmm().slot(p.tensor(t).slot).length_chunks, 16);
  EXPECT_EQ(p.tensor(t).mapped, 3);  // size-4 slot trimmed to 3
  EXPECT_EQ(p.stats().kv_reuse_hits, 1);
  ExpectSound(p);
}

TEST(KvAcquire, NoFeasibleSlotTakesFreshSpan) {
  ElasticPools p(Opts(64, 0));
  MakeIdleSlots(p, {2});
  const int64_t maps_before = p.vmm().accounting().map_count();
  const TensorId t = p.kv_acquire(3);
  EXPECT_FALSE(p.tensor(t).reused_slot);
  EXPECT_EQ(p.tensor(t).mapped, 0);
  EXPECT_EQ(p.tensor(t).claimed, 3);
  p.kv_write(t, 3);
  EXPECT_EQ(p.vmm().accounting().map_count() - maps_before, 3);
  ExpectSound(p);
}

TEST(KvAcquire, TieGoesToLowestBase) {
  ElasticPools p(Opts(64, 0));
  const auto slots = MakeIdleSlots(p, {4, 4});
  ASSERT_LT(p.vmm().slot(slots[0]).base, p.vmm().slot(slots[1]).base);
  const TensorId t = p.kv_acquire(4);
  EXPECT_EQ(p.tensor(t).slot, slots[0]);
  ExpectSound(p);
}

TEST(KvAcquire, ReuseAtEqualSizeCostsNoMaps) {
  ElasticPools p(Opts(64, 0));
  TensorId t = p.kv_acquire(5);
  p.kv_write(t, 5);
  p.release(t);
  const int64_t maps = p.vmm().accounting().map_count();
  t = p.kv_acquire(5);
  p.kv_write(t, 5);
  EXPECT_EQ(p.vmm().accounting().map_count(), maps);
  ExpectSound(p);
}

TEST(KvAcquire, FailsWhenStaticPoolShort) {
  ElasticPools p(Opts(10, 6, /*elastic=*/false));
  EXPECT_THROW(p.kv_acquire(5), AdmissionFailure);
  EXPECT_NO_THROW(p.kv_acquire(4));
  ExpectSound(p);
}

TEST(KvAcquire, ElasticBorrowsFromActivations) {
  ElasticPools p(Opts(10, 6));
  const TensorId t = p.kv_acquire(8);
  p.kv_write(t, 8);
  EXPECT_GE(p.stats().inflated_chunks, 4);
  EXPECT_EQ(p.counters().used_kv, 8);
  ExpectSound(p);
}

// Random idle-slot sets: the reused slot always matches the brute-force
// argmin over (size, base).
TEST(KvAcquire, MatchesBruteForceOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = static_cast<int>(oracle::uniform(rng, 1, 7));
    std::vector<int64_t> sizes;
    for (int i = 0; i < n; ++i) sizes.push_back(oracle::uniform(rng, 1, 6));
    ElasticPools p(Opts(64, 0));
    const auto slots = MakeIdleSlots(p, sizes);
    const int64_t s = oracle::uniform(rng, 1, 7);
    const auto want = oracle::best_fit(sizes, s);
    const TensorId got = p.kv_acquire(s);
    if (!want) {
      EXPECT_FALSE(p.tensor(got).reused_slot);
    } else {
      ASSERT_TRUE(p.tensor(got).reused_slot);
      EXPECT_EQ(p.tensor(got).slot, slots[*want]) << "trial " << trial;
    }
  }
}

TEST(ActAcquire, CoalescedNeighborsSatisfyLargerRequest) {
  ElasticPools p(Opts(6, 6));
  const TensorId a = p.act_acquire(3 * kChunk);
  const TensorId b = p.act_acquire(3 * kChunk);
  p.release(a);
  p.release(b);
  const TensorId c = p.act_acquire(5 * kChunk);
  EXPECT_EQ(p.tensor(c).mapped, 5);
  // Mapped chunks were reused in place: no new maps were needed.
  EXPECT_EQ(p.vmm().accounting().map_count(), 6);
  ExpectSound(p);
}

TEST(ActAcquire, ExactFitLeavesNoRemainder) {
  ElasticPools p(Opts(4, 4));
  const TensorId a = p.act_acquire(2 * kChunk);
  const TensorId b = p.act_acquire(2 * kChunk);
  const int64_t offset = p.tensor(a).region_offset;
  p.release(a);
  const TensorId c = p.act_acquire(2 * kChunk);
  EXPECT_EQ(p.tensor(c).region_offset, offset);
  EXPECT_EQ(p.vmm().accounting().map_count(), 4);
  (void)b;
  ExpectSound(p);
}

TEST(ActAcquire, PartialChunkRoundsUp) {
  ElasticPools p(Opts(4, 4));
  const TensorId a = p.act_acquire(1);
  EXPECT_EQ(p.tensor(a).mapped, 1);
  EXPECT_THROW(p.act_acquire(0), PoolError);
}

TEST(ActAcquire, StaticShortfallFails) {
  ElasticPools p(Opts(8, 2, false));
  EXPECT_THROW(p.act_acquire(3 * kChunk), AdmissionFailure);
}

TEST(ActAcquire, ElasticDeflatesOnShortfall) {
  ElasticPools p(Opts(8, 2));
  const TensorId a = p.act_acquire(5 * kChunk);
  EXPECT_EQ(p.tensor(a).mapped, 5);
  EXPECT_EQ(p.stats().deflated_chunks, 3);
  ExpectSound(p);
}

TEST(Release, DoubleReleaseThrows) {
  ElasticPools p(Opts(8, 2));
  const TensorId t = p.kv_acquire(2);
  p.release(t);
  EXPECT_THROW(p.release(t), PoolError);
}

TEST(Release, FreeCountGrowsByWritten) {
  ElasticPools p(Opts(16, 0));
  const TensorId t = p.kv_acquire(5);
  p.kv_write(t, 5);
  const int64_t before = p.counters().free_kv;
  p.release(t);
  EXPECT_EQ(p.counters().free_kv - before, 5);
  EXPECT_EQ(p.available_kv_slots(), 1);
}

TEST(Inflate, MovesUpToAvailable) {
  ElasticPools p(Opts(20, 10));
  const PoolCounters before = p.counters();
  EXPECT_EQ(p.inflate(3), 3);
  EXPECT_EQ(p.counters().owned_kv(), before.owned_kv() + 3);
  EXPECT_EQ(p.counters().total, before.total);
  ElasticPools q(Opts(20, 2));
  EXPECT_EQ(q.inflate(3), 2);
  ExpectSound(p);
  ExpectSound(q);
}

TEST(Inflate, ReclaimsIdleActivationRegions) {
  ElasticPools p(Opts(8, 4));
  const TensorId a = p.act_acquire(4 * kChunk);
  p.release(a);  // still mapped, idle
  EXPECT_EQ(p.inflate(3), 3);
  EXPECT_EQ(p.stats().gc_unmaps, 3);
  ExpectSound(p);
  p.drain_deferred(100);
  ExpectSound(p);
}

TEST(Inflate, NeverTouchesInUseRegions) {
  ElasticPools p(Opts(8, 4));
  const TensorId a = p.act_acquire(4 * kChunk);
  EXPECT_EQ(p.inflate(4), 0);
  EXPECT_EQ(p.tensor(a).mapped, 4);
  ExpectSound(p);
}

TEST(Deflate, MirrorAndInverse) {
  ElasticPools p(Opts(20, 10));
  const PoolCounters start = p.counters();
  EXPECT_EQ(p.deflate(4), 4);
  EXPECT_EQ(p.counters().owned_act(), start.owned_act() + 4);
  EXPECT_EQ(p.inflate(4), 4);
  EXPECT_EQ(p.counters().owned_act(), start.owned_act());
  EXPECT_EQ(p.counters().owned_kv(), start.owned_kv());
  ExpectSound(p);
}

TEST(Deflate, ReclaimsIdleKvSlotsButNotLiveOnes) {
  ElasticPools p(Opts(10, 0));
  const TensorId live = p.kv_acquire(4);
  p.kv_write(live, 4);
  const TensorId idle = p.kv_acquire(6);
  p.kv_write(idle, 6);
  p.release(idle);
  EXPECT_EQ(p.deflate(10), 6);
  EXPECT_EQ(p.tensor(live).mapped, 4);
  ExpectSound(p);
}

TEST(Premap, NothingNearBoundary) {
  ElasticPools p(Opts(64, 0));
  const TensorId t = p.kv_acquire(4);
  p.kv_write(t, 2);
  const std::vector<PremapCandidate> c{{t, 2}};
  EXPECT_EQ(p.speculative_premap(c), 0);
}

TEST(Premap, BudgetCapsAt25Chunks) {
  ElasticPools p(Opts(200, 0));
  std::vector<PremapCandidate> cands;
  for (int i = 0; i < 40; ++i) {
    const TensorId t = p.kv_acquire(4);
    p.kv_write(t, 1);
    cands.push_back({t, 2});
  }
  EXPECT_EQ(p.premap_budget_chunks(), 25);
  EXPECT_EQ(p.speculative_premap(cands), 25);
  ExpectSound(p);
}

TEST(Premap, NextWriteIsFree) {
  ElasticPools p(Opts(64, 0));
  const TensorId t = p.kv_acquire(4);
  p.kv_write(t, 1);
  const std::vector<PremapCandidate> c{{t, 2}};
  ASSERT_EQ(p.speculative_premap(c), 1);
  const int64_t on_path = p.vmm().accounting().maps_on_path;
  p.kv_write(t, 2);
  EXPECT_EQ(p.vmm().accounting().maps_on_path, on_path);
  EXPECT_EQ(p.vmm().accounting().maps_background, 1);
}

// Randomized mixed workload over the pool API; the ownership partition and
// the full audit hold after every call.
TEST(PoolsProperty, ConservationUnderRandomOps) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t total = oracle::uniform(rng, 8, 48);
    ElasticPools p(Opts(total, oracle::uniform(rng, 0, total),
                        trial % 4 != 0));
    std::vector<TensorId> live;
    for (int step = 0; step < 400; ++step) {
      const int64_t op = oracle::uniform(rng, 0, 6);
      try {
        if (op == 0) {
          live.push_back(p.kv_acquire(oracle::uniform(rng, 1, 6)));
        } else if (op == 1) {
          live.push_back(p.act_acquire(oracle::uniform(rng, 1, 5) * kChunk));
        } else if (op == 2 && !live.empty()) {
          const size_t i = oracle::uniform(rng, 0, live.size() - 1);
          p.release(live[i]);
          live.erase(live.begin() + static_cast<ptrdiff_t>(i));
        } else if (op == 3 && !live.empty()) {
          const TensorId t = live[oracle::uniform(rng, 0, live.size() - 1)];
          if (p.tensor(t).kind == PoolKind::kKv) {
            p.kv_write(t, oracle::uniform(rng, p.tensor(t).mapped,
                                          p.tensor(t).claimed));
          }
        } else if (op == 4) {
          p.inflate(oracle::uniform(rng, 1, 6));
        } else if (op == 5) {
          p.deflate(oracle::uniform(rng, 1, 6));
        } else {
          p.drain_deferred(oracle::uniform(rng, 0, 8));
        }
      } catch (const AdmissionFailure&) {
      }
      const std::vector<std::string> errs = p.audit();
      ASSERT_TRUE(errs.empty()) << "trial " << trial << " step " << step
                                << ": " << errs.front();
      ASSERT_EQ(p.counters().total, total);
    }
  }
}

}  // namespace
}  // namespace elasim
