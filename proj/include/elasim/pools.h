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

#ifndef ELASIM_POOLS_H_
#define ELASIM_POOLS_H_

// KV and activation eTensor pools over one physical chunk registry.
//
// KV side: one tensor slot per request, best-fit reuse of released slots that
// are still mapped, physical chunks claimed at acquisition and mapped on
// write. Activation side: a best-fit-with-coalescing allocator over regions
// of a single activation arena slot. Inflation and deflation move chunks
// between the two by garbage-collecting idle mappings and flipping ownership.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "elasim/common.h"
#include "elasim/vmm.h"

namespace elasim {

using TensorId = Id<struct TensorTag>;

struct ETensor {
  TensorId id;
  PoolKind kind = PoolKind::kKv;
  SlotId slot;
  std::optional<RequestId> owner_request;
  int64_t written_chunks = 0;
  // KV: chunks claimed for this tensor (mapped + reserved-unmapped).
  int64_t claimed = 0;
  // KV: chunks live in the slot. ACT: region length.
  int64_t mapped = 0;
  // ACT: region start within the arena slot.
  int64_t region_offset = 0;
  bool reused_slot = false;
};

// Snapshot of the ownership partition. free_* + used_* == total.
struct PoolCounters {
  int64_t total = 0;
  int64_t free_kv = 0;   // unclaimed KV chunks, incl. idle mapped slots
  int64_t free_act = 0;  // P_act: ACT chunks not backing a live tensor
  int64_t used_kv = 0;
  int64_t used_act = 0;

  int64_t owned_kv() const { return free_kv + used_kv; }
  int64_t owned_act() const { return free_act + used_act; }
  int64_t free_total() const { return free_kv + free_act; }
};

struct PoolStats {
  int64_t inflate_events = 0;
  int64_t inflated_chunks = 0;
  int64_t deflate_events = 0;
  int64_t deflated_chunks = 0;
  int64_t kv_reuse_hits = 0;
  int64_t kv_fresh_spans = 0;
  int64_t premapped_chunks = 0;
  int64_t gc_unmaps = 0;
};

struct PoolOptions {
  int64_t total_chunks = 0;
  // Chunks initially labeled ACT; the rest start as KV.
  int64_t initial_act_chunks = 0;
  // Virtual length of a fresh KV slot (the model's context window).
  int64_t kv_span_chunks = 1;
  // Allows acquisitions to borrow across pools on shortfall.
  bool elastic = true;
  int64_t premap_budget_bytes = int64_t{50} << 20;
  VmmOptions vmm;
};

// Candidate for speculative pre-mapping: the tensor will need
// `chunks_needed` live chunks after the next token is written.
struct PremapCandidate {
  TensorId tensor;
  int64_t chunks_needed = 0;
};

class ElasticPools {
 public:
  explicit ElasticPools(PoolOptions options);

  // Smallest Available mapped KV slot with at least `chunks` chunks (ties:
  // lowest base). Without one, reserves a fresh span and claims `chunks`
  // physical chunks to be mapped as they are written. Throws
  // AdmissionFailure if the chunks cannot be found, after borrowing from the
  // activation pool when elastic.
  TensorId kv_acquire(int64_t chunks,
                      std::optional<RequestId> owner = std::nullopt);

  // Best-fit-with-coalescing region in the activation arena, fully mapped.
  TensorId act_acquire(int64_t bytes);

  // Maps the tensor's slot up to `chunks_needed` live chunks (on path).
  // Grows the claim from unclaimed KV chunks when needed.
  void kv_write(TensorId id, int64_t chunks_needed);

  // Returns the tensor's slot or region to its pool, still mapped.
  void release(TensorId id);

  // ACT -> KV transfer of up to `amount` chunks. Returns the count moved.
  int64_t inflate(int64_t amount);
  // KV -> ACT transfer of up to `amount` chunks. Returns the count moved.
  int64_t deflate(int64_t amount);

  // Maps one chunk ahead for each candidate whose next token crosses into an
  // unmapped chunk, up to the pre-map byte budget. Charged off the critical
  // path. Returns the number of chunks mapped.
  int64_t speculative_premap(std::span<const PremapCandidate> candidates);

  // Unmaps all deferred entries; background cost.
  int64_t drain_deferred(int64_t budget);

  PoolCounters counters() const;
  const PoolStats& stats() const { return stats_; }
  const ETensor& tensor(TensorId id) const;
  bool is_live(TensorId id) const { return tensors_.count(id) != 0; }
  const AddressSpace& vmm() const { return vmm_; }
  int64_t premap_budget_chunks() const;
  int64_t available_kv_slots() const {
    return static_cast<int64_t>(available_kv_.size());
  }

  // Full recount of the partition against the chunk registry; returns the
  // broken invariants (empty when sound).
  std::vector<std::string> audit() const;

 private:
  struct Region {
    int64_t length = 0;
    bool used = false;
  };

  int64_t unclaimed_free_kv() const {
    return static_cast<int64_t>(free_kv_.size()) - kv_reserved_;
  }
  // Defers up to `want` tail chunks of idle KV slots, largest slot first.
  // Reclaimed chunks keep their KV label and land on free_kv_.
  int64_t gc_kv_slots(int64_t want);
  // Defers up to `want` mapped chunks of free arena regions (largest region
  // first, highest offset first), skipping [skip_lo, skip_hi).
  int64_t gc_act_regions(int64_t want, int64_t skip_lo, int64_t skip_hi);
  void insert_free_region(int64_t offset, int64_t length);
  void erase_free_region(int64_t offset);
  TensorId next_tensor_id() { return TensorId(next_tensor_++); }

  PoolOptions options_;
  AddressSpace vmm_;
  std::vector<ChunkId> free_kv_;
  std::vector<ChunkId> free_act_;
  int64_t kv_reserved_ = 0;
  int64_t used_kv_mapped_ = 0;
  int64_t available_kv_mapped_ = 0;
  // (mapped size, slot id); slot ids grow with base address.
  std::set<std::pair<int64_t, int64_t>> available_kv_;

  SlotId arena_;
  int64_t arena_length_ = 0;
  std::map<int64_t, Region> regions_;
  std::set<std::pair<int64_t, int64_t>> free_regions_;  // (length, offset)
  std::set<int64_t> act_mapped_free_;  // live arena offsets in free regions
  int64_t act_used_mapped_ = 0;

  std::unordered_map<TensorId, ETensor> tensors_;
  int64_t next_tensor_ = 0;
  PoolStats stats_;
};

}  // namespace elasim

#endif  // ELASIM_POOLS_H_
