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

#ifndef ELASIM_VMM_H_
#define ELASIM_VMM_H_

// Metadata-only model of a GPU virtual memory manager: a fixed registry of
// physical chunks, chunk-aligned virtual spans (tensor slots), per-slot
// mapping tables and a queue of deferred unmaps. No real memory is touched.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elasim/common.h"

namespace elasim {

enum class SlotState : uint8_t { kAvailable, kInUse, kPendingUnmap };

// Which accounting bucket an operation is charged to.
enum class Charge : uint8_t { kOnPath, kBackground };

struct MappingEntry {
  ChunkId chunk;         // invalid: hole
  bool pending = false;  // queued for deferred unmap
};

struct TensorSlot {
  SlotId id;
  int64_t base = 0;  // virtual address, multiple of chunk_bytes
  int64_t length_chunks = 0;
  PoolKind kind = PoolKind::kKv;
  SlotState state = SlotState::kAvailable;
  // Entries past mapping.size() are unmapped.
  std::vector<MappingEntry> mapping;
  int64_t live = 0;     // entries mapped and not pending
  int64_t pending = 0;  // entries awaiting deferred unmap
};

struct SlotRef {
  SlotId slot;
  int64_t offset = 0;
  bool operator==(const SlotRef&) const = default;
};

struct PhysicalChunk {
  ChunkId id;
  PoolKind owner = PoolKind::kKv;
  // At most two entries; two only while the older one is pending unmap.
  std::vector<SlotRef> mapped_into;
};

// Operation counters. Costs are kept in integer nanoseconds so totals are
// exact multiples of the per-op cost.
struct VmmAccounting {
  int64_t map_cost_ns = 0;
  int64_t unmap_cost_ns = 0;
  int64_t maps_on_path = 0;
  int64_t maps_background = 0;
  int64_t unmaps_on_path = 0;
  int64_t unmaps_background = 0;

  int64_t map_count() const { return maps_on_path + maps_background; }
  int64_t unmap_count() const { return unmaps_on_path + unmaps_background; }
  int64_t on_path_ns() const {
    return maps_on_path * map_cost_ns + unmaps_on_path * unmap_cost_ns;
  }
  int64_t background_ns() const {
    return maps_background * map_cost_ns + unmaps_background * unmap_cost_ns;
  }
  int64_t total_ns() const { return on_path_ns() + background_ns(); }
  double on_path_seconds() const { return on_path_ns() * 1e-9; }
  double background_seconds() const { return background_ns() * 1e-9; }
  double total_seconds() const { return total_ns() * 1e-9; }
};

struct VmmOptions {
  int64_t chunk_bytes = int64_t{2} << 20;
  double map_cost = 5e-6;
  double unmap_cost = 10e-6;
  // Upper bound on reserved virtual bytes; unset means unbounded.
  std::optional<int64_t> virtual_ceiling;
};

class AddressSpace {
 public:
  // Creates `n_chunks` physical chunks, all owned by `initial_owner`.
  AddressSpace(int64_t n_chunks, PoolKind initial_owner, VmmOptions options);

  int64_t chunk_bytes() const { return options_.chunk_bytes; }
  int64_t num_chunks() const { return static_cast<int64_t>(chunks_.size()); }
  const PhysicalChunk& chunk(ChunkId id) const;

  // Relabels a chunk. The chunk must have no live (non-pending) mapping.
  void set_owner(ChunkId id, PoolKind owner);

  // Fresh chunk-aligned span with an empty mapping.
  SlotId reserve_span(int64_t length_chunks, PoolKind kind);

  bool has_slot(SlotId id) const;
  const TensorSlot& slot(SlotId id) const;
  void set_state(SlotId id, SlotState state);

  // Maps `chunk` at `offset`. KV slots only accept the first offset past the
  // live prefix. A pending entry at `offset` is unmapped synchronously first.
  void map_chunk(SlotId slot, int64_t offset, ChunkId chunk,
                 Charge charge = Charge::kOnPath);

  // Maps the chunks at `offsets` of `from` into the first free positions of
  // `to` (taking `to`'s ownership label) and queues the old entries for
  // deferred unmap. `to` is usable immediately.
  void remap_overlapped(SlotId from, SlotId to,
                        std::span<const int64_t> offsets,
                        Charge charge = Charge::kOnPath);

  // Queues one live entry for deferred unmap. For KV slots the entry must be
  // the last live one so the live prefix stays contiguous.
  ChunkId defer_unmap(SlotId slot, int64_t offset);

  // Unmaps up to `budget` queued entries, charged to the background bucket.
  // Empty PendingUnmap slots are retired. Returns the number unmapped.
  int64_t drain_deferred(int64_t budget);

  // Unmaps every entry of a non-InUse slot synchronously and returns the
  // chunks that were live in it. The slot stays reserved, now empty.
  std::vector<ChunkId> unmap_slot(SlotId slot);

  // Drops an empty slot's record. Its virtual range is never reused.
  void retire_slot(SlotId slot);

  int64_t deferred_size() const { return pending_total_; }
  const VmmAccounting& accounting() const { return acct_; }
  int64_t reserved_virtual_bytes() const { return next_free_base_; }

  // Returns every broken invariant found by a full scan; empty when sound.
  std::vector<std::string> audit() const;

 private:
  struct DeferredUnmap {
    SlotId slot;
    int64_t offset = 0;
    ChunkId chunk;
  };

  TensorSlot& slot_mut(SlotId id);
  PhysicalChunk& chunk_mut(ChunkId id);
  // Clears a pending entry and charges one unmap.
  void unmap_pending(TensorSlot& s, int64_t offset, Charge charge);
  void unmap_entry(TensorSlot& s, int64_t offset, Charge charge);
  void flush_one_pending(PhysicalChunk& c, Charge charge);
  void trim_tail(TensorSlot& s);
  int64_t first_free_offset(const TensorSlot& s, int64_t from) const;
  void charge_map(Charge charge);
  void charge_unmap(Charge charge);

  VmmOptions options_;
  std::vector<PhysicalChunk> chunks_;
  std::vector<std::optional<TensorSlot>> slots_;
  std::deque<DeferredUnmap> deferred_;
  int64_t pending_total_ = 0;
  int64_t next_free_base_ = 0;
  VmmAccounting acct_;
};

}  // namespace elasim

#endif  // ELASIM_VMM_H_
