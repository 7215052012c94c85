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

#include "elasim/pools.h"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "elasim/footprint.h"

namespace elasim {

namespace {

bool is_live_entry(const TensorSlot& s, int64_t offset) {
  return offset < static_cast<int64_t>(s.mapping.size()) &&
         s.mapping[offset].chunk.valid() && !s.mapping[offset].pending;
}

}  // namespace

ElasticPools::ElasticPools(PoolOptions options)
    : options_(options),
      vmm_(options.total_chunks, PoolKind::kKv, options.vmm) {
  if (options_.initial_act_chunks < 0 ||
      options_.initial_act_chunks > options_.total_chunks) {
    throw PoolError("initial activation chunks outside [0, total]");
  }
  // Free lists are stacks; push in reverse so low ids are handed out first.
  for (int64_t i = options_.total_chunks - 1; i >= 0; --i) {
    const ChunkId c(i);
    if (i < options_.initial_act_chunks) {
      vmm_.set_owner(c, PoolKind::kAct);
      free_act_.push_back(c);
    } else {
      free_kv_.push_back(c);
    }
  }
  arena_length_ = std::max<int64_t>(1, 2 * options_.total_chunks);
  arena_ = vmm_.reserve_span(arena_length_, PoolKind::kAct);
  vmm_.set_state(arena_, SlotState::kInUse);
  insert_free_region(0, arena_length_);
}

const ETensor& ElasticPools::tensor(TensorId id) const {
  auto it = tensors_.find(id);
  if (it == tensors_.end()) {
    throw PoolError("unknown tensor " + std::to_string(id.value));
  }
  return it->second;
}

int64_t ElasticPools::premap_budget_chunks() const {
  return options_.premap_budget_bytes / options_.vmm.chunk_bytes;
}

void ElasticPools::insert_free_region(int64_t offset, int64_t length) {
  regions_[offset] = Region{length, false};
  free_regions_.insert({length, offset});
}

void ElasticPools::erase_free_region(int64_t offset) {
  auto it = regions_.find(offset);
  free_regions_.erase({it->second.length, offset});
  regions_.erase(it);
}

int64_t ElasticPools::gc_kv_slots(int64_t want) {
  int64_t got = 0;
  while (got < want && !available_kv_.empty()) {
    auto it = std::prev(available_kv_.end());
    const auto [size, sid] = *it;
    available_kv_.erase(it);
    const SlotId slot(sid);
    if (vmm_.slot(slot).state != SlotState::kAvailable) {
      throw InvariantViolation("GC reached a KV slot that is not Available");
    }
    const int64_t take = std::min(size, want - got);
    for (int64_t k = 0; k < take; ++k) {
      free_kv_.push_back(vmm_.defer_unmap(slot, size - 1 - k));
    }
    available_kv_mapped_ -= take;
    stats_.gc_unmaps += take;
    got += take;
    if (size - take > 0) {
      available_kv_.insert({size - take, sid});
    } else {
      vmm_.set_state(slot, SlotState::kPendingUnmap);
    }
  }
  return got;
}

int64_t ElasticPools::gc_act_regions(int64_t want, int64_t skip_lo,
                                     int64_t skip_hi) {
  int64_t got = 0;
  for (auto it = free_regions_.rbegin();
       it != free_regions_.rend() && got < want; ++it) {
    const auto [length, offset] = *it;
    std::vector<int64_t> victims;
    auto hi = act_mapped_free_.lower_bound(offset + length);
    auto lo = act_mapped_free_.lower_bound(offset);
    while (hi != lo && got + static_cast<int64_t>(victims.size()) < want) {
      --hi;
      if (*hi >= skip_lo && *hi < skip_hi) continue;
      victims.push_back(*hi);
    }
    for (int64_t off : victims) {
      if (regions_.at(offset).used) {
        throw InvariantViolation("GC reached an in-use activation region");
      }
      act_mapped_free_.erase(off);
      free_act_.push_back(vmm_.defer_unmap(arena_, off));
    }
    got += static_cast<int64_t>(victims.size());
    stats_.gc_unmaps += static_cast<int64_t>(victims.size());
  }
  return got;
}

TensorId ElasticPools::kv_acquire(int64_t chunks,
                                  std::optional<RequestId> owner) {
  if (chunks < 1) throw PoolError("KV acquisition of < 1 chunk");
  ETensor t;
  t.id = next_tensor_id();
  t.kind = PoolKind::kKv;
  t.owner_request = owner;

  auto best = available_kv_.lower_bound({chunks, -1});
  if (best != available_kv_.end()) {
    const auto [size, sid] = *best;
    available_kv_.erase(best);
    available_kv_mapped_ -= size;
    const SlotId slot(sid);
    // Surplus tail chunks go back to the free list; unmapped in background.
    for (int64_t k = size; k > chunks; --k) {
      free_kv_.push_back(vmm_.defer_unmap(slot, k - 1));
    }
    vmm_.set_state(slot, SlotState::kInUse);
    t.slot = slot;
    t.claimed = chunks;
    t.mapped = chunks;
    t.reused_slot = true;
    used_kv_mapped_ += chunks;
    ++stats_.kv_reuse_hits;
    tensors_.emplace(t.id, t);
    return t.id;
  }

  if (unclaimed_free_kv() < chunks) gc_kv_slots(chunks - unclaimed_free_kv());
  if (unclaimed_free_kv() < chunks && options_.elastic) {
    inflate(chunks - unclaimed_free_kv());
  }
  if (unclaimed_free_kv() < chunks) {
    throw AdmissionFailure("KV acquisition of " + std::to_string(chunks) +
                           " chunks exceeds " +
                           std::to_string(unclaimed_free_kv()) + " free");
  }
  t.slot = vmm_.reserve_span(std::max(options_.kv_span_chunks, chunks),
                             PoolKind::kKv);
  vmm_.set_state(t.slot, SlotState::kInUse);
  t.claimed = chunks;
  kv_reserved_ += chunks;
  ++stats_.kv_fresh_spans;
  tensors_.emplace(t.id, t);
  return t.id;
}

void ElasticPools::kv_write(TensorId id, int64_t chunks_needed) {
  auto it = tensors_.find(id);
  if (it == tensors_.end() || it->second.kind != PoolKind::kKv) {
    throw PoolError("kv_write on unknown KV tensor " +
                    std::to_string(id.value));
  }
  ETensor& t = it->second;
  if (chunks_needed > vmm_.slot(t.slot).length_chunks) {
    throw PoolError("KV write past the end of its span");
  }
  if (chunks_needed > t.claimed) {
    const int64_t extra = chunks_needed - t.claimed;
    if (unclaimed_free_kv() < extra) gc_kv_slots(extra - unclaimed_free_kv());
    if (unclaimed_free_kv() < extra && options_.elastic) {
      inflate(extra - unclaimed_free_kv());
    }
    if (unclaimed_free_kv() < extra) {
      throw AdmissionFailure("KV growth of " + std::to_string(extra) +
                             " chunks has no free chunk");
    }
    kv_reserved_ += extra;
    t.claimed = chunks_needed;
  }
  while (t.mapped < chunks_needed) {
    const ChunkId c = free_kv_.back();
    free_kv_.pop_back();
    --kv_reserved_;
    vmm_.map_chunk(t.slot, t.mapped, c, Charge::kOnPath);
    ++t.mapped;
    ++used_kv_mapped_;
  }
  t.written_chunks = std::max(t.written_chunks, chunks_needed);
}

TensorId ElasticPools::act_acquire(int64_t bytes) {
  if (bytes < 1) throw PoolError("activation acquisition of < 1 byte");
  const int64_t n = chunks_for_bytes(bytes, options_.vmm.chunk_bytes);
  auto fit = free_regions_.lower_bound(
      {n, std::numeric_limits<int64_t>::min()});
  if (fit == free_regions_.end()) {
    throw AdmissionFailure("no activation region of " + std::to_string(n) +
                           " chunks");
  }
  const auto [length, offset] = *fit;
  const auto lo = act_mapped_free_.lower_bound(offset);
  const auto hi = act_mapped_free_.lower_bound(offset + n);
  const int64_t already = std::distance(lo, hi);
  const int64_t holes = n - already;
  auto free_act = [&] { return static_cast<int64_t>(free_act_.size()); };
  if (free_act() < holes) gc_act_regions(holes - free_act(), offset, offset + n);
  if (free_act() < holes && options_.elastic) deflate(holes - free_act());
  if (free_act() < holes) {
    throw AdmissionFailure("activation acquisition of " + std::to_string(n) +
                           " chunks exceeds the activation pool");
  }

  erase_free_region(offset);
  regions_[offset] = Region{n, true};
  if (length > n) insert_free_region(offset + n, length - n);
  act_mapped_free_.erase(act_mapped_free_.lower_bound(offset),
                         act_mapped_free_.lower_bound(offset + n));
  for (int64_t off = offset; off < offset + n; ++off) {
    if (is_live_entry(vmm_.slot(arena_), off)) continue;
    const ChunkId c = free_act_.back();
    free_act_.pop_back();
    vmm_.map_chunk(arena_, off, c, Charge::kOnPath);
  }
  act_used_mapped_ += n;

  ETensor t;
  t.id = next_tensor_id();
  t.kind = PoolKind::kAct;
  t.slot = arena_;
  t.region_offset = offset;
  t.mapped = n;
  t.claimed = n;
  t.written_chunks = n;
  tensors_.emplace(t.id, t);
  return t.id;
}

void ElasticPools::release(TensorId id) {
  auto it = tensors_.find(id);
  if (it == tensors_.end()) {
    throw PoolError("double release of tensor " + std::to_string(id.value));
  }
  const ETensor t = it->second;
  tensors_.erase(it);

  if (t.kind == PoolKind::kKv) {
    kv_reserved_ -= t.claimed - t.mapped;
    used_kv_mapped_ -= t.mapped;
    if (t.mapped > 0) {
      vmm_.set_state(t.slot, SlotState::kAvailable);
      available_kv_.insert({t.mapped, t.slot.value});
      available_kv_mapped_ += t.mapped;
    } else if (vmm_.slot(t.slot).pending == 0) {
      vmm_.retire_slot(t.slot);
    } else {
      vmm_.set_state(t.slot, SlotState::kPendingUnmap);
    }
    return;
  }

  int64_t start = t.region_offset;
  int64_t length = t.mapped;
  regions_.erase(start);
  auto next = regions_.find(start + length);
  if (next != regions_.end() && !next->second.used) {
    length += next->second.length;
    erase_free_region(next->first);
  }
  auto after = regions_.lower_bound(start);
  if (after != regions_.begin()) {
    auto prev = std::prev(after);
    if (!prev->second.used && prev->first + prev->second.length == start) {
      start = prev->first;
      length += prev->second.length;
      erase_free_region(prev->first);
    }
  }
  insert_free_region(start, length);
  for (int64_t off = t.region_offset; off < t.region_offset + t.mapped;
       ++off) {
    act_mapped_free_.insert(off);
  }
  act_used_mapped_ -= t.mapped;
}

int64_t ElasticPools::inflate(int64_t amount) {
  if (amount <= 0) return 0;
  int64_t moved = 0;
  auto flip = [&] {
    while (moved < amount && !free_act_.empty()) {
      const ChunkId c = free_act_.back();
      free_act_.pop_back();
      vmm_.set_owner(c, PoolKind::kKv);
      free_kv_.push_back(c);
      ++moved;
    }
  };
  flip();
  if (moved < amount) {
    gc_act_regions(amount - moved, 0, 0);
    flip();
  }
  ++stats_.inflate_events;
  stats_.inflated_chunks += moved;
  return moved;
}

int64_t ElasticPools::deflate(int64_t amount) {
  if (amount <= 0) return 0;
  int64_t moved = 0;
  auto flip = [&] {
    while (moved < amount && unclaimed_free_kv() > 0) {
      const ChunkId c = free_kv_.back();
      free_kv_.pop_back();
      vmm_.set_owner(c, PoolKind::kAct);
      free_act_.push_back(c);
      ++moved;
    }
  };
  flip();
  if (moved < amount) {
    gc_kv_slots(amount - moved);
    flip();
  }
  ++stats_.deflate_events;
  stats_.deflated_chunks += moved;
  return moved;
}

int64_t ElasticPools::speculative_premap(
    std::span<const PremapCandidate> candidates) {
  const int64_t budget = premap_budget_chunks();
  int64_t done = 0;
  for (const PremapCandidate& cand : candidates) {
    if (done >= budget) break;
    auto it = tensors_.find(cand.tensor);
    if (it == tensors_.end() || it->second.kind != PoolKind::kKv) continue;
    ETensor& t = it->second;
    if (t.mapped >= cand.chunks_needed) continue;
    if (t.mapped >= vmm_.slot(t.slot).length_chunks) continue;
    if (t.mapped >= t.claimed) {
      if (unclaimed_free_kv() < 1) continue;
      ++kv_reserved_;
      ++t.claimed;
    }
    const ChunkId c = free_kv_.back();
    free_kv_.pop_back();
    --kv_reserved_;
    vmm_.map_chunk(t.slot, t.mapped, c, Charge::kBackground);
    ++t.mapped;
    ++used_kv_mapped_;
    ++done;
  }
  stats_.premapped_chunks += done;
  return done;
}

int64_t ElasticPools::drain_deferred(int64_t budget) {
  return vmm_.drain_deferred(budget);
}

PoolCounters ElasticPools::counters() const {
  PoolCounters c;
  c.total = options_.total_chunks;
  c.free_kv = unclaimed_free_kv() + available_kv_mapped_;
  c.free_act = static_cast<int64_t>(free_act_.size()) +
               static_cast<int64_t>(act_mapped_free_.size());
  c.used_kv = kv_reserved_ + used_kv_mapped_;
  c.used_act = act_used_mapped_;
  return c;
}

std::vector<std::string> ElasticPools::audit() const {
  std::vector<std::string> errs = vmm_.audit();
  const int64_t total = options_.total_chunks;
  std::vector<int> seen(static_cast<size_t>(total), 0);
  auto chunk_name = [](ChunkId c) {
    return "chunk " + std::to_string(c.value);
  };
  auto live_refs = [&](const PhysicalChunk& pc) {
    int64_t live = 0;
    for (const SlotRef& ref : pc.mapped_into) {
      if (is_live_entry(vmm_.slot(ref.slot), ref.offset)) ++live;
    }
    return live;
  };
  for (const auto* list : {&free_kv_, &free_act_}) {
    const PoolKind kind =
        list == &free_kv_ ? PoolKind::kKv : PoolKind::kAct;
    for (ChunkId c : *list) {
      ++seen[c.value];
      const PhysicalChunk& pc = vmm_.chunk(c);
      if (pc.owner != kind) errs.push_back(chunk_name(c) + " on wrong free list");
      if (live_refs(pc) != 0) errs.push_back(chunk_name(c) + " free but mapped");
    }
  }
  int64_t live_kv = 0, live_act = 0;
  for (int64_t i = 0; i < total; ++i) {
    const PhysicalChunk& pc = vmm_.chunk(ChunkId(i));
    const int64_t live = live_refs(pc);
    if (live > 0) {
      ++seen[i];
      (pc.owner == PoolKind::kKv ? live_kv : live_act) += 1;
    }
    if (seen[i] != 1) {
      errs.push_back(chunk_name(ChunkId(i)) + " accounted " +
                     std::to_string(seen[i]) + " times");
    }
  }
  if (live_kv != used_kv_mapped_ + available_kv_mapped_) {
    errs.push_back("live KV chunks disagree with slot counters");
  }
  if (live_act != act_used_mapped_ +
                      static_cast<int64_t>(act_mapped_free_.size())) {
    errs.push_back("live activation chunks disagree with region counters");
  }
  int64_t outstanding = 0;
  for (const auto& [id, t] : tensors_) {
    if (t.kind != PoolKind::kKv) continue;
    outstanding += t.claimed - t.mapped;
    if (vmm_.slot(t.slot).state != SlotState::kInUse) {
      errs.push_back("live tensor slot not InUse");
    }
    if (vmm_.slot(t.slot).live != t.mapped) {
      errs.push_back("tensor mapped count drifted");
    }
  }
  if (outstanding != kv_reserved_) errs.push_back("KV reservation drifted");
  if (kv_reserved_ > static_cast<int64_t>(free_kv_.size())) {
    errs.push_back("KV reservations exceed free KV chunks");
  }
  for (const auto& [size, sid] : available_kv_) {
    const TensorSlot& s = vmm_.slot(SlotId(sid));
    if (s.state != SlotState::kAvailable || s.live != size) {
      errs.push_back("available KV slot record drifted");
    }
  }
  const PoolCounters c = counters();
  if (c.free_kv + c.free_act + c.used_kv + c.used_act != c.total) {
    errs.push_back("ownership partition does not sum to the physical chunk count");
  }
  return errs;
}

}  // namespace elasim
