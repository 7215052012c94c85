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

#include "elasim/vmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace elasim {

namespace {

int64_t to_ns(double seconds) { return std::llround(seconds * 1e9); }

std::string slot_name(SlotId id) { return "slot " + std::to_string(id.value); }

}  // namespace

AddressSpace::AddressSpace(int64_t n_chunks, PoolKind initial_owner,
                           VmmOptions options)
    : options_(options) {
  if (n_chunks < 0) throw VmmError("negative chunk count");
  if (options_.chunk_bytes <= 0) throw VmmError("chunk_bytes must be > 0");
  chunks_.resize(static_cast<size_t>(n_chunks));
  for (int64_t i = 0; i < n_chunks; ++i) {
    chunks_[i].id = ChunkId(i);
    chunks_[i].owner = initial_owner;
  }
  acct_.map_cost_ns = to_ns(options_.map_cost);
  acct_.unmap_cost_ns = to_ns(options_.unmap_cost);
}

const PhysicalChunk& AddressSpace::chunk(ChunkId id) const {
  if (id.value < 0 || id.value >= num_chunks()) {
    throw VmmError("unknown chunk " + std::to_string(id.value));
  }
  return chunks_[id.value];
}

PhysicalChunk& AddressSpace::chunk_mut(ChunkId id) {
  return const_cast<PhysicalChunk&>(std::as_const(*this).chunk(id));
}

bool AddressSpace::has_slot(SlotId id) const {
  return id.value >= 0 && id.value < static_cast<int64_t>(slots_.size()) &&
         slots_[id.value].has_value();
}

const TensorSlot& AddressSpace::slot(SlotId id) const {
  if (!has_slot(id)) throw VmmError("unknown " + slot_name(id));
  return *slots_[id.value];
}

TensorSlot& AddressSpace::slot_mut(SlotId id) {
  return const_cast<TensorSlot&>(std::as_const(*this).slot(id));
}

void AddressSpace::set_owner(ChunkId id, PoolKind owner) {
  PhysicalChunk& c = chunk_mut(id);
  for (const SlotRef& ref : c.mapped_into) {
    if (!slot(ref.slot).mapping[ref.offset].pending) {
      throw VmmError("chunk " + std::to_string(id.value) +
                     " changes owner while mapped into " +
                     slot_name(ref.slot));
    }
  }
  c.owner = owner;
}

SlotId AddressSpace::reserve_span(int64_t length_chunks, PoolKind kind) {
  if (length_chunks < 1) throw VmmError("span length must be >= 1 chunk");
  const int64_t bytes = length_chunks * options_.chunk_bytes;
  if (options_.virtual_ceiling &&
      next_free_base_ + bytes > *options_.virtual_ceiling) {
    throw VmmError("virtual address space exhausted");
  }
  TensorSlot s;
  s.id = SlotId(static_cast<int64_t>(slots_.size()));
  s.base = next_free_base_;
  s.length_chunks = length_chunks;
  s.kind = kind;
  next_free_base_ += bytes;
  slots_.emplace_back(std::move(s));
  return slots_.back()->id;
}

void AddressSpace::set_state(SlotId id, SlotState state) {
  slot_mut(id).state = state;
}

void AddressSpace::charge_map(Charge charge) {
  if (charge == Charge::kOnPath) {
    ++acct_.maps_on_path;
  } else {
    ++acct_.maps_background;
  }
}

void AddressSpace::charge_unmap(Charge charge) {
  if (charge == Charge::kOnPath) {
    ++acct_.unmaps_on_path;
  } else {
    ++acct_.unmaps_background;
  }
}

void AddressSpace::trim_tail(TensorSlot& s) {
  while (!s.mapping.empty() && !s.mapping.back().chunk.valid()) {
    s.mapping.pop_back();
  }
}

void AddressSpace::unmap_pending(TensorSlot& s, int64_t offset,
                                 Charge charge) {
  MappingEntry& e = s.mapping[offset];
  PhysicalChunk& c = chunk_mut(e.chunk);
  std::erase(c.mapped_into, SlotRef{s.id, offset});
  e = MappingEntry{};
  --s.pending;
  --pending_total_;
  trim_tail(s);
  charge_unmap(charge);
}

void AddressSpace::unmap_entry(TensorSlot& s, int64_t offset, Charge charge) {
  MappingEntry& e = s.mapping[offset];
  PhysicalChunk& c = chunk_mut(e.chunk);
  std::erase(c.mapped_into, SlotRef{s.id, offset});
  e = MappingEntry{};
  --s.live;
  trim_tail(s);
  charge_unmap(charge);
}

void AddressSpace::flush_one_pending(PhysicalChunk& c, Charge charge) {
  for (const SlotRef ref : c.mapped_into) {
    TensorSlot& s = slot_mut(ref.slot);
    if (s.mapping[ref.offset].pending) {
      unmap_pending(s, ref.offset, charge);
      if (s.state == SlotState::kPendingUnmap && s.live == 0 &&
          s.pending == 0) {
        retire_slot(s.id);
      }
      return;
    }
  }
}

void AddressSpace::map_chunk(SlotId slot_id, int64_t offset, ChunkId chunk_id,
                             Charge charge) {
  TensorSlot& s = slot_mut(slot_id);
  if (s.state == SlotState::kPendingUnmap) {
    throw VmmError("map into " + slot_name(slot_id) + " pending unmap");
  }
  if (offset < 0 || offset >= s.length_chunks) {
    throw VmmError("offset " + std::to_string(offset) + " out of range for " +
                   slot_name(slot_id));
  }
  PhysicalChunk& c = chunk_mut(chunk_id);
  if (c.owner != s.kind) {
    throw VmmError("chunk " + std::to_string(chunk_id.value) + " owned by " +
                   std::string(to_string(c.owner)) + " mapped into " +
                   std::string(to_string(s.kind)) + " " + slot_name(slot_id));
  }
  for (const SlotRef& ref : c.mapped_into) {
    if (!slot(ref.slot).mapping[ref.offset].pending) {
      throw VmmError("chunk " + std::to_string(chunk_id.value) +
                     " is already mapped into " + slot_name(ref.slot));
    }
  }
  if (s.kind == PoolKind::kKv && offset != s.live) {
    throw VmmError("non-contiguous KV write at offset " +
                   std::to_string(offset) + " (next is " +
                   std::to_string(s.live) + ")");
  }
  if (offset < static_cast<int64_t>(s.mapping.size())) {
    const MappingEntry& e = s.mapping[offset];
    if (e.chunk.valid() && !e.pending) {
      throw VmmError("offset " + std::to_string(offset) + " of " +
                     slot_name(slot_id) + " already mapped");
    }
    if (e.pending) unmap_pending(s, offset, Charge::kOnPath);
  }
  while (c.mapped_into.size() >= 2) flush_one_pending(c, Charge::kOnPath);

  if (offset >= static_cast<int64_t>(s.mapping.size())) {
    s.mapping.resize(offset + 1);
  }
  s.mapping[offset] = MappingEntry{chunk_id, false};
  c.mapped_into.push_back(SlotRef{slot_id, offset});
  ++s.live;
  charge_map(charge);
}

ChunkId AddressSpace::defer_unmap(SlotId slot_id, int64_t offset) {
  TensorSlot& s = slot_mut(slot_id);
  if (offset < 0 || offset >= static_cast<int64_t>(s.mapping.size()) ||
      !s.mapping[offset].chunk.valid() || s.mapping[offset].pending) {
    throw VmmError("offset " + std::to_string(offset) + " of " +
                   slot_name(slot_id) + " is not live");
  }
  if (s.kind == PoolKind::kKv && offset != s.live - 1) {
    throw VmmError("KV unmap must take the live tail (offset " +
                   std::to_string(s.live - 1) + "), got " +
                   std::to_string(offset));
  }
  MappingEntry& e = s.mapping[offset];
  e.pending = true;
  --s.live;
  ++s.pending;
  ++pending_total_;
  deferred_.push_back(DeferredUnmap{slot_id, offset, e.chunk});
  return e.chunk;
}

int64_t AddressSpace::first_free_offset(const TensorSlot& s,
                                        int64_t from) const {
  for (int64_t off = from; off < s.length_chunks; ++off) {
    if (off >= static_cast<int64_t>(s.mapping.size())) return off;
    const MappingEntry& e = s.mapping[off];
    if (!e.chunk.valid() || e.pending) return off;
  }
  return s.length_chunks;
}

void AddressSpace::remap_overlapped(SlotId from, SlotId to,
                                    std::span<const int64_t> offsets,
                                    Charge charge) {
  if (offsets.empty()) return;
  if (from == to) throw VmmError("remap source and target are the same slot");
  const TensorSlot& src = slot(from);
  const TensorSlot& dst = slot(to);
  if (dst.state == SlotState::kPendingUnmap) {
    throw VmmError("remap into " + slot_name(to) + " pending unmap");
  }
  std::vector<int64_t> order(offsets.begin(), offsets.end());
  for (int64_t off : order) {
    if (off < 0 || off >= static_cast<int64_t>(src.mapping.size()) ||
        !src.mapping[off].chunk.valid() || src.mapping[off].pending) {
      throw VmmError("remap offset " + std::to_string(off) + " not live in " +
                     slot_name(from));
    }
  }
  if (static_cast<int64_t>(order.size()) > dst.length_chunks - dst.live) {
    throw VmmError("remap of " + std::to_string(order.size()) +
                   " chunks exceeds capacity of " + slot_name(to));
  }
  if (src.kind == PoolKind::kKv) {
    std::sort(order.rbegin(), order.rend());
    for (size_t i = 0; i < order.size(); ++i) {
      if (order[i] != src.live - 1 - static_cast<int64_t>(i)) {
        throw VmmError("KV remap must take a live tail of " +
                       slot_name(from));
      }
    }
  }
  const PoolKind target_kind = dst.kind;
  int64_t cursor = 0;
  for (int64_t off : order) {
    const ChunkId c = defer_unmap(from, off);
    set_owner(c, target_kind);
    const TensorSlot& t = slot(to);
    const int64_t pos =
        t.kind == PoolKind::kKv ? t.live : first_free_offset(t, cursor);
    map_chunk(to, pos, c, charge);
    cursor = pos + 1;
  }
}

int64_t AddressSpace::drain_deferred(int64_t budget) {
  int64_t drained = 0;
  while (drained < budget && !deferred_.empty()) {
    const DeferredUnmap d = deferred_.front();
    deferred_.pop_front();
    if (!has_slot(d.slot)) continue;
    TensorSlot& s = slot_mut(d.slot);
    if (d.offset >= static_cast<int64_t>(s.mapping.size())) continue;
    const MappingEntry& e = s.mapping[d.offset];
    if (!e.pending || e.chunk != d.chunk) continue;  // flushed earlier
    unmap_pending(s, d.offset, Charge::kBackground);
    ++drained;
    if (s.state == SlotState::kPendingUnmap && s.live == 0 &&
        s.pending == 0) {
      retire_slot(s.id);
    }
  }
  if (pending_total_ == 0) deferred_.clear();
  return drained;
}

std::vector<ChunkId> AddressSpace::unmap_slot(SlotId slot_id) {
  TensorSlot& s = slot_mut(slot_id);
  if (s.state == SlotState::kInUse) {
    throw VmmError("cannot unmap " + slot_name(slot_id) + ": in use");
  }
  std::vector<ChunkId> freed;
  for (int64_t off = static_cast<int64_t>(s.mapping.size()) - 1; off >= 0;
       --off) {
    if (off >= static_cast<int64_t>(s.mapping.size())) continue;
    const MappingEntry e = s.mapping[off];
    if (!e.chunk.valid()) continue;
    if (e.pending) {
      unmap_pending(s, off, Charge::kOnPath);
    } else {
      freed.push_back(e.chunk);
      unmap_entry(s, off, Charge::kOnPath);
    }
  }
  std::reverse(freed.begin(), freed.end());
  s.state = SlotState::kAvailable;
  return freed;
}

void AddressSpace::retire_slot(SlotId slot_id) {
  const TensorSlot& s = slot(slot_id);
  if (s.live != 0 || s.pending != 0) {
    throw VmmError("cannot retire non-empty " + slot_name(slot_id));
  }
  slots_[slot_id.value].reset();
}

std::vector<std::string> AddressSpace::audit() const {
  std::vector<std::string> errs;
  int64_t pending_seen = 0;
  int64_t prev_end = std::numeric_limits<int64_t>::min();
  for (const auto& maybe : slots_) {
    if (!maybe) continue;
    const TensorSlot& s = *maybe;
    if (s.base % options_.chunk_bytes != 0) {
      errs.push_back(slot_name(s.id) + " base not chunk aligned");
    }
    if (s.base < prev_end) errs.push_back(slot_name(s.id) + " overlaps");
    prev_end = s.base + s.length_chunks * options_.chunk_bytes;
    int64_t live = 0, pending = 0;
    for (int64_t off = 0; off < static_cast<int64_t>(s.mapping.size());
         ++off) {
      const MappingEntry& e = s.mapping[off];
      if (!e.chunk.valid()) continue;
      const PhysicalChunk& c = chunks_[e.chunk.value];
      if (std::find(c.mapped_into.begin(), c.mapped_into.end(),
                    SlotRef{s.id, off}) == c.mapped_into.end()) {
        errs.push_back(slot_name(s.id) + " entry missing from chunk table");
      }
      if (e.pending) {
        ++pending;
      } else {
        ++live;
        if (c.owner != s.kind) {
          errs.push_back("chunk " + std::to_string(c.id.value) +
                         " live in a slot of another pool");
        }
        if (s.kind == PoolKind::kKv && off >= s.live) {
          errs.push_back(slot_name(s.id) + " KV mapping not prefix-contiguous");
        }
      }
    }
    if (live != s.live || pending != s.pending) {
      errs.push_back(slot_name(s.id) + " live/pending counters drifted");
    }
    pending_seen += pending;
  }
  if (pending_seen != pending_total_) {
    errs.push_back("deferred-unmap counter drifted");
  }
  for (const PhysicalChunk& c : chunks_) {
    if (c.mapped_into.size() > 2) {
      errs.push_back("chunk " + std::to_string(c.id.value) +
                     " mapped more than twice");
    }
    int64_t live = 0;
    for (const SlotRef& ref : c.mapped_into) {
      if (!has_slot(ref.slot)) {
        errs.push_back("chunk " + std::to_string(c.id.value) +
                       " references a retired slot");
        continue;
      }
      const TensorSlot& s = *slots_[ref.slot.value];
      if (ref.offset >= static_cast<int64_t>(s.mapping.size()) ||
          s.mapping[ref.offset].chunk != c.id) {
        errs.push_back("chunk " + std::to_string(c.id.value) +
                       " table entry dangling");
        continue;
      }
      if (!s.mapping[ref.offset].pending) ++live;
    }
    if (live > 1) {
      errs.push_back("chunk " + std::to_string(c.id.value) +
                     " live in more than one slot");
    }
  }
  return errs;
}

}  // namespace elasim
