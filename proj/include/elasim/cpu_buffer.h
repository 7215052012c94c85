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

#ifndef ELASIM_CPU_BUFFER_H_
#define ELASIM_CPU_BUFFER_H_

// Host-memory KV buffer. The physical capacity is fixed; only a logical
// prefix of it is offered to the scheduler, and that prefix is resized by
// SLO violation events. Shrinking never drops stored KV.

#include <cstdint>
#include <deque>
#include <map>
#include <span>

#include "elasim/common.h"

namespace elasim {

class LogicalBuffer {
 public:
  LogicalBuffer(int64_t capacity_chunks, int64_t chunk_bytes,
                int64_t alpha = 2, int64_t initial_logical = 1);

  int64_t capacity() const { return capacity_; }
  int64_t logical_size() const { return logical_; }
  int64_t used() const { return used_; }
  int64_t alpha() const { return alpha_; }
  // Space the scheduler may still debit. Zero while usage sits above a
  // shrunken logical size.
  int64_t logical_space() const;

  // Stores `kv_chunks` of the request's KV on the host.
  void offload(RequestId request, int64_t kv_chunks);
  // Moves the request's KV back to the device. The caller must already hold
  // the device KV chunks. Returns the bytes to transfer.
  int64_t fetch(RequestId request, bool device_space_reserved);

  // Frees a finished request's host copy without a transfer.
  void drop(RequestId request);

  bool holds(RequestId request) const { return stored_.count(request) != 0; }
  int64_t stored_chunks(RequestId request) const;

  // One step of the scaling rule. TPOT pressure wins over TTFT pressure.
  int64_t scale(bool ttft_violation, bool tpot_violation);
  void set_logical_size(int64_t size);

 private:
  int64_t capacity_;
  int64_t chunk_bytes_;
  int64_t alpha_;
  int64_t logical_;
  int64_t used_ = 0;
  std::map<RequestId, int64_t> stored_;
};

struct ViolationEvents {
  bool ttft = false;
  bool tpot = false;
};

// Fires a metric's event once `threshold` of the last `window` iterations saw
// at least one sample above that metric's SLO. The metric's history is
// cleared after it fires.
class ViolationDetector {
 public:
  ViolationDetector(double slo_ttft, double slo_tpot, int window = 5,
                    int threshold = 3);

  ViolationEvents record_iteration(std::span<const double> ttft_samples,
                                   std::span<const double> tpot_samples);

  double slo_ttft() const { return slo_ttft_; }
  double slo_tpot() const { return slo_tpot_; }
  int window() const { return window_; }
  int threshold() const { return threshold_; }

 private:
  bool push(std::deque<bool>& history, bool breached);

  double slo_ttft_;
  double slo_tpot_;
  int window_;
  int threshold_;
  std::deque<bool> ttft_history_;
  std::deque<bool> tpot_history_;
};

}  // namespace elasim

#endif  // ELASIM_CPU_BUFFER_H_
