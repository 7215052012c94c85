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

#include "elasim/cpu_buffer.h"

#include <algorithm>
#include <string>

namespace elasim {

LogicalBuffer::LogicalBuffer(int64_t capacity_chunks, int64_t chunk_bytes,
                             int64_t alpha, int64_t initial_logical)
    : capacity_(capacity_chunks),
      chunk_bytes_(chunk_bytes),
      alpha_(alpha),
      logical_(initial_logical) {
  if (capacity_ < 1) throw BufferError("buffer capacity must be >= 1 chunk");
  if (chunk_bytes_ < 1) throw BufferError("chunk_bytes must be >= 1");
  if (alpha_ < 2) throw BufferError("alpha must be >= 2");
  if (logical_ < 1 || logical_ > capacity_) {
    throw BufferError("initial logical size outside [1, capacity]");
  }
}

int64_t LogicalBuffer::logical_space() const {
  return std::max<int64_t>(0, logical_ - used_);
}

int64_t LogicalBuffer::stored_chunks(RequestId request) const {
  auto it = stored_.find(request);
  return it == stored_.end() ? 0 : it->second;
}

void LogicalBuffer::offload(RequestId request, int64_t kv_chunks) {
  if (kv_chunks < 0) throw BufferError("negative offload");
  if (holds(request)) {
    throw BufferError("request " + std::to_string(request.value) +
                      " already offloaded");
  }
  if (kv_chunks > logical_space()) {
    throw BufferError("offload of " + std::to_string(kv_chunks) +
                      " chunks exceeds logical space " +
                      std::to_string(logical_space()));
  }
  stored_.emplace(request, kv_chunks);
  used_ += kv_chunks;
}

int64_t LogicalBuffer::fetch(RequestId request, bool device_space_reserved) {
  auto it = stored_.find(request);
  if (it == stored_.end()) {
    throw BufferError("fetch of request " + std::to_string(request.value) +
                      " which is not on the host");
  }
  if (!device_space_reserved) {
    throw BufferError("fetch without a device KV reservation");
  }
  const int64_t chunks = it->second;
  used_ -= chunks;
  stored_.erase(it);
  return chunks * chunk_bytes_;
}

void LogicalBuffer::drop(RequestId request) {
  auto it = stored_.find(request);
  if (it == stored_.end()) return;
  used_ -= it->second;
  stored_.erase(it);
}

int64_t LogicalBuffer::scale(bool ttft_violation, bool tpot_violation) {
  if (tpot_violation) {
    logical_ = std::max<int64_t>(logical_ / alpha_, 1);
  } else if (ttft_violation) {
    // Saturating multiply; capacity bounds the result anyway.
    logical_ = logical_ > capacity_ / alpha_ ? capacity_
                                             : std::min(logical_ * alpha_,
                                                        capacity_);
  }
  return logical_;
}

void LogicalBuffer::set_logical_size(int64_t size) {
  if (size < 1 || size > capacity_) {
    throw BufferError("logical size outside [1, capacity]");
  }
  logical_ = size;
}

ViolationDetector::ViolationDetector(double slo_ttft, double slo_tpot,
                                     int window, int threshold)
    : slo_ttft_(slo_ttft),
      slo_tpot_(slo_tpot),
      window_(window),
      threshold_(threshold) {
  if (threshold_ < 1 || window_ < threshold_) {
    throw BufferError("detector needs window >= threshold >= 1");
  }
}

bool ViolationDetector::push(std::deque<bool>& history, bool breached) {
  history.push_back(breached);
  while (static_cast<int>(history.size()) > window_) history.pop_front();
  const auto hits = std::count(history.begin(), history.end(), true);
  if (hits >= threshold_) {
    history.clear();
    return true;
  }
  return false;
}

ViolationEvents ViolationDetector::record_iteration(
    std::span<const double> ttft_samples,
    std::span<const double> tpot_samples) {
  auto over = [](std::span<const double> xs, double slo) {
    return std::any_of(xs.begin(), xs.end(),
                       [slo](double x) { return x > slo; });
  };
  ViolationEvents e;
  e.ttft = push(ttft_history_, over(ttft_samples, slo_ttft_));
  e.tpot = push(tpot_history_, over(tpot_samples, slo_tpot_));
  return e;
}

}  // namespace elasim
