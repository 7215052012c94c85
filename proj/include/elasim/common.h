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

#ifndef ELASIM_COMMON_H_
#define ELASIM_COMMON_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace elasim {

// Typed integer identifier. Tag keeps chunk, slot and request ids apart.
template <typename Tag>
struct Id {
  int64_t value = -1;

  constexpr Id() = default;
  constexpr explicit Id(int64_t v) : value(v) {}
  constexpr bool valid() const { return value >= 0; }
  friend constexpr auto operator<=>(const Id&, const Id&) = default;
};

using ChunkId = Id<struct ChunkTag>;
using SlotId = Id<struct SlotTag>;
using RequestId = Id<struct RequestTag>;

// Pool ownership label carried by every physical chunk.
enum class PoolKind : uint8_t { kKv, kAct };

std::string_view to_string(PoolKind kind);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Virtual-memory layer precondition failures.
class VmmError : public Error {
 public:
  using Error::Error;
};

// Pool misuse (double release, bad handle).
class PoolError : public Error {
 public:
  using Error::Error;
};

// Not enough physical chunks for an acquisition even after borrowing.
class AdmissionFailure : public Error {
 public:
  using Error::Error;
};

class BufferError : public Error {
 public:
  using Error::Error;
};

// The configured model/workload cannot run on the configured device.
class InfeasibleConfig : public Error {
 public:
  using Error::Error;
};

// An engine invariant broke mid-run.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace elasim

template <typename Tag>
struct std::hash<elasim::Id<Tag>> {
  size_t operator()(const elasim::Id<Tag>& id) const noexcept {
    return std::hash<int64_t>{}(id.value);
  }
};

#endif  // ELASIM_COMMON_H_
