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

#ifndef ELASIM_TESTS_ORACLES_H_
#define ELASIM_TESTS_ORACLES_H_

// Independent reference implementations used by the unit and acceptance
// tests. Written separately from the library on purpose; none of them call
// into it beyond plain data types.

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace elasim::oracle {

// One request as the admission pseudocode sees it.
struct Item {
  int64_t act = 0;
  int64_t kv = 0;
  bool swapped = false;
};

struct Outcome {
  std::vector<int> batch;      // indices into the queue
  std::vector<int> offloaded;  // prefill only
  std::vector<int> fetched;    // decode only
  int64_t inflation = 0;
};

// Straight transcription of the admission loop and the ballooning block,
// one pseudocode line per statement.
inline Outcome admission(bool prefill_phase, int64_t p_kv, int64_t p_act,
                         int64_t p_t, const std::vector<Item>& q,
                         int64_t theta, int64_t p_b) {
  Outcome o;
  int64_t i_amt = 0, m_kv = 0, m_act = 0;
  if (prefill_phase) {
    for (int idx = 0; idx < static_cast<int>(q.size()); ++idx) {
      const int64_t act_r = q[idx].act;
      const int64_t kv_r = q[idx].kv;
      if (p_t - (m_kv + m_act + kv_r + act_r) >= theta) {
        o.batch.push_back(idx);
        m_kv = m_kv + kv_r;
        m_act = m_act + act_r;
      } else if (p_t - (m_kv + m_act + act_r) >= theta && kv_r <= p_b) {
        o.batch.push_back(idx);
        m_act = m_act + act_r;
        p_b = p_b - kv_r;
        o.offloaded.push_back(idx);
      } else {
        break;
      }
    }
  } else {
    for (int idx = 0; idx < static_cast<int>(q.size()); ++idx) {
      const int64_t act_r = q[idx].act;
      const int64_t kv_r = q[idx].kv;
      if (p_t - (m_kv + m_act + kv_r + act_r) >= theta) {
        o.batch.push_back(idx);
        if (q[idx].swapped) o.fetched.push_back(idx);
        m_kv = m_kv + kv_r;
        m_act = m_act + act_r;
      } else {
        break;
      }
    }
  }
  if (p_kv < m_kv && p_act > m_act) {
    i_amt = m_kv - p_kv;
  } else if (p_act < m_act && p_kv > m_kv) {
    i_amt = p_act - m_act;
  }
  o.inflation = i_amt;
  return o;
}

// Brute-force argmin over (size, position) of sizes >= s; nullopt if none.
inline std::optional<size_t> best_fit(const std::vector<int64_t>& sizes,
                                      int64_t s) {
  std::optional<size_t> best;
  for (size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < s) continue;
    if (!best || sizes[i] < sizes[*best]) best = i;
  }
  return best;
}

// Logical-buffer resize rule, written from the pseudocode.
inline int64_t buffer_step(int64_t b, int64_t b_max, int64_t alpha,
                           bool e_ttft, bool e_tpot) {
  if (e_tpot) {
    int64_t shrunk = b / alpha;
    return shrunk < 1 ? 1 : shrunk;
  }
  if (e_ttft) {
    int64_t grown = b * alpha;
    return grown > b_max ? b_max : grown;
  }
  return b;
}

inline int64_t uniform(std::mt19937_64& rng, int64_t lo, int64_t hi) {
  return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
}

}  // namespace elasim::oracle

#endif  // ELASIM_TESTS_ORACLES_H_
