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

#include "elasim/footprint.h"

#include <algorithm>

#include "elasim/common.h"

namespace elasim {

std::string_view to_string(PoolKind kind) {
  return kind == PoolKind::kKv ? "kv" : "act";
}

std::vector<std::string> validate(const ModelSpec& m) {
  std::vector<std::string> errs;
  auto positive = [&](int64_t v, const char* field) {
    if (v <= 0) errs.push_back(std::string("model.") + field + " must be > 0");
  };
  positive(m.n_layers, "n_layers");
  positive(m.hidden, "hidden");
  positive(m.n_heads, "n_heads");
  positive(m.n_kv_heads, "n_kv_heads");
  positive(m.head_dim, "head_dim");
  positive(m.n_params, "n_params");
  positive(m.dtype_bytes, "dtype_bytes");
  positive(m.max_context, "max_context");
  if (!(m.act_coeff > 0)) errs.push_back("model.act_coeff must be > 0");
  if (m.n_kv_heads > m.n_heads) {
    errs.push_back("model.n_kv_heads must be <= model.n_heads");
  }
  return errs;
}

std::vector<std::string> validate(const DeviceSpec& d) {
  std::vector<std::string> errs;
  if (d.hbm_bytes <= 0) errs.push_back("device.hbm_bytes must be > 0");
  if (!(d.mem_bw > 0)) errs.push_back("device.mem_bw must be > 0");
  if (!(d.compute_rate > 0)) errs.push_back("device.compute_rate must be > 0");
  if (!(d.xfer_bw > 0)) errs.push_back("device.xfer_bw must be > 0");
  if (d.chunk_bytes <= 0) {
    errs.push_back("device.chunk_bytes must be > 0");
  } else if ((d.chunk_bytes & (d.chunk_bytes - 1)) != 0) {
    errs.push_back("device.chunk_bytes must be a power of two");
  }
  if (d.map_cost < 0) errs.push_back("device.map_cost must be >= 0");
  if (d.unmap_cost < 0) errs.push_back("device.unmap_cost must be >= 0");
  if (d.premap_budget_bytes < 0) {
    errs.push_back("device.premap_budget_bytes must be >= 0");
  }
  return errs;
}

ModelSpec llama3_8b_262k() {
  ModelSpec m;
  m.name = "llama3-8b-262k";
  m.n_layers = 32;
  m.hidden = 4096;
  m.n_heads = 32;
  m.n_kv_heads = 8;
  m.head_dim = 128;
  m.n_params = 8'030'000'000;
  m.dtype_bytes = 2;
  m.max_context = 262'144;
  m.act_coeff = 16.0;
  return m;
}

DeviceSpec a100_80gb() {
  DeviceSpec d;
  d.hbm_bytes = int64_t{80} << 30;
  d.mem_bw = 2.0e12;
  d.compute_rate = 2.0e14;
  d.xfer_bw = 25e9;
  return d;
}

int64_t kv_bytes_per_token(const ModelSpec& m) {
  return 2 * m.n_layers * m.n_kv_heads * m.head_dim * m.dtype_bytes;
}

int64_t activation_bytes(const ModelSpec& m, int64_t n_tokens) {
  // act_coeff is fractional in general; round up to whole bytes.
  const double per_token = m.act_coeff * static_cast<double>(m.hidden) *
                           static_cast<double>(m.dtype_bytes);
  const double total = per_token * static_cast<double>(n_tokens);
  const auto whole = static_cast<int64_t>(total);
  return static_cast<double>(whole) < total ? whole + 1 : whole;
}

int64_t weights_bytes(const ModelSpec& m) { return m.n_params * m.dtype_bytes; }

int64_t chunks_for_bytes(int64_t bytes, int64_t chunk_bytes) {
  if (bytes <= 0) return 0;
  return (bytes + chunk_bytes - 1) / chunk_bytes;
}

int64_t physical_chunks(const ModelSpec& m, const DeviceSpec& d) {
  const int64_t free_bytes = d.hbm_bytes - weights_bytes(m);
  if (free_bytes <= 0) return 0;
  return free_bytes / d.chunk_bytes;
}

CompositionShares composition_report(const ModelSpec& m, const DeviceSpec& d,
                                     int64_t context, int64_t concurrency) {
  const int64_t weights = weights_bytes(m);
  if (weights >= d.hbm_bytes) {
    throw InfeasibleConfig("model weights (" + std::to_string(weights) +
                           " B) do not fit in device memory (" +
                           std::to_string(d.hbm_bytes) + " B)");
  }
  const int64_t rest = d.hbm_bytes - weights;
  const int64_t act =
      std::min(rest, activation_bytes(m, std::max<int64_t>(0, context) *
                                             std::max<int64_t>(0, concurrency)));
  const auto hbm = static_cast<double>(d.hbm_bytes);
  CompositionShares s;
  s.weights = static_cast<double>(weights) / hbm;
  s.activation = static_cast<double>(act) / hbm;
  s.kv = static_cast<double>(rest - act) / hbm;
  return s;
}

double prefill_attn_coeff(const ModelSpec& m, const DeviceSpec& d) {
  // Causal QK^T and AV: 2 matmuls * 2 flop/MAC * n^2/2 pairs per head-dim.
  const double flops_per_pair = 2.0 * static_cast<double>(m.n_layers) *
                                static_cast<double>(m.n_heads) *
                                static_cast<double>(m.head_dim);
  return flops_per_pair / d.compute_rate;
}

double prefill_linear_coeff(const ModelSpec& m, const DeviceSpec& d) {
  return 2.0 * static_cast<double>(m.n_params) / d.compute_rate;
}

double prefill_latency(const ModelSpec& m, const DeviceSpec& d,
                       int64_t n_tokens) {
  const auto n = static_cast<double>(n_tokens);
  return prefill_attn_coeff(m, d) * n * n + prefill_linear_coeff(m, d) * n;
}

double decode_step_latency(const ModelSpec& m, const DeviceSpec& d,
                           int64_t batch, int64_t resident_kv_bytes) {
  const double stream =
      static_cast<double>(weights_bytes(m) + resident_kv_bytes) / d.mem_bw;
  return stream + prefill_linear_coeff(m, d) * static_cast<double>(batch);
}

double transfer_time(const DeviceSpec& d, int64_t n_bytes) {
  return static_cast<double>(n_bytes) / d.xfer_bw;
}

double offload_overlap_delay(double compute, double xfer, int64_t n_layers) {
  const auto layers = static_cast<double>(n_layers);
  return std::max(0.0, xfer - compute * (layers - 1.0) / layers);
}

}  // namespace elasim
