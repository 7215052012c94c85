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

#ifndef ELASIM_FOOTPRINT_H_
#define ELASIM_FOOTPRINT_H_

// Byte and latency cost model shared by the pools, the scheduler inputs and
// the simulator clock. Every function here is pure.

#include <cstdint>
#include <string>
#include <vector>

namespace elasim {

struct ModelSpec {
  std::string name = "model";
  int64_t n_layers = 0;
  int64_t hidden = 0;
  int64_t n_heads = 0;
  int64_t n_kv_heads = 0;
  int64_t head_dim = 0;
  int64_t n_params = 0;
  int64_t dtype_bytes = 2;
  int64_t max_context = 0;
  // Activation bytes per token = act_coeff * hidden * dtype_bytes.
  double act_coeff = 24.0;

  bool operator==(const ModelSpec&) const = default;
};

struct DeviceSpec {
  int64_t hbm_bytes = 0;
  double mem_bw = 0;        // bytes/s
  double compute_rate = 0;  // flop/s
  double xfer_bw = 25e9;    // device <-> host bytes/s
  int64_t chunk_bytes = int64_t{2} << 20;
  double map_cost = 5e-6;    // seconds per chunk
  double unmap_cost = 10e-6; // seconds per chunk
  int64_t premap_budget_bytes = int64_t{50} << 20;

  bool operator==(const DeviceSpec&) const = default;
};

// Returns a list of human-readable invariant violations; empty when valid.
std::vector<std::string> validate(const ModelSpec& m);
std::vector<std::string> validate(const DeviceSpec& d);

// Llama-3-8B with a 262K context window. act_coeff is calibrated so that the
// composition report lands near the published 2K/200K activation shares.
ModelSpec llama3_8b_262k();
// A100 80GB with PCIe-4 class host transfer.
DeviceSpec a100_80gb();

int64_t kv_bytes_per_token(const ModelSpec& m);
int64_t activation_bytes(const ModelSpec& m, int64_t n_tokens);
int64_t weights_bytes(const ModelSpec& m);

// Chunks needed to hold `bytes` (ceiling division).
int64_t chunks_for_bytes(int64_t bytes, int64_t chunk_bytes);

// Physical chunks left for KV + activations once weights are resident.
int64_t physical_chunks(const ModelSpec& m, const DeviceSpec& d);

struct CompositionShares {
  double weights = 0;
  double activation = 0;
  double kv = 0;
};

// Shares of device memory when activations are sized for `concurrency`
// simultaneous prefills of `context` tokens and KV takes the rest.
// Throws InfeasibleConfig when the weights alone do not fit.
CompositionShares composition_report(const ModelSpec& m, const DeviceSpec& d,
                                     int64_t context, int64_t concurrency);

// Prefill latency = attn_coeff * n^2 + linear_coeff * n.
double prefill_attn_coeff(const ModelSpec& m, const DeviceSpec& d);
double prefill_linear_coeff(const ModelSpec& m, const DeviceSpec& d);
double prefill_latency(const ModelSpec& m, const DeviceSpec& d,
                       int64_t n_tokens);

// One decode iteration: stream the weights and the resident KV once, plus a
// per-token compute term for each sequence in the batch.
double decode_step_latency(const ModelSpec& m, const DeviceSpec& d,
                           int64_t batch, int64_t resident_kv_bytes);

double transfer_time(const DeviceSpec& d, int64_t n_bytes);

// Exposed part of a transfer pipelined layer by layer behind `compute`. Only
// (n_layers - 1) of the n_layers compute stages can hide transfer time.
double offload_overlap_delay(double compute, double xfer, int64_t n_layers);

}  // namespace elasim

#endif  // ELASIM_FOOTPRINT_H_
