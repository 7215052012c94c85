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

#ifndef ELASIM_SIM_H_
#define ELASIM_SIM_H_

// Iteration-level discrete-event engine. Each step picks a phase, plans it,
// executes the plan against the pools and the host buffer, and advances the
// clock by the cost model.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "elasim/cpu_buffer.h"
#include "elasim/footprint.h"
#include "elasim/pools.h"
#include "elasim/scheduler.h"
#include "elasim/workload.h"

namespace elasim {

enum class Mode : uint8_t { kElastic, kStatic };

std::string_view to_string(Mode mode);
Mode mode_from_string(const std::string& s);

// kAuto pins the logical size to capacity for fixed-batch workloads and
// adapts it otherwise.
enum class BufferPolicy : uint8_t { kAuto, kAdaptive, kPinned };

std::string_view to_string(BufferPolicy p);
BufferPolicy buffer_policy_from_string(const std::string& s);

struct BufferConfig {
  int64_t capacity_chunks = 32768;  // 64 GiB of 2 MiB chunks
  int64_t alpha = 2;
  int window = 5;
  int threshold = 3;
  BufferPolicy policy = BufferPolicy::kAuto;

  bool operator==(const BufferConfig&) const = default;
};

struct SimConfig {
  ModelSpec model;
  DeviceSpec device;
  // Unset: 2% of the physical chunk count.
  std::optional<int64_t> theta;
  bool prefill_priority = true;
  BufferConfig buffer;
  WorkloadSpec workload;
  Mode mode = Mode::kElastic;
  double slo_multiplier = 25.0;
  // Unset: measured from uncontended runs, times slo_multiplier.
  std::optional<double> slo_ttft;
  std::optional<double> slo_tpot;
  // Full pool audit every this many iterations; 0 disables.
  int64_t audit_interval = 1024;
  int64_t max_iterations = 50'000'000;
  bool record_plans = false;

  bool operator==(const SimConfig&) const = default;
};

std::vector<std::string> validate(const SimConfig& c);
int64_t resolved_theta(const SimConfig& c);

enum class RequestState : uint8_t { kQueued, kPrefilling, kDecoding, kFinished };
enum class Residency : uint8_t { kDevice, kHost };

struct Request {
  RequestId id;
  double arrival = 0;
  int64_t input_tokens = 0;
  int64_t output_tokens = 0;
  RequestState state = RequestState::kQueued;
  Residency residency = Residency::kDevice;
  int64_t generated = 0;
  std::optional<double> first_token_time;
  std::optional<double> finish_time;
  std::vector<double> token_times;
  // Lifetime KV claim in chunks.
  int64_t kv_claim = 0;
  std::optional<TensorId> kv_tensor;
  bool was_offloaded = false;
};

struct RequestMetrics {
  int64_t id = 0;
  double arrival = 0;
  int64_t input_tokens = 0;
  int64_t output_tokens = 0;
  double ttft = 0;
  double tpot = 0;
  bool offloaded = false;
  bool meets_slo = false;
};

struct Stats {
  double mean = 0;
  double median = 0;
  double p99 = 0;
};

struct TimeSample {
  double t = 0;
  Phase phase = Phase::kPrefill;
  int64_t batch = 0;
  int64_t kv_used = 0;
  int64_t act_used = 0;
  int64_t kv_owned = 0;
  int64_t act_owned = 0;
  int64_t free_chunks = 0;
  int64_t buffer_logical = 0;
  int64_t buffer_used = 0;
};

struct PlanRecord {
  int64_t iteration = 0;
  double t = 0;
  Phase phase = Phase::kPrefill;
  std::vector<int64_t> batch;
  int64_t inflation = 0;
  std::vector<int64_t> offloads;
  std::vector<int64_t> fetches;
  int64_t kv_demand = 0;
  int64_t act_demand = 0;
};

struct Report {
  Mode mode = Mode::kElastic;
  uint64_t seed = 0;
  int64_t physical_chunks = 0;
  int64_t theta = 0;
  int64_t initial_act_chunks = 0;
  double slo_ttft = 0;
  double slo_tpot = 0;

  std::vector<RequestMetrics> requests;
  Stats ttft;
  Stats tpot;
  double makespan = 0;
  int64_t generated_tokens = 0;
  double output_throughput = 0;
  int64_t decode_tokens = 0;
  double decode_time = 0;
  double decode_throughput = 0;
  int64_t max_decode_batch = 0;
  double slo_attainment = 0;

  int64_t iterations = 0;
  int64_t prefill_iterations = 0;
  int64_t decode_iterations = 0;
  int64_t ownership_transfers = 0;  // inflate + deflate events that moved
  PoolStats pool_stats;
  int64_t offloads = 0;
  int64_t fetches = 0;
  int64_t reservation_checks = 0;
  int64_t reservation_failures = 0;
  int64_t peak_act_used = 0;
  double act_reserve_peak_utilization = 0;

  int64_t vmm_maps = 0;
  int64_t vmm_unmaps = 0;
  double vmm_on_path_s = 0;
  double vmm_background_s = 0;
  double vmm_share = 0;

  std::vector<TimeSample> series;
  std::vector<PlanRecord> plans;
};

class Engine {
 public:
  // SLOs must be resolved (see run()) before constructing an engine.
  explicit Engine(const SimConfig& config, double slo_ttft, double slo_tpot);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  bool done() const;
  // One iteration, or a jump to the next arrival when idle.
  void step();
  Report finish() const;

  double now() const { return now_; }
  int64_t iterations() const { return iterations_; }
  const ElasticPools& pools() const { return *pools_; }
  const LogicalBuffer& buffer() const { return *buffer_; }
  const std::vector<Request>& requests() const { return requests_; }

 private:
  void pull_arrivals();
  std::vector<PlanRequest> prefill_queue() const;
  std::vector<PlanRequest> decode_queue() const;
  PlannerCounters planner_counters() const;
  void apply_inflation(int64_t amount);
  void check_reservation(const IterationPlan& plan);
  void run_prefill(const IterationPlan& plan);
  void run_decode(const IterationPlan& plan);
  void end_iteration(const IterationPlan& plan);
  void finish_request(Request& r);
  void record_plan(const IterationPlan& plan);
  int64_t context_chunks(const Request& r) const;
  int64_t lifetime_chunks(int64_t input, int64_t output) const;
  void check_feasible() const;

  SimConfig cfg_;
  SchedulerConfig sched_;
  double slo_ttft_;
  double slo_tpot_;
  int64_t physical_chunks_ = 0;
  int64_t initial_act_chunks_ = 0;
  int64_t kv_bytes_per_token_ = 0;
  std::unique_ptr<ElasticPools> pools_;
  std::unique_ptr<LogicalBuffer> buffer_;
  std::unique_ptr<ViolationDetector> detector_;
  bool adaptive_buffer_ = false;

  std::vector<Request> requests_;
  size_t next_arrival_ = 0;
  std::vector<size_t> waiting_;  // request indices, FCFS
  std::vector<size_t> active_;   // decoding, in admission order
  double now_ = 0;
  int64_t iterations_ = 0;

  // Per-iteration observations for the detector.
  std::vector<double> ttft_obs_;
  std::vector<double> tpot_obs_;

  Report rep_;
};

// Uncontended TTFT and TPOT: up to ten requests of the workload, each run
// alone in Static mode (Elastic if Static cannot hold them).
struct SloPair {
  double ttft = 0;
  double tpot = 0;
};
SloPair unloaded_latency(const SimConfig& config);

// Fills unset SLOs from unloaded_latency times the multiplier.
SimConfig with_resolved_slo(const SimConfig& config);

// Runs the configured workload to completion.
Report run(const SimConfig& config);

struct GoodputPoint {
  double rate = 0;
  double attainment = 0;
  double mean_ttft = 0;
  double mean_tpot = 0;
};

struct GoodputResult {
  double slo_ttft = 0;
  double slo_tpot = 0;
  std::vector<GoodputPoint> points;  // ascending rate
  double goodput = 0;
  bool attained = false;  // false: no rate reached 90%
};

// Largest grid rate whose attainment is at least 0.90. Grid points run in
// parallel on isolated engines; results are ordered by rate.
GoodputResult goodput_search(const SimConfig& base,
                             const std::vector<double>& rates,
                             double target = 0.90);

// Largest rate in an ascending grid whose attainment meets `target`.
std::optional<double> goodput_from_points(
    const std::vector<GoodputPoint>& points, double target = 0.90);

Stats summarize(std::vector<double> xs);

}  // namespace elasim

#endif  // ELASIM_SIM_H_
