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

#include "elasim/sim.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

namespace elasim {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const std::string& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string_view to_string(Mode mode) {
  return mode == Mode::kElastic ? "elastic" : "static";
}

Mode mode_from_string(const std::string& s) {
  if (s == "elastic") return Mode::kElastic;
  if (s == "static") return Mode::kStatic;
  throw Error("unknown mode '" + s + "' (expected elastic|static)");
}

std::string_view to_string(BufferPolicy p) {
  switch (p) {
    case BufferPolicy::kAuto:
      return "auto";
    case BufferPolicy::kAdaptive:
      return "adaptive";
    case BufferPolicy::kPinned:
      return "pinned";
  }
  return "?";
}

BufferPolicy buffer_policy_from_string(const std::string& s) {
  if (s == "auto") return BufferPolicy::kAuto;
  if (s == "adaptive") return BufferPolicy::kAdaptive;
  if (s == "pinned") return BufferPolicy::kPinned;
  throw Error("unknown buffer policy '" + s + "'");
}

std::vector<std::string> validate(const SimConfig& c) {
  std::vector<std::string> errs = validate(c.model);
  for (std::string& e : validate(c.device)) errs.push_back(std::move(e));
  for (std::string& e : validate(c.workload)) errs.push_back(std::move(e));
  const BufferConfig& b = c.buffer;
  if (b.capacity_chunks < 1) {
    errs.push_back("buffer.capacity_chunks must be >= 1");
  }
  if (b.alpha < 2) errs.push_back("buffer.alpha must be >= 2");
  if (b.threshold < 1) errs.push_back("buffer.threshold must be >= 1");
  if (b.window < b.threshold) {
    errs.push_back("buffer.window must be >= buffer.threshold");
  }
  if (!(c.slo_multiplier > 0)) errs.push_back("slo.multiplier must be > 0");
  if (c.slo_ttft && !(*c.slo_ttft > 0)) errs.push_back("slo.ttft must be > 0");
  if (c.slo_tpot && !(*c.slo_tpot > 0)) errs.push_back("slo.tpot must be > 0");
  if (c.audit_interval < 0) errs.push_back("audit_interval must be >= 0");
  if (c.max_iterations < 1) errs.push_back("max_iterations must be >= 1");
  if (errs.empty()) {
    const int64_t total = physical_chunks(c.model, c.device);
    if (total < 1) {
      errs.push_back("device.hbm_bytes leaves no room after model weights");
    } else if (c.theta && (*c.theta < 0 || *c.theta >= total)) {
      errs.push_back("scheduler.theta must lie in [0, " +
                     std::to_string(total) + ")");
    }
  }
  return errs;
}

int64_t resolved_theta(const SimConfig& c) {
  if (c.theta) return *c.theta;
  return physical_chunks(c.model, c.device) / 50;
}

Stats summarize(std::vector<double> xs) {
  Stats s;
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  s.median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  const auto rank = static_cast<size_t>(std::ceil(0.99 * static_cast<double>(n)));
  s.p99 = xs[std::max<size_t>(rank, 1) - 1];
  return s;
}

Engine::Engine(const SimConfig& config, double slo_ttft, double slo_tpot)
    : cfg_(config), slo_ttft_(slo_ttft), slo_tpot_(slo_tpot) {
  const std::vector<std::string> errs = validate(cfg_);
  if (!errs.empty()) throw InfeasibleConfig(join(errs));
  const ModelSpec& m = cfg_.model;
  const DeviceSpec& d = cfg_.device;
  const bool elastic = cfg_.mode == Mode::kElastic;

  physical_chunks_ = physical_chunks(m, d);
  sched_.theta = resolved_theta(cfg_);
  sched_.prefill_priority = cfg_.prefill_priority;
  kv_bytes_per_token_ = kv_bytes_per_token(m);
  // Both modes start from the max-context split; only Elastic moves it.
  initial_act_chunks_ =
      std::min(physical_chunks_,
               chunks_for_bytes(activation_bytes(m, m.max_context),
                                d.chunk_bytes));

  PoolOptions po;
  po.total_chunks = physical_chunks_;
  po.initial_act_chunks = initial_act_chunks_;
  po.kv_span_chunks =
      chunks_for_bytes(m.max_context * kv_bytes_per_token_, d.chunk_bytes);
  po.elastic = elastic;
  po.premap_budget_bytes = d.premap_budget_bytes;
  po.vmm.chunk_bytes = d.chunk_bytes;
  // The baseline maps everything at startup, so it pays nothing per op.
  po.vmm.map_cost = elastic ? d.map_cost : 0.0;
  po.vmm.unmap_cost = elastic ? d.unmap_cost : 0.0;
  pools_ = std::make_unique<ElasticPools>(po);

  const BufferConfig& b = cfg_.buffer;
  buffer_ = std::make_unique<LogicalBuffer>(b.capacity_chunks, d.chunk_bytes,
                                            b.alpha, 1);
  BufferPolicy policy = b.policy;
  if (policy == BufferPolicy::kAuto) {
    policy = cfg_.workload.kind == WorkloadKind::kFixedBatch
                 ? BufferPolicy::kPinned
                 : BufferPolicy::kAdaptive;
  }
  if (policy == BufferPolicy::kPinned) {
    buffer_->set_logical_size(b.capacity_chunks);
  }
  adaptive_buffer_ = policy == BufferPolicy::kAdaptive;
  detector_ = std::make_unique<ViolationDetector>(slo_ttft_, slo_tpot_,
                                                  b.window, b.threshold);

  const std::vector<TraceRecord> arrivals = generate_arrivals(cfg_.workload);
  requests_.reserve(arrivals.size());
  for (size_t i = 0; i < arrivals.size(); ++i) {
    Request r;
    r.id = RequestId(static_cast<int64_t>(i));
    r.arrival = arrivals[i].arrival_s;
    r.input_tokens = arrivals[i].input_tokens;
    r.output_tokens = arrivals[i].output_tokens;
    r.kv_claim = lifetime_chunks(r.input_tokens, r.output_tokens);
    requests_.push_back(std::move(r));
  }
  check_feasible();

  rep_.mode = cfg_.mode;
  rep_.seed = cfg_.workload.seed;
  rep_.physical_chunks = physical_chunks_;
  rep_.theta = sched_.theta;
  rep_.initial_act_chunks = initial_act_chunks_;
  rep_.slo_ttft = slo_ttft_;
  rep_.slo_tpot = slo_tpot_;
}

Engine::~Engine() = default;

int64_t Engine::lifetime_chunks(int64_t input, int64_t output) const {
  return chunks_for_bytes((input + output) * kv_bytes_per_token_,
                          cfg_.device.chunk_bytes);
}

int64_t Engine::context_chunks(const Request& r) const {
  return chunks_for_bytes((r.input_tokens + r.generated) * kv_bytes_per_token_,
                          cfg_.device.chunk_bytes);
}

void Engine::check_feasible() const {
  const int64_t kv_partition = physical_chunks_ - initial_act_chunks_;
  for (const Request& r : requests_) {
    const int64_t act = chunks_for_bytes(
        activation_bytes(cfg_.model, r.input_tokens), cfg_.device.chunk_bytes);
    const bool fits =
        cfg_.mode == Mode::kElastic
            ? r.kv_claim + act + sched_.theta <= physical_chunks_
            : r.kv_claim + sched_.theta <= kv_partition &&
                  act <= initial_act_chunks_;
    if (!fits) {
      throw InfeasibleConfig(
          "request " + std::to_string(r.id.value) + " (" +
          std::to_string(r.input_tokens) + "+" +
          std::to_string(r.output_tokens) + " tokens) needs " +
          std::to_string(r.kv_claim) + " KV and " + std::to_string(act) +
          " activation chunks; the device cannot hold it in " +
          std::string(to_string(cfg_.mode)) + " mode");
    }
  }
}

bool Engine::done() const {
  return next_arrival_ == requests_.size() && waiting_.empty() &&
         active_.empty();
}

void Engine::pull_arrivals() {
  while (next_arrival_ < requests_.size() &&
         requests_[next_arrival_].arrival <= now_) {
    waiting_.push_back(next_arrival_++);
  }
}

std::vector<PlanRequest> Engine::prefill_queue() const {
  std::vector<PlanRequest> q;
  q.reserve(waiting_.size());
  int64_t tokens = 0;
  int64_t prev = 0;
  for (size_t idx : waiting_) {
    const Request& r = requests_[idx];
    tokens += r.input_tokens;
    const int64_t cum = chunks_for_bytes(activation_bytes(cfg_.model, tokens),
                                         cfg_.device.chunk_bytes);
    q.push_back(PlanRequest{r.id, cum - prev, r.kv_claim, false});
    prev = cum;
  }
  return q;
}

std::vector<PlanRequest> Engine::decode_queue() const {
  std::vector<PlanRequest> q;
  q.reserve(active_.size());
  int64_t tokens = 0;
  int64_t prev = 0;
  auto add = [&](const Request& r, int64_t kv) {
    ++tokens;
    const int64_t cum = chunks_for_bytes(activation_bytes(cfg_.model, tokens),
                                         cfg_.device.chunk_bytes);
    q.push_back(PlanRequest{r.id, cum - prev, kv,
                            r.residency == Residency::kHost});
    prev = cum;
  };
  for (size_t idx : active_) {
    const Request& r = requests_[idx];
    if (r.residency == Residency::kDevice) {
      add(r, std::max<int64_t>(0, context_chunks(r) - r.kv_claim));
    }
  }
  for (size_t idx : active_) {
    const Request& r = requests_[idx];
    if (r.residency == Residency::kHost) add(r, r.kv_claim);
  }
  return q;
}

PlannerCounters Engine::planner_counters() const {
  const PoolCounters c = pools_->counters();
  PlannerCounters pc;
  pc.free_kv = c.free_kv;
  pc.free_act = c.free_act;
  // Running requests hold their KV claims, so the planner budgets against
  // what is still free.
  pc.total = cfg_.mode == Mode::kElastic ? c.free_total() : c.total;
  return pc;
}

void Engine::apply_inflation(int64_t amount) {
  if (amount == 0) return;
  if (cfg_.mode == Mode::kStatic) {
    throw InvariantViolation("static plan asked for an ownership transfer");
  }
  const int64_t moved =
      amount > 0 ? pools_->inflate(amount) : pools_->deflate(-amount);
  if (moved != std::abs(amount)) {
    throw InvariantViolation("ballooning moved " + std::to_string(moved) +
                             " of " + std::to_string(std::abs(amount)) +
                             " chunks");
  }
  ++rep_.ownership_transfers;
}

void Engine::check_reservation(const IterationPlan& plan) {
  ++rep_.reservation_checks;
  const PoolCounters c = pools_->counters();
  const int64_t left = cfg_.mode == Mode::kElastic
                           ? c.free_total() - plan.kv_demand - plan.act_demand
                           : c.free_kv - plan.kv_demand;
  if (c.free_kv < plan.kv_demand || c.free_act < plan.act_demand ||
      left < sched_.theta) {
    ++rep_.reservation_failures;
    throw InvariantViolation(
        "incomplete reservation at iteration " + std::to_string(iterations_) +
        ": KV " + std::to_string(plan.kv_demand) + "/" +
        std::to_string(c.free_kv) + ", activation " +
        std::to_string(plan.act_demand) + "/" + std::to_string(c.free_act));
  }
}

void Engine::record_plan(const IterationPlan& plan) {
  if (!cfg_.record_plans) return;
  PlanRecord rec;
  rec.iteration = iterations_;
  rec.t = now_;
  rec.phase = plan.phase;
  for (RequestId id : plan.batch) rec.batch.push_back(id.value);
  for (RequestId id : plan.offloads) rec.offloads.push_back(id.value);
  for (RequestId id : plan.fetches) rec.fetches.push_back(id.value);
  rec.inflation = plan.inflation;
  rec.kv_demand = plan.kv_demand;
  rec.act_demand = plan.act_demand;
  rep_.plans.push_back(std::move(rec));
}

void Engine::step() {
  if (done()) return;
  pull_arrivals();
  if (waiting_.empty() && active_.empty()) {
    now_ = std::max(now_, requests_[next_arrival_].arrival);
    pull_arrivals();
  }
  if (++iterations_ > cfg_.max_iterations) {
    throw InvariantViolation("iteration limit reached");
  }
  const bool elastic = cfg_.mode == Mode::kElastic;
  const PlannerCounters pc = planner_counters();
  const std::vector<PlanRequest> pq = prefill_queue();
  const IterationPlan pp =
      elastic ? plan_prefill(sched_, pc, pq, buffer_->logical_space())
              : plan_prefill_static(sched_, pc, pq);
  const Phase phase =
      select_phase(sched_, !waiting_.empty(), !active_.empty(), pp);
  if (phase == Phase::kPrefill) {
    record_plan(pp);
    run_prefill(pp);
    end_iteration(pp);
    return;
  }
  if (active_.empty()) {
    throw InvariantViolation(
        "stuck: " + std::to_string(waiting_.size()) +
        " requests wait, none can be admitted and nothing is decoding");
  }
  const std::vector<PlanRequest> dq = decode_queue();
  const IterationPlan dp = elastic ? plan_decode(sched_, pc, dq)
                                   : plan_decode_static(sched_, pc, dq);
  if (dp.empty()) {
    throw InvariantViolation("stuck: decode plan admitted nothing");
  }
  record_plan(dp);
  run_decode(dp);
  end_iteration(dp);
}

void Engine::run_prefill(const IterationPlan& plan) {
  ++rep_.prefill_iterations;
  const ModelSpec& m = cfg_.model;
  const DeviceSpec& d = cfg_.device;
  const double vmm_before = pools_->vmm().accounting().on_path_seconds();
  apply_inflation(plan.inflation);
  check_reservation(plan);

  auto is_offload = [&](RequestId id) {
    return std::find(plan.offloads.begin(), plan.offloads.end(), id) !=
           plan.offloads.end();
  };
  int64_t tokens = 0;
  double compute = 0;
  for (RequestId id : plan.batch) {
    const Request& r = requests_[id.value];
    tokens += r.input_tokens;
    compute += prefill_latency(m, d, r.input_tokens);
  }
  // Everything the batch needs is claimed before any of it runs.
  const TensorId act = pools_->act_acquire(activation_bytes(m, tokens));
  for (RequestId id : plan.batch) {
    Request& r = requests_[id.value];
    if (!is_offload(id)) r.kv_tensor = pools_->kv_acquire(r.kv_claim, id);
  }
  rep_.peak_act_used =
      std::max(rep_.peak_act_used, pools_->counters().used_act);

  int64_t offload_bytes = 0;
  for (RequestId id : plan.batch) {
    Request& r = requests_[id.value];
    r.state = RequestState::kPrefilling;
    if (r.kv_tensor) {
      pools_->kv_write(*r.kv_tensor, context_chunks(r));
      continue;
    }
    const int64_t chunks = context_chunks(r);
    buffer_->offload(id, chunks);
    offload_bytes += chunks * d.chunk_bytes;
    r.residency = Residency::kHost;
    r.was_offloaded = true;
    ++rep_.offloads;
  }
  const double delay = offload_bytes > 0
                           ? offload_overlap_delay(
                                 compute, transfer_time(d, offload_bytes),
                                 m.n_layers)
                           : 0.0;
  pools_->release(act);
  now_ += compute + delay +
          (pools_->vmm().accounting().on_path_seconds() - vmm_before);

  for (RequestId id : plan.batch) {
    Request& r = requests_[id.value];
    r.state = RequestState::kDecoding;
    r.generated = 1;
    r.first_token_time = now_;
    r.token_times.push_back(now_);
    ttft_obs_.push_back(now_ - r.arrival);
    active_.push_back(static_cast<size_t>(id.value));
    if (r.generated >= r.output_tokens) finish_request(r);
  }
  waiting_.erase(waiting_.begin(),
                 waiting_.begin() + static_cast<ptrdiff_t>(plan.batch.size()));
}

void Engine::run_decode(const IterationPlan& plan) {
  ++rep_.decode_iterations;
  const ModelSpec& m = cfg_.model;
  const DeviceSpec& d = cfg_.device;
  const double start = now_;
  const double vmm_before = pools_->vmm().accounting().on_path_seconds();
  apply_inflation(plan.inflation);
  check_reservation(plan);

  const int64_t batch = static_cast<int64_t>(plan.batch.size());
  const TensorId act = pools_->act_acquire(activation_bytes(m, batch));
  for (RequestId id : plan.fetches) {
    Request& r = requests_[id.value];
    r.kv_tensor = pools_->kv_acquire(r.kv_claim, id);
  }
  rep_.peak_act_used =
      std::max(rep_.peak_act_used, pools_->counters().used_act);

  int64_t fetch_bytes = 0;
  for (RequestId id : plan.fetches) {
    Request& r = requests_[id.value];
    fetch_bytes += buffer_->fetch(id, r.kv_tensor.has_value());
    r.residency = Residency::kDevice;
    ++rep_.fetches;
  }
  int64_t resident_bytes = 0;
  for (RequestId id : plan.batch) {
    Request& r = requests_[id.value];
    pools_->kv_write(*r.kv_tensor, context_chunks(r));
    resident_bytes += (r.input_tokens + r.generated) * kv_bytes_per_token_;
  }
  const double compute = decode_step_latency(m, d, batch, resident_bytes);
  const double delay =
      fetch_bytes > 0
          ? offload_overlap_delay(compute, transfer_time(d, fetch_bytes),
                                  m.n_layers)
          : 0.0;
  pools_->release(act);
  now_ += compute + delay +
          (pools_->vmm().accounting().on_path_seconds() - vmm_before);
  rep_.decode_time += now_ - start;
  rep_.decode_tokens += batch;
  rep_.max_decode_batch = std::max(rep_.max_decode_batch, batch);

  for (RequestId id : plan.batch) {
    Request& r = requests_[id.value];
    tpot_obs_.push_back(now_ - r.token_times.back());
    ++r.generated;
    r.token_times.push_back(now_);
    if (r.generated >= r.output_tokens) finish_request(r);
  }
}

void Engine::finish_request(Request& r) {
  r.state = RequestState::kFinished;
  r.finish_time = now_;
  if (r.kv_tensor) {
    pools_->release(*r.kv_tensor);
    r.kv_tensor.reset();
  }
  buffer_->drop(r.id);
}

void Engine::end_iteration(const IterationPlan& plan) {
  std::erase_if(active_, [&](size_t idx) {
    return requests_[idx].state == RequestState::kFinished;
  });
  pools_->drain_deferred(std::numeric_limits<int64_t>::max());

  std::vector<PremapCandidate> cands;
  for (size_t idx : active_) {
    const Request& r = requests_[idx];
    if (r.residency == Residency::kDevice && r.kv_tensor) {
      cands.push_back(PremapCandidate{*r.kv_tensor, context_chunks(r)});
    }
  }
  pools_->speculative_premap(cands);

  // Requests that are starving would otherwise report nothing until they
  // finally run.
  if (!waiting_.empty()) {
    const double age = now_ - requests_[waiting_.front()].arrival;
    if (age > slo_ttft_) ttft_obs_.push_back(age);
  }
  double host_gap = 0;
  for (size_t idx : active_) {
    const Request& r = requests_[idx];
    if (r.residency == Residency::kHost) {
      host_gap = std::max(host_gap, now_ - r.token_times.back());
    }
  }
  if (host_gap > slo_tpot_) tpot_obs_.push_back(host_gap);
  const ViolationEvents ev = detector_->record_iteration(ttft_obs_, tpot_obs_);
  ttft_obs_.clear();
  tpot_obs_.clear();
  if (adaptive_buffer_ && cfg_.mode == Mode::kElastic) {
    buffer_->scale(ev.ttft, ev.tpot);
  }

  const PoolCounters c = pools_->counters();
  if (c.free_kv < 0 || c.free_act < 0 || c.used_kv < 0 || c.used_act < 0 ||
      c.free_total() + c.used_kv + c.used_act != physical_chunks_) {
    throw InvariantViolation("chunk partition broken at iteration " +
                             std::to_string(iterations_));
  }
  if (cfg_.audit_interval > 0 && iterations_ % cfg_.audit_interval == 0) {
    const std::vector<std::string> errs = pools_->audit();
    if (!errs.empty()) throw InvariantViolation("pool audit: " + join(errs));
  }

  TimeSample s;
  s.t = now_;
  s.phase = plan.phase;
  s.batch = static_cast<int64_t>(plan.batch.size());
  s.kv_used = c.used_kv;
  s.act_used = c.used_act;
  s.kv_owned = c.owned_kv();
  s.act_owned = c.owned_act();
  s.free_chunks = c.free_total();
  s.buffer_logical = buffer_->logical_size();
  s.buffer_used = buffer_->used();
  rep_.series.push_back(s);
}

Report Engine::finish() const {
  if (!done()) throw InvariantViolation("report requested before completion");
  Report rep = rep_;
  rep.iterations = iterations_;
  std::vector<double> ttfts, tpots;
  int64_t meets = 0;
  for (const Request& r : requests_) {
    RequestMetrics rm;
    rm.id = r.id.value;
    rm.arrival = r.arrival;
    rm.input_tokens = r.input_tokens;
    rm.output_tokens = r.output_tokens;
    rm.ttft = *r.first_token_time - r.arrival;
    rm.tpot = (*r.finish_time - *r.first_token_time) /
              static_cast<double>(std::max<int64_t>(1, r.generated - 1));
    rm.offloaded = r.was_offloaded;
    rm.meets_slo = rm.ttft <= slo_ttft_ && rm.tpot <= slo_tpot_;
    meets += rm.meets_slo ? 1 : 0;
    rep.generated_tokens += r.generated;
    ttfts.push_back(rm.ttft);
    tpots.push_back(rm.tpot);
    rep.requests.push_back(rm);
  }
  rep.ttft = summarize(std::move(ttfts));
  rep.tpot = summarize(std::move(tpots));
  rep.makespan = now_;
  rep.output_throughput =
      now_ > 0 ? static_cast<double>(rep.generated_tokens) / now_ : 0.0;
  rep.decode_throughput =
      rep.decode_time > 0
          ? static_cast<double>(rep.decode_tokens) / rep.decode_time
          : 0.0;
  rep.slo_attainment =
      requests_.empty()
          ? 0.0
          : static_cast<double>(meets) / static_cast<double>(requests_.size());
  rep.pool_stats = pools_->stats();
  const VmmAccounting& acct = pools_->vmm().accounting();
  rep.vmm_maps = acct.map_count();
  rep.vmm_unmaps = acct.unmap_count();
  rep.vmm_on_path_s = acct.on_path_seconds();
  rep.vmm_background_s = acct.background_seconds();
  rep.vmm_share = now_ > 0 ? acct.total_seconds() / now_ : 0.0;
  rep.act_reserve_peak_utilization =
      initial_act_chunks_ > 0 ? static_cast<double>(rep.peak_act_used) /
                                    static_cast<double>(initial_act_chunks_)
                              : 0.0;
  return rep;
}

SloPair unloaded_latency(const SimConfig& config) {
  const std::vector<TraceRecord> arrivals = generate_arrivals(config.workload);
  const size_t k = std::min<size_t>(10, arrivals.size());
  SimConfig c = config;
  c.record_plans = false;
  c.workload = WorkloadSpec{};
  c.workload.kind = WorkloadKind::kTrace;
  c.workload.seed = config.workload.seed;
  c.mode = Mode::kStatic;
  SloPair sum;
  for (size_t i = 0; i < k; ++i) {
    c.workload.trace = {TraceRecord{0.0, arrivals[i].input_tokens,
                                    arrivals[i].output_tokens}};
    std::unique_ptr<Engine> e;
    try {
      e = std::make_unique<Engine>(c, kInf, kInf);
    } catch (const InfeasibleConfig&) {
      SimConfig alt = c;
      alt.mode = Mode::kElastic;
      e = std::make_unique<Engine>(alt, kInf, kInf);
    }
    while (!e->done()) e->step();
    const Report r = e->finish();
    sum.ttft += r.ttft.mean;
    sum.tpot += r.tpot.mean;
  }
  sum.ttft /= static_cast<double>(k);
  sum.tpot /= static_cast<double>(k);
  return sum;
}

SimConfig with_resolved_slo(const SimConfig& config) {
  if (config.slo_ttft && config.slo_tpot) return config;
  const std::vector<std::string> errs = validate(config);
  if (!errs.empty()) throw InfeasibleConfig(join(errs));
  SimConfig c = config;
  const SloPair base = unloaded_latency(config);
  if (!c.slo_ttft) c.slo_ttft = base.ttft * c.slo_multiplier;
  if (!c.slo_tpot) c.slo_tpot = base.tpot * c.slo_multiplier;
  return c;
}

Report run(const SimConfig& config) {
  const SimConfig c = with_resolved_slo(config);
  Engine e(c, *c.slo_ttft, *c.slo_tpot);
  while (!e.done()) e.step();
  return e.finish();
}

std::optional<double> goodput_from_points(
    const std::vector<GoodputPoint>& points, double target) {
  std::optional<double> best;
  for (const GoodputPoint& p : points) {
    if (p.attainment >= target) best = best ? std::max(*best, p.rate) : p.rate;
  }
  return best;
}

GoodputResult goodput_search(const SimConfig& base,
                             const std::vector<double>& rates, double target) {
  if (rates.empty()) throw Error("rate grid is empty");
  if (!std::is_sorted(rates.begin(), rates.end()) ||
      std::adjacent_find(rates.begin(), rates.end()) != rates.end()) {
    throw Error("rate grid must be strictly ascending");
  }
  const SimConfig c = with_resolved_slo(base);
  std::vector<std::future<GoodputPoint>> jobs;
  jobs.reserve(rates.size());
  for (double rate : rates) {
    jobs.push_back(std::async(std::launch::async, [c, rate] {
      SimConfig x = c;
      x.workload.kind = WorkloadKind::kPoisson;
      x.workload.rate = rate;
      x.record_plans = false;
      const Report r = run(x);
      return GoodputPoint{rate, r.slo_attainment, r.ttft.mean, r.tpot.mean};
    }));
  }
  GoodputResult out;
  out.slo_ttft = *c.slo_ttft;
  out.slo_tpot = *c.slo_tpot;
  for (auto& j : jobs) out.points.push_back(j.get());
  const std::optional<double> g = goodput_from_points(out.points, target);
  out.attained = g.has_value();
  out.goodput = g.value_or(0.0);
  return out;
}

}  // namespace elasim
