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

#include "elasim/report.h"

#include <fstream>
#include <sstream>

#include "fmt/format.h"

namespace elasim {

namespace {

Json stats_json(const Stats& s) {
  return Json{{"mean", s.mean}, {"median", s.median}, {"p99", s.p99}};
}

std::string_view phase_name(Phase p) {
  return p == Phase::kPrefill ? "prefill" : "decode";
}

}  // namespace

Json to_json(const Report& r, bool include_requests) {
  Json j;
  j["mode"] = to_string(r.mode);
  j["seed"] = r.seed;
  j["physical_chunks"] = r.physical_chunks;
  j["theta"] = r.theta;
  j["initial_act_chunks"] = r.initial_act_chunks;
  j["slo"] = Json{{"ttft", r.slo_ttft}, {"tpot", r.slo_tpot}};
  j["ttft"] = stats_json(r.ttft);
  j["tpot"] = stats_json(r.tpot);
  j["makespan_s"] = r.makespan;
  j["generated_tokens"] = r.generated_tokens;
  j["output_throughput"] = r.output_throughput;
  j["decode_tokens"] = r.decode_tokens;
  j["decode_time_s"] = r.decode_time;
  j["decode_throughput"] = r.decode_throughput;
  j["max_decode_batch"] = r.max_decode_batch;
  j["slo_attainment"] = r.slo_attainment;
  j["iterations"] = Json{{"total", r.iterations},
                         {"prefill", r.prefill_iterations},
                         {"decode", r.decode_iterations}};
  const PoolStats& p = r.pool_stats;
  j["pools"] = Json{{"ownership_transfers", r.ownership_transfers},
                    {"inflate_events", p.inflate_events},
                    {"inflated_chunks", p.inflated_chunks},
                    {"deflate_events", p.deflate_events},
                    {"deflated_chunks", p.deflated_chunks},
                    {"kv_reuse_hits", p.kv_reuse_hits},
                    {"kv_fresh_spans", p.kv_fresh_spans},
                    {"premapped_chunks", p.premapped_chunks},
                    {"gc_unmaps", p.gc_unmaps},
                    {"peak_act_used", r.peak_act_used},
                    {"act_reserve_peak_utilization",
                     r.act_reserve_peak_utilization}};
  j["buffer"] = Json{{"offloads", r.offloads}, {"fetches", r.fetches}};
  j["reservations"] = Json{{"checks", r.reservation_checks},
                           {"failures", r.reservation_failures}};
  j["vmm"] = Json{{"maps", r.vmm_maps},
                  {"unmaps", r.vmm_unmaps},
                  {"on_path_s", r.vmm_on_path_s},
                  {"background_s", r.vmm_background_s},
                  {"share", r.vmm_share}};
  if (include_requests) {
    Json reqs = Json::array();
    for (const RequestMetrics& m : r.requests) {
      reqs.push_back(Json{{"id", m.id},
                          {"arrival", m.arrival},
                          {"input_tokens", m.input_tokens},
                          {"output_tokens", m.output_tokens},
                          {"ttft", m.ttft},
                          {"tpot", m.tpot},
                          {"offloaded", m.offloaded},
                          {"meets_slo", m.meets_slo}});
    }
    j["requests"] = std::move(reqs);
  }
  return j;
}

Json to_json(const GoodputResult& g) {
  Json pts = Json::array();
  for (const GoodputPoint& p : g.points) {
    pts.push_back(Json{{"rate", p.rate},
                       {"attainment", p.attainment},
                       {"mean_ttft", p.mean_ttft},
                       {"mean_tpot", p.mean_tpot}});
  }
  return Json{{"slo", Json{{"ttft", g.slo_ttft}, {"tpot", g.slo_tpot}}},
              {"points", std::move(pts)},
              {"goodput", g.goodput},
              {"attained", g.attained}};
}

std::string series_csv(const Report& r) {
  std::string out =
      "t,phase,batch,kv_used,act_used,kv_owned,act_owned,free,"
      "buffer_logical,buffer_used\n";
  for (const TimeSample& s : r.series) {
    out += fmt::format("{:.9g},{},{},{},{},{},{},{},{},{}\n", s.t,
                       phase_name(s.phase), s.batch, s.kv_used, s.act_used,
                       s.kv_owned, s.act_owned, s.free_chunks,
                       s.buffer_logical, s.buffer_used);
  }
  return out;
}

std::string requests_csv(const Report& r) {
  std::string out =
      "id,arrival,input_tokens,output_tokens,ttft,tpot,offloaded,meets_slo\n";
  for (const RequestMetrics& m : r.requests) {
    out += fmt::format("{},{:.9g},{},{},{:.9g},{:.9g},{},{}\n", m.id,
                       m.arrival, m.input_tokens, m.output_tokens, m.ttft,
                       m.tpot, m.offloaded ? 1 : 0, m.meets_slo ? 1 : 0);
  }
  return out;
}

std::string plans_jsonl(const Report& r) {
  std::string out;
  for (const PlanRecord& p : r.plans) {
    Json j{{"iteration", p.iteration},
           {"t", p.t},
           {"phase", phase_name(p.phase)},
           {"batch", p.batch},
           {"inflation", p.inflation},
           {"offloads", p.offloads},
           {"fetches", p.fetches},
           {"kv_demand", p.kv_demand},
           {"act_demand", p.act_demand}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<CompareRow> compare_rows(const Report& e, const Report& s) {
  auto row = [](std::string name, double a, double b) {
    return CompareRow{std::move(name), a, b, b > 0 ? a / b : 0.0};
  };
  return {row("total_throughput", e.output_throughput, s.output_throughput),
          row("decode_throughput", e.decode_throughput, s.decode_throughput),
          row("max_decode_batch", static_cast<double>(e.max_decode_batch),
              static_cast<double>(s.max_decode_batch))};
}

Json to_json(const std::vector<CompareRow>& rows) {
  Json out = Json::array();
  for (const CompareRow& r : rows) {
    out.push_back(Json{{"metric", r.metric},
                       {"elastic", r.elastic},
                       {"static", r.baseline},
                       {"ratio", r.ratio}});
  }
  return out;
}

Json to_json(const std::vector<FootprintRow>& rows) {
  Json out = Json::array();
  for (const FootprintRow& r : rows) {
    out.push_back(Json{{"context", r.context},
                       {"weights", r.shares.weights},
                       {"activation", r.shares.activation},
                       {"kv", r.shares.kv}});
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw Error("write to '" + path + "' failed");
}

}  // namespace elasim
