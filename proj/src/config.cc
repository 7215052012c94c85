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

#include "elasim/config.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace elasim {

namespace {

std::string join_errors(const std::vector<std::string>& errs) {
  std::string out;
  for (const std::string& e : errs) {
    if (!out.empty()) out += "\n";
    out += e;
  }
  return out;
}

// Reads typed fields out of one JSON object, collecting errors under a
// dotted path prefix.
class Section {
 public:
  Section(const Json& obj, std::string path, std::vector<std::string>& errs)
      : obj_(obj), path_(std::move(path)), errs_(errs) {
    if (!obj_.is_object()) fail("", "must be an object");
  }

  bool ok() const { return obj_.is_object(); }
  bool has(const std::string& key) const {
    return ok() && obj_.contains(key);
  }
  const Json& at(const std::string& key) const { return obj_.at(key); }
  std::string path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  void fail(const std::string& key, const std::string& msg) {
    errs_.push_back((key.empty() ? path_ : path(key)) + ": " + msg);
  }

  void reject_unknown(std::initializer_list<const char*> allowed) {
    if (!ok()) return;
    std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj_.items()) {
      if (!names.count(k)) fail(k, "unknown key");
    }
  }

  void get(const std::string& key, int64_t& out, bool required = false) {
    if (!has(key)) {
      if (required) fail(key, "missing field");
      return;
    }
    const Json& v = obj_.at(key);
    if (v.is_number_integer()) {
      out = v.get<int64_t>();
    } else if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()) &&
               std::abs(v.get<double>()) < 9e18) {
      out = static_cast<int64_t>(v.get<double>());
    } else {
      fail(key, "expected an integer");
    }
  }
  void get(const std::string& key, uint64_t& out) {
    if (!has(key)) return;
    const Json& v = obj_.at(key);
    if (v.is_number_unsigned() ||
        (v.is_number_integer() && v.get<int64_t>() >= 0)) {
      out = v.get<uint64_t>();
    } else {
      fail(key, "expected a non-negative integer");
    }
  }
  void get(const std::string& key, int& out) {
    int64_t v = out;
    get(key, v);
    out = static_cast<int>(v);
  }
  void get(const std::string& key, double& out, bool required = false) {
    if (!has(key)) {
      if (required) fail(key, "missing field");
      return;
    }
    const Json& v = obj_.at(key);
    if (v.is_number()) {
      out = v.get<double>();
    } else {
      fail(key, "expected a number");
    }
  }
  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const Json& v = obj_.at(key);
    if (v.is_boolean()) {
      out = v.get<bool>();
    } else {
      fail(key, "expected true or false");
    }
  }
  void get(const std::string& key, std::string& out, bool required = false) {
    if (!has(key)) {
      if (required) fail(key, "missing field");
      return;
    }
    const Json& v = obj_.at(key);
    if (v.is_string()) {
      out = v.get<std::string>();
    } else {
      fail(key, "expected a string");
    }
  }

 private:
  const Json& obj_;
  std::string path_;
  std::vector<std::string>& errs_;
};

const Json kEmpty = Json::object();

void parse_model(Section s, ModelSpec& m) {
  s.reject_unknown({"preset", "name", "n_layers", "hidden", "n_heads",
                    "n_kv_heads", "head_dim", "n_params", "dtype_bytes",
                    "max_context", "act_coeff"});
  bool preset = false;
  if (s.has("preset")) {
    std::string name;
    s.get("preset", name);
    if (name == "llama3_8b_262k") {
      m = llama3_8b_262k();
      preset = true;
    } else if (!name.empty()) {
      s.fail("preset", "unknown model preset '" + name + "'");
    }
  }
  s.get("name", m.name);
  s.get("n_layers", m.n_layers, !preset);
  s.get("hidden", m.hidden, !preset);
  s.get("n_heads", m.n_heads, !preset);
  s.get("n_kv_heads", m.n_kv_heads, !preset);
  s.get("head_dim", m.head_dim, !preset);
  s.get("n_params", m.n_params, !preset);
  s.get("dtype_bytes", m.dtype_bytes);
  s.get("max_context", m.max_context, !preset);
  s.get("act_coeff", m.act_coeff);
}

void parse_device(Section s, DeviceSpec& d) {
  s.reject_unknown({"preset", "hbm_bytes", "mem_bw", "compute_rate",
                    "xfer_bw", "chunk_bytes", "map_cost", "unmap_cost",
                    "premap_budget_bytes"});
  bool preset = false;
  if (s.has("preset")) {
    std::string name;
    s.get("preset", name);
    if (name == "a100_80gb") {
      d = a100_80gb();
      preset = true;
    } else if (!name.empty()) {
      s.fail("preset", "unknown device preset '" + name + "'");
    }
  }
  s.get("hbm_bytes", d.hbm_bytes, !preset);
  s.get("mem_bw", d.mem_bw, !preset);
  s.get("compute_rate", d.compute_rate, !preset);
  s.get("xfer_bw", d.xfer_bw);
  s.get("chunk_bytes", d.chunk_bytes);
  s.get("map_cost", d.map_cost);
  s.get("unmap_cost", d.unmap_cost);
  s.get("premap_budget_bytes", d.premap_budget_bytes);
}

std::vector<TraceRecord> parse_records(const Json& arr, const std::string& path,
                                       std::vector<std::string>& errs) {
  std::vector<TraceRecord> out;
  if (!arr.is_array()) {
    errs.push_back(path + ": expected an array of records or a file path");
    return out;
  }
  for (size_t i = 0; i < arr.size(); ++i) {
    Section r(arr[i], path + "[" + std::to_string(i) + "]", errs);
    r.reject_unknown({"arrival_s", "input_tokens", "output_tokens"});
    TraceRecord rec;
    r.get("arrival_s", rec.arrival_s, true);
    r.get("input_tokens", rec.input_tokens, true);
    r.get("output_tokens", rec.output_tokens, true);
    out.push_back(rec);
  }
  return out;
}

void parse_workload(Section s, WorkloadSpec& w, const std::string& base_dir,
                    std::vector<std::string>& errs) {
  s.reject_unknown({"kind", "rate", "input_tokens", "output_tokens", "count",
                    "trace"});
  if (s.has("kind")) {
    std::string kind;
    s.get("kind", kind);
    try {
      w.kind = workload_kind_from_string(kind);
    } catch (const Error& e) {
      s.fail("kind", e.what());
    }
  }
  s.get("rate", w.rate);
  s.get("input_tokens", w.input_tokens);
  s.get("output_tokens", w.output_tokens);
  s.get("count", w.count);
  if (s.has("trace")) {
    const Json& t = s.at("trace");
    if (t.is_string()) {
      std::filesystem::path p(t.get<std::string>());
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      try {
        w.trace = ingest_trace_file(p.string()).workload.trace;
      } catch (const ConfigError& e) {
        for (const std::string& m : e.errors()) {
          errs.push_back(s.path("trace") + ": " + m);
        }
      } catch (const Error& e) {
        s.fail("trace", e.what());
      }
    } else {
      w.trace = parse_records(t, s.path("trace"), errs);
    }
    if (!s.has("kind")) w.kind = WorkloadKind::kTrace;
  }
  if (w.kind == WorkloadKind::kTrace && !s.has("trace")) {
    s.fail("trace", "missing field");
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : Error(join_errors(errors)), errors_(std::move(errors)) {}

ExperimentConfig parse_config(const Json& doc, const std::string& base_dir) {
  std::vector<std::string> errs;
  ExperimentConfig out;
  SimConfig& c = out.sim;
  Section root(doc, "", errs);
  if (!root.ok()) throw ConfigError(errs);
  root.reject_unknown({"model", "device", "scheduler", "buffer", "workload",
                       "mode", "slo", "seed", "output", "audit_interval",
                       "max_iterations", "record_plans"});

  if (root.has("model")) {
    parse_model(Section(root.at("model"), "model", errs), c.model);
  } else {
    root.fail("model", "missing field");
  }
  if (root.has("device")) {
    parse_device(Section(root.at("device"), "device", errs), c.device);
  } else {
    root.fail("device", "missing field");
  }

  Section sched(root.has("scheduler") ? root.at("scheduler") : kEmpty,
                "scheduler", errs);
  sched.reject_unknown({"theta", "prefill_priority"});
  if (sched.has("theta")) {
    int64_t theta = 0;
    sched.get("theta", theta);
    c.theta = theta;
  }
  sched.get("prefill_priority", c.prefill_priority);

  Section buf(root.has("buffer") ? root.at("buffer") : kEmpty, "buffer", errs);
  buf.reject_unknown({"capacity_chunks", "alpha", "window", "threshold",
                      "policy"});
  buf.get("capacity_chunks", c.buffer.capacity_chunks);
  buf.get("alpha", c.buffer.alpha);
  buf.get("window", c.buffer.window);
  buf.get("threshold", c.buffer.threshold);
  if (buf.has("policy")) {
    std::string p;
    buf.get("policy", p);
    try {
      c.buffer.policy = buffer_policy_from_string(p);
    } catch (const Error& e) {
      buf.fail("policy", e.what());
    }
  }

  parse_workload(
      Section(root.has("workload") ? root.at("workload") : kEmpty, "workload",
              errs),
      c.workload, base_dir, errs);

  if (root.has("mode")) {
    std::string m;
    root.get("mode", m);
    try {
      c.mode = mode_from_string(m);
    } catch (const Error& e) {
      root.fail("mode", e.what());
    }
  }
  Section slo(root.has("slo") ? root.at("slo") : kEmpty, "slo", errs);
  slo.reject_unknown({"multiplier", "ttft", "tpot"});
  slo.get("multiplier", c.slo_multiplier);
  if (slo.has("ttft")) {
    double v = 0;
    slo.get("ttft", v);
    c.slo_ttft = v;
  }
  if (slo.has("tpot")) {
    double v = 0;
    slo.get("tpot", v);
    c.slo_tpot = v;
  }
  root.get("seed", c.workload.seed);
  root.get("output", out.output);
  root.get("audit_interval", c.audit_interval);
  root.get("max_iterations", c.max_iterations);
  root.get("record_plans", c.record_plans);

  if (errs.empty()) {
    errs = validate(c);
    if (errs.empty() && !c.theta) c.theta = resolved_theta(c);
  }
  if (!errs.empty()) throw ConfigError(errs);
  return out;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  return parse_config(doc, base_dir);
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError({"cannot open config '" + path + "'"});
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string dir =
      std::filesystem::path(path).parent_path().string();
  return parse_config_text(ss.str(), dir.empty() ? "." : dir);
}

Json to_json(const ExperimentConfig& e) {
  const SimConfig& c = e.sim;
  const ModelSpec& m = c.model;
  const DeviceSpec& d = c.device;
  Json j;
  j["model"] = Json{{"name", m.name},
                    {"n_layers", m.n_layers},
                    {"hidden", m.hidden},
                    {"n_heads", m.n_heads},
                    {"n_kv_heads", m.n_kv_heads},
                    {"head_dim", m.head_dim},
                    {"n_params", m.n_params},
                    {"dtype_bytes", m.dtype_bytes},
                    {"max_context", m.max_context},
                    {"act_coeff", m.act_coeff}};
  j["device"] = Json{{"hbm_bytes", d.hbm_bytes},
                     {"mem_bw", d.mem_bw},
                     {"compute_rate", d.compute_rate},
                     {"xfer_bw", d.xfer_bw},
                     {"chunk_bytes", d.chunk_bytes},
                     {"map_cost", d.map_cost},
                     {"unmap_cost", d.unmap_cost},
                     {"premap_budget_bytes", d.premap_budget_bytes}};
  j["scheduler"] = Json{{"theta", resolved_theta(c)},
                        {"prefill_priority", c.prefill_priority}};
  j["buffer"] = Json{{"capacity_chunks", c.buffer.capacity_chunks},
                     {"alpha", c.buffer.alpha},
                     {"window", c.buffer.window},
                     {"threshold", c.buffer.threshold},
                     {"policy", to_string(c.buffer.policy)}};
  const WorkloadSpec& w = c.workload;
  Json wj{{"kind", to_string(w.kind)},
          {"rate", w.rate},
          {"input_tokens", w.input_tokens},
          {"output_tokens", w.output_tokens},
          {"count", w.count}};
  if (w.kind == WorkloadKind::kTrace || !w.trace.empty()) {
    Json recs = Json::array();
    for (const TraceRecord& r : w.trace) {
      recs.push_back(Json{{"arrival_s", r.arrival_s},
                          {"input_tokens", r.input_tokens},
                          {"output_tokens", r.output_tokens}});
    }
    wj["trace"] = std::move(recs);
  }
  j["workload"] = std::move(wj);
  j["mode"] = to_string(c.mode);
  Json slo{{"multiplier", c.slo_multiplier}};
  if (c.slo_ttft) slo["ttft"] = *c.slo_ttft;
  if (c.slo_tpot) slo["tpot"] = *c.slo_tpot;
  j["slo"] = std::move(slo);
  j["seed"] = w.seed;
  if (!e.output.empty()) j["output"] = e.output;
  j["audit_interval"] = c.audit_interval;
  j["max_iterations"] = c.max_iterations;
  j["record_plans"] = c.record_plans;
  return j;
}

TraceIngest ingest_trace(std::istream& in) {
  TraceIngest out;
  out.workload.kind = WorkloadKind::kTrace;
  std::vector<std::string> errs;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      errs.push_back(where + ": malformed JSON record");
      continue;
    }
    if (!j.is_object()) {
      errs.push_back(where + ": record must be an object");
      continue;
    }
    TraceRecord r;
    bool good = true;
    auto need_int = [&](const char* key, int64_t& dst) {
      if (!j.contains(key) || !j[key].is_number_integer()) {
        errs.push_back(where + ": " + key + " missing or not an integer");
        good = false;
        return;
      }
      dst = j[key].get<int64_t>();
      if (dst < 1) {
        errs.push_back(where + ": " + key + " must be >= 1");
        good = false;
      }
    };
    if (!j.contains("arrival_s") || !j["arrival_s"].is_number()) {
      errs.push_back(where + ": arrival_s missing or not a number");
      good = false;
    } else {
      r.arrival_s = j["arrival_s"].get<double>();
      if (!(r.arrival_s >= 0)) {
        errs.push_back(where + ": arrival_s must be >= 0");
        good = false;
      }
    }
    need_int("input_tokens", r.input_tokens);
    need_int("output_tokens", r.output_tokens);
    if (good) out.workload.trace.push_back(r);
  }
  if (!errs.empty()) throw ConfigError(errs);
  if (out.workload.trace.empty()) throw ConfigError({"trace has no records"});
  auto& t = out.workload.trace;
  const auto by_arrival = [](const TraceRecord& a, const TraceRecord& b) {
    return a.arrival_s < b.arrival_s;
  };
  if (!std::is_sorted(t.begin(), t.end(), by_arrival)) {
    std::stable_sort(t.begin(), t.end(), by_arrival);
    out.warnings.push_back("trace arrivals were out of order; sorted " +
                           std::to_string(t.size()) + " records");
  }
  out.workload.count = static_cast<int64_t>(t.size());
  return out;
}

TraceIngest ingest_trace_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError({"cannot open trace '" + path + "'"});
  return ingest_trace(f);
}

}  // namespace elasim
