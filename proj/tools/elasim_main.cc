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

// elasim: command-line front end for the elastic memory simulator.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "elasim/config.h"
#include "elasim/report.h"
#include "elasim/sim.h"

namespace {

using elasim::ExperimentConfig;
using elasim::Json;

struct CommonFlags {
  std::string config;
  std::string mode;
  std::optional<uint64_t> seed;
  std::string out;
  std::string trace;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")
      ->required();
  cmd->add_option("--mode", f.mode, "elastic|static");
  cmd->add_option("--seed", f.seed, "workload seed");
  cmd->add_option("--out", f.out, "output path");
  cmd->add_option("--trace", f.trace, "JSON-lines request trace");
}

ExperimentConfig load(const CommonFlags& f) {
  ExperimentConfig cfg = elasim::parse_config_file(f.config);
  if (!f.mode.empty()) cfg.sim.mode = elasim::mode_from_string(f.mode);
  if (f.seed) cfg.sim.workload.seed = *f.seed;
  if (!f.trace.empty()) {
    elasim::TraceIngest t = elasim::ingest_trace_file(f.trace);
    for (const std::string& w : t.warnings) {
      std::cerr << "warning: " << w << "\n";
    }
    cfg.sim.workload.kind = elasim::WorkloadKind::kTrace;
    cfg.sim.workload.trace = std::move(t.workload.trace);
  }
  const std::vector<std::string> errs = elasim::validate(cfg.sim);
  if (!errs.empty()) throw elasim::ConfigError(errs);
  return cfg;
}

std::string out_path(const CommonFlags& f, const ExperimentConfig& cfg,
                     const std::string& fallback) {
  if (!f.out.empty()) return f.out;
  if (!cfg.output.empty()) return cfg.output;
  return fallback;
}

// "report.json" -> "report" so sidecars land next to it.
std::string stem(const std::string& path) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash)) {
    return path;
  }
  return path.substr(0, dot);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) {
      throw elasim::Error("cannot parse '" + item + "' as a number");
    }
    out.push_back(v);
  }
  return out;
}

void write_json(const std::string& path, const Json& j) {
  elasim::write_file(path, j.dump(2) + "\n");
  std::cerr << "wrote " << path << "\n";
}

int cmd_simulate(const CommonFlags& f) {
  const ExperimentConfig cfg = load(f);
  const elasim::Report r = elasim::run(cfg.sim);
  const std::string path = out_path(f, cfg, "report.json");
  Json j = elasim::to_json(r);
  j["config"] = elasim::to_json(cfg);
  write_json(path, j);
  const std::string base = stem(path);
  elasim::write_file(base + ".series.csv", elasim::series_csv(r));
  elasim::write_file(base + ".requests.csv", elasim::requests_csv(r));
  if (cfg.sim.record_plans) {
    elasim::write_file(base + ".plans.jsonl", elasim::plans_jsonl(r));
  }
  return 0;
}

int cmd_sweep(const CommonFlags& f, const std::string& rates) {
  const ExperimentConfig cfg = load(f);
  const std::vector<double> grid = parse_list(rates);
  const elasim::GoodputResult g = elasim::goodput_search(cfg.sim, grid);
  Json j = elasim::to_json(g);
  j["mode"] = elasim::to_string(cfg.sim.mode);
  j["config"] = elasim::to_json(cfg);
  write_json(out_path(f, cfg, "sweep.json"), j);
  if (!g.attained) std::cerr << "note: no rate reached 90% attainment\n";
  return 0;
}

int cmd_footprint(const CommonFlags& f, const std::string& contexts,
                  int64_t concurrency) {
  const ExperimentConfig cfg = load(f);
  std::vector<elasim::FootprintRow> rows;
  for (double c : parse_list(contexts)) {
    const auto ctx = static_cast<int64_t>(c);
    rows.push_back(elasim::FootprintRow{
        ctx, elasim::composition_report(cfg.sim.model, cfg.sim.device, ctx,
                                        concurrency)});
  }
  Json j{{"model", cfg.sim.model.name},
         {"concurrency", concurrency},
         {"rows", elasim::to_json(rows)}};
  write_json(out_path(f, cfg, "footprint.json"), j);
  return 0;
}

int cmd_compare(const CommonFlags& f) {
  const ExperimentConfig cfg = load(f);
  // One SLO for both runs.
  const elasim::SimConfig base = elasim::with_resolved_slo(cfg.sim);
  elasim::SimConfig e = base;
  e.mode = elasim::Mode::kElastic;
  elasim::SimConfig s = base;
  s.mode = elasim::Mode::kStatic;
  const elasim::Report re = elasim::run(e);
  const elasim::Report rs = elasim::run(s);
  Json j{{"rows", elasim::to_json(elasim::compare_rows(re, rs))},
         {"elastic", elasim::to_json(re, false)},
         {"static", elasim::to_json(rs, false)},
         {"config", elasim::to_json(cfg)}};
  write_json(out_path(f, cfg, "compare.json"), j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic KV/activation memory simulator"};
  app.require_subcommand(1);

  CommonFlags sim_flags, sweep_flags, fp_flags, cmp_flags;
  std::string rates;
  std::string contexts = "2048,8192,32768,131072,200000";
  int64_t concurrency = 1;

  auto* sim = app.add_subcommand("simulate", "run one workload");
  add_common(sim, sim_flags);
  auto* sweep = app.add_subcommand("sweep-rate", "goodput over a rate grid");
  add_common(sweep, sweep_flags);
  sweep->add_option("--rates", rates, "ascending rates, e.g. 0.5,1,2")
      ->required();
  auto* fp = app.add_subcommand("footprint", "memory composition table");
  add_common(fp, fp_flags);
  fp->add_option("--contexts", contexts, "context lengths");
  fp->add_option("--concurrency", concurrency, "simultaneous prefills");
  auto* cmp = app.add_subcommand("compare", "Elastic vs Static ratios");
  add_common(cmp, cmp_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cerr, std::cerr);
  }

  try {
    if (*sim) return cmd_simulate(sim_flags);
    if (*sweep) return cmd_sweep(sweep_flags, rates);
    if (*fp) return cmd_footprint(fp_flags, contexts, concurrency);
    if (*cmp) return cmd_compare(cmp_flags);
  } catch (const elasim::ConfigError& e) {
    for (const std::string& m : e.errors()) std::cerr << "error: " << m << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
