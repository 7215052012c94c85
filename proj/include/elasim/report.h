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

#ifndef ELASIM_REPORT_H_
#define ELASIM_REPORT_H_

// Serialization of run results: one JSON document for aggregates, CSV for
// the time series, JSON lines for the per-iteration plan log.

#include <string>

#include "json.hpp"
#include "elasim/footprint.h"
#include "elasim/sim.h"

namespace elasim {

using Json = nlohmann::ordered_json;

Json to_json(const Report& r, bool include_requests = true);
Json to_json(const GoodputResult& g);

std::string series_csv(const Report& r);
std::string requests_csv(const Report& r);
std::string plans_jsonl(const Report& r);

// Normalized Elastic/Static table: total throughput, decode throughput and
// max decode batch.
struct CompareRow {
  std::string metric;
  double elastic = 0;
  double baseline = 0;
  double ratio = 0;
};
std::vector<CompareRow> compare_rows(const Report& elastic,
                                     const Report& baseline);
Json to_json(const std::vector<CompareRow>& rows);

struct FootprintRow {
  int64_t context = 0;
  CompositionShares shares;
};
Json to_json(const std::vector<FootprintRow>& rows);

// Writes `content` to `path`; throws Error on I/O failure.
void write_file(const std::string& path, const std::string& content);

}  // namespace elasim

#endif  // ELASIM_REPORT_H_
