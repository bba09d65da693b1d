// Copyright 2026 The safemb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Run metrics: a header line followed by one JSON record per epoch, and
// an optional final abort record. Files are append-only; a truncated last
// line (crash mid-write) is skipped on load.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "safemb/json_util.hpp"

namespace safemb::harness {

inline constexpr int kMetricsSchemaVersion = 1;

struct RunHeader {
  int schema_version = kMetricsSchemaVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string arm;
  std::string start_time;  // ISO 8601, UTC
  Json config;

  Json to_json() const;
  static RunHeader from_json(const Json& j);
};

struct EpochRecord {
  int epoch = 0;
  long env_steps = 0;
  double objective = 0.0;         // mean evaluation return
  double constraint = 0.0;        // mean evaluation episode cost
  double accumulated_cost = 0.0;  // real cost summed over training episodes
  double epoch_cost = 0.0;        // real cost of this epoch's episodes
  int exceedances = 0;            // training episodes with cost > budget
  double eta = 0.0;
  long violations = 0;            // cumulative, model-evaluated
  double model_constraint = 0.0;  // worst-case imagined constraint at epoch end
  int accepted_updates = 0;
  int rejected_updates = 0;
  int recovery_steps = 0;
  double model_loss = 0.0;
  double wall_time = 0.0;  // seconds since run start

  Json to_json() const;
  static EpochRecord from_json(const Json& j);
  // Equality on every field except wall_time.
  bool same_values(const EpochRecord& other) const;
};

struct RunMetrics {
  RunHeader header;
  std::vector<EpochRecord> records;
  bool aborted = false;
  std::string abort_reason;

  double final_accumulated_cost() const;
  long total_violations() const;
};

std::string config_hash(const Json& config);
std::string utc_timestamp();

class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write_header(const RunHeader& header);
  void append(const EpochRecord& record);
  void write_abort(int epoch, const std::string& reason);

 private:
  void write_line(const Json& j);
  std::string path_;
  std::ofstream out_;
};

RunMetrics read_metrics(const std::string& path);

}  // namespace safemb::harness
