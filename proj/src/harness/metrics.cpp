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

#include "safemb/harness/metrics.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

namespace safemb::harness {

Json RunHeader::to_json() const {
  return Json{{"type", "header"},         {"schema_version", schema_version},
              {"config_hash", config_hash}, {"seed", seed},
              {"arm", arm},                 {"start_time", start_time},
              {"config", config}};
}

RunHeader RunHeader::from_json(const Json& j) {
  RunHeader h;
  h.schema_version = j.at("schema_version").get<int>();
  if (h.schema_version != kMetricsSchemaVersion) {
    throw ConfigError("metrics: unsupported schema version " +
                      std::to_string(h.schema_version));
  }
  h.config_hash = j.at("config_hash").get<std::string>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.arm = j.at("arm").get<std::string>();
  h.start_time = j.at("start_time").get<std::string>();
  h.config = j.at("config");
  return h;
}

Json EpochRecord::to_json() const {
  return Json{{"type", "epoch"},
              {"epoch", epoch},
              {"env_steps", env_steps},
              {"J_hat", objective},
              {"Jc_hat", constraint},
              {"accumulated_cost", accumulated_cost},
              {"epoch_cost", epoch_cost},
              {"exceedances", exceedances},
              {"eta", eta},
              {"violations", violations},
              {"model_constraint", model_constraint},
              {"accepted_updates", accepted_updates},
              {"rejected_updates", rejected_updates},
              {"recovery_steps", recovery_steps},
              {"model_loss", model_loss},
              {"wall_time", wall_time}};
}

EpochRecord EpochRecord::from_json(const Json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.env_steps = j.at("env_steps").get<long>();
  r.objective = j.at("J_hat").get<double>();
  r.constraint = j.at("Jc_hat").get<double>();
  r.accumulated_cost = j.at("accumulated_cost").get<double>();
  r.epoch_cost = j.at("epoch_cost").get<double>();
  r.exceedances = j.at("exceedances").get<int>();
  r.eta = j.at("eta").get<double>();
  r.violations = j.at("violations").get<long>();
  r.model_constraint = j.at("model_constraint").get<double>();
  r.accepted_updates = j.at("accepted_updates").get<int>();
  r.rejected_updates = j.at("rejected_updates").get<int>();
  r.recovery_steps = j.at("recovery_steps").get<int>();
  r.model_loss = j.at("model_loss").get<double>();
  r.wall_time = j.at("wall_time").get<double>();
  return r;
}

bool EpochRecord::same_values(const EpochRecord& o) const {
  EpochRecord a = *this;
  a.wall_time = o.wall_time;
  return a.to_json() == o.to_json();
}

double RunMetrics::final_accumulated_cost() const {
  return records.empty() ? 0.0 : records.back().accumulated_cost;
}

long RunMetrics::total_violations() const {
  return records.empty() ? 0 : records.back().violations;
}

std::string config_hash(const Json& config) {
  return fnv1a_hex(config.dump());
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path)
    : path_(path), out_(path, std::ios::out | std::ios::app) {
  if (!out_) throw ConfigError("cannot open metrics file '" + path + "'");
}

void MetricsWriter::write_line(const Json& j) {
  out_ << j.dump() << '\n';
  out_.flush();
  if (!out_) throw ConfigError("write failed on '" + path_ + "'");
}

void MetricsWriter::write_header(const RunHeader& header) {
  write_line(header.to_json());
}

void MetricsWriter::append(const EpochRecord& record) {
  write_line(record.to_json());
}

void MetricsWriter::write_abort(int epoch, const std::string& reason) {
  write_line(Json{{"type", "abort"}, {"epoch", epoch}, {"reason", reason}});
}

RunMetrics read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read metrics file '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  // getline cannot tell whether the last line ended in '\n'; check the
  // file itself.
  bool last_complete = true;
  {
    std::ifstream tail(path, std::ios::binary | std::ios::ate);
    const auto size = static_cast<long>(tail.tellg());
    if (size > 0) {
      tail.seekg(size - 1);
      last_complete = tail.get() == '\n';
    }
  }

  RunMetrics run;
  bool have_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const bool is_last = i + 1 == lines.size();
    Json j;
    try {
      j = Json::parse(lines[i]);
    } catch (const Json::parse_error& e) {
      if (is_last && !last_complete) break;
      throw ConfigError(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    if (is_last && !last_complete) break;
    const std::string type = j.value("type", "");
    if (type == "header") {
      run.header = RunHeader::from_json(j);
      have_header = true;
    } else if (type == "epoch") {
      run.records.push_back(EpochRecord::from_json(j));
    } else if (type == "abort") {
      run.aborted = true;
      run.abort_reason = j.value("reason", "");
    } else {
      throw ConfigError(path + ":" + std::to_string(i + 1) +
                        ": unknown record type '" + type + "'");
    }
  }
  if (!have_header) throw ConfigError(path + ": missing header record");
  return run;
}

}  // namespace safemb::harness
