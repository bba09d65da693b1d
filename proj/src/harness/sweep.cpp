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


#include "safemb/harness/sweep.hpp"

#include <filesystem>
#include <set>

#include "safemb/agent/agent.hpp"
#include "safemb/errors.hpp"

namespace safemb::harness {

namespace fs = std::filesystem;

void SweepSpec::validate() const {
  base.validate();
  if (seeds.empty()) throw ConfigError("sweep: seed list is empty");
  std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) {
    throw ConfigError("sweep: seeds must be distinct");
  }
  if (arms.empty()) throw ConfigError("sweep: arm list is empty");
  std::set<lbsgd::OptimizerKind> arm_set(arms.begin(), arms.end());
  if (arm_set.size() != arms.size()) {
    throw ConfigError("sweep: arms must be distinct");
  }
  if (out_dir.empty()) throw ConfigError("sweep: output directory is empty");
}

Json SweepSpec::to_json() const {
  Json arm_names = Json::array();
  for (auto a : arms) arm_names.push_back(lbsgd::optimizer_name(a));
  return {{"base", base.to_json()},
          {"seeds", seeds},
          {"arms", arm_names},
          {"out_dir", out_dir}};
}

SweepSpec SweepSpec::from_json(const Json& j, const std::string& spec_dir) {
  require_keys(j, {"base", "seeds", "arms", "out_dir"}, "sweep");
  SweepSpec s;
  if (!j.contains("base")) throw ConfigError("sweep: missing base config");
  const Json& b = j.at("base");
  if (b.is_string()) {
    fs::path p = b.get<std::string>();
    if (p.is_relative() && !spec_dir.empty()) p = fs::path(spec_dir) / p;
    s.base = agent::TrainConfig::load(p.string());
  } else {
    s.base = agent::TrainConfig::from_json(b);
  }
  read_optional(j, "seeds", s.seeds, "sweep");
  std::vector<std::string> names = {"lbsgd", "lagrangian"};
  read_optional(j, "arms", names, "sweep");
  for (const auto& n : names) s.arms.push_back(lbsgd::parse_optimizer(n));
  s.out_dir = "runs";
  read_optional(j, "out_dir", s.out_dir, "sweep");
  s.validate();
  return s;
}

SweepSpec SweepSpec::load(const std::string& path) {
  const fs::path p(path);
  return from_json(read_json_file(path), p.parent_path().string());
}

Json RunEntry::to_json() const {
  Json j = {{"arm", arm},
            {"seed", seed},
            {"metrics", metrics_path},
            {"status", status}};
  if (!error.empty()) j["error"] = error;
  return j;
}

RunEntry RunEntry::from_json(const Json& j) {
  require_keys(j, {"arm", "seed", "metrics", "status", "error"}, "manifest run");
  RunEntry e;
  try {
    e.arm = j.at("arm").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.metrics_path = j.at("metrics").get<std::string>();
    e.status = j.at("status").get<std::string>();
  } catch (const Json::exception& ex) {
    throw ConfigError(std::string("manifest run: ") + ex.what());
  }
  read_optional(j, "error", e.error, "manifest run");
  return e;
}

Json Manifest::to_json() const {
  Json runs_json = Json::array();
  for (const auto& r : runs) runs_json.push_back(r.to_json());
  return {{"schema_version", kMetricsSchemaVersion}, {"runs", runs_json}};
}

Manifest Manifest::from_json(const Json& j, const std::string& dir) {
  require_keys(j, {"schema_version", "runs"}, "manifest");
  Manifest m;
  m.dir = dir;
  if (!j.contains("runs") || !j.at("runs").is_array()) {
    throw ConfigError("manifest: missing run list");
  }
  for (const auto& r : j.at("runs")) m.runs.push_back(RunEntry::from_json(r));
  return m;
}

Manifest Manifest::load(const std::string& path) {
  return from_json(read_json_file(path), fs::path(path).parent_path().string());
}

void Manifest::save() const {
  write_json_file((fs::path(dir) / "manifest.json").string(), to_json());
}

std::string run_dir_name(const std::string& arm, std::uint64_t seed) {
  return arm + "/seed_" + std::to_string(seed);
}

RunMetrics run_single(const agent::TrainConfig& config,
                      const std::string& run_dir) {
  fs::create_directories(run_dir);
  const std::string metrics_path = (fs::path(run_dir) / "metrics.jsonl").string();
  // Start from an empty stream so reruns overwrite rather than append.
  fs::remove(metrics_path);
  MetricsWriter writer(metrics_path);
  agent::TrainSink sink;
  sink.on_header = [&](const RunHeader& h) { writer.write_header(h); };
  sink.on_epoch = [&](const EpochRecord& r) { writer.append(r); };
  sink.on_abort = [&](int epoch, const std::string& reason) {
    writer.write_abort(epoch, reason);
  };
  agent::TrainOptions options;
  options.checkpoint_dir = (fs::path(run_dir) / "checkpoints").string();
  return agent::train(config, sink, options).metrics;
}

Manifest run_sweep(const SweepSpec& spec, const SweepProgress& progress) {
  spec.validate();
  fs::create_directories(spec.out_dir);
  Manifest manifest;
  manifest.dir = spec.out_dir;
  for (auto arm : spec.arms) {
    for (auto seed : spec.seeds) {
      agent::TrainConfig config = spec.base;
      config.optimizer = arm;
      config.seed = seed;
      RunEntry entry;
      entry.arm = lbsgd::optimizer_name(arm);
      entry.seed = seed;
      const std::string rel = run_dir_name(entry.arm, seed);
      entry.metrics_path = rel + "/metrics.jsonl";
      try {
        RunMetrics m = run_single(config, (fs::path(spec.out_dir) / rel).string());
        entry.status = m.aborted ? "failed" : "ok";
        entry.error = m.abort_reason;
      } catch (const std::exception& e) {
        entry.status = "failed";
        entry.error = e.what();
      }
      manifest.runs.push_back(entry);
      // Saved after every run so an interrupted sweep leaves a usable file.
      manifest.save();
      if (progress) progress(entry);
    }
  }
  return manifest;
}

}  // namespace safemb::harness
