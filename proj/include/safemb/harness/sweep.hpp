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

// Seeds x arms sweeps. Every run gets its own directory
//
//   <out>/<arm>/seed_<seed>/metrics.jsonl
//   <out>/<arm>/seed_<seed>/checkpoints/
//
// and the manifest (<out>/manifest.json) records the status of each run.
// A failing run is recorded and the sweep moves on.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "safemb/agent/config.hpp"
#include "safemb/harness/metrics.hpp"
#include "safemb/json_util.hpp"

namespace safemb::harness {

struct SweepSpec {
  agent::TrainConfig base;
  std::vector<std::uint64_t> seeds;
  std::vector<lbsgd::OptimizerKind> arms;
  std::string out_dir;

  void validate() const;
  Json to_json() const;
  // `base` is either an inline config object or a path to a config file,
  // resolved against `spec_dir`.
  static SweepSpec from_json(const Json& j, const std::string& spec_dir = "");
  static SweepSpec load(const std::string& path);
};

struct RunEntry {
  std::string arm;
  std::uint64_t seed = 0;
  std::string metrics_path;  // relative to the manifest directory
  std::string status;        // "ok" or "failed"
  std::string error;

  Json to_json() const;
  static RunEntry from_json(const Json& j);
};

struct Manifest {
  std::string dir;  // directory holding manifest.json; not serialized
  std::vector<RunEntry> runs;

  Json to_json() const;
  static Manifest from_json(const Json& j, const std::string& dir);
  static Manifest load(const std::string& path);
  void save() const;
};

// One training run writing metrics.jsonl and checkpoints/ under run_dir.
// Returns the metrics; exceptions other than the recorded abort propagate.
RunMetrics run_single(const agent::TrainConfig& config,
                      const std::string& run_dir);

std::string run_dir_name(const std::string& arm, std::uint64_t seed);

using SweepProgress = std::function<void(const RunEntry&)>;

Manifest run_sweep(const SweepSpec& spec, const SweepProgress& progress = {});

}  // namespace safemb::harness
