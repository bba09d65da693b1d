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

// Episode collection, evaluation and the training loop
//
//   collect -> fit ensemble -> pessimistic policy updates -> evaluate.
//
// Epochs are numbered from 1. The first epoch only collects data with the
// initial policy and fits the model.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "safemb/agent/config.hpp"
#include "safemb/agent/policy.hpp"
#include "safemb/agent/trajectory.hpp"
#include "safemb/ensemble/ensemble.hpp"
#include "safemb/envs/point_hazard.hpp"
#include "safemb/harness/metrics.hpp"
#include "safemb/lbsgd/lagrangian.hpp"
#include "safemb/lbsgd/lbsgd.hpp"

namespace safemb::agent {

// Independent generator for (seed, stream) pairs.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

// Runs one full episode. The reset seed and the action noise are drawn
// from `rng`.
Trajectory collect_episode(const Policy& policy,
                           const envs::PointHazardEnv& env,
                           std::mt19937_64& rng,
                           ActMode mode = ActMode::kStochastic);

struct EvalResult {
  double mean_return = 0.0;
  double mean_cost = 0.0;
  std::vector<double> returns;
  std::vector<double> costs;
};

// Mean-mode episodes; the policy is not modified.
EvalResult evaluate(const Policy& policy, const envs::PointHazardEnv& env,
                    int episodes, std::mt19937_64& rng);

envs::PointHazardEnv make_env(const TrainConfig& config);
Policy make_initial_policy(const TrainConfig& config,
                           const envs::PointHazardEnv& env);

struct TrainSink {
  std::function<void(const harness::RunHeader&)> on_header;
  std::function<void(const harness::EpochRecord&)> on_epoch;
  std::function<void(int epoch, const std::string& reason)> on_abort;
};

struct TrainOptions {
  // Checkpoints are written here when set.
  std::optional<std::string> checkpoint_dir;
};

struct TrainResult {
  harness::RunMetrics metrics;
  Policy policy;
  std::optional<ensemble::EnsembleModel> model;
  // Barrier optimizer ledger over the whole run (lbsgd arm only).
  std::vector<lbsgd::LedgerEntry> ledger;
  std::size_t buffer_size = 0;
  std::vector<std::size_t> buffer_sizes;  // after each epoch
  // Real cost of every training episode, in collection order.
  std::vector<double> episode_costs;
};

// A model refresh that makes the current policy infeasible is either
// repaired by descent on the worst-case constraint or, with
// on_infeasible = abort, ends the run with an abort record. Model-fit
// failures also write an abort record and are rethrown.
TrainResult train(const TrainConfig& config, const TrainSink& sink = {},
                  const TrainOptions& options = {});

struct Checkpoint {
  int epoch = 0;
  Policy policy;
  ensemble::EnsembleModel model;
  double eta = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double objective = 0.0;
  double constraint = 0.0;

  Json to_json() const;
  static Checkpoint from_json(const Json& j);
};

Checkpoint load_agent_checkpoint(const std::string& path);
void save_agent_checkpoint(const Checkpoint& checkpoint,
                           const std::string& path);

}  // namespace safemb::agent
