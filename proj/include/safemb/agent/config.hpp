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

// Training configuration. Loaded from JSON; every field is optional and
// unknown fields are rejected.

#include <cstdint>
#include <optional>
#include <string>

#include "safemb/agent/policy.hpp"
#include "safemb/ensemble/ensemble.hpp"
#include "safemb/envs/point_hazard.hpp"
#include "safemb/json_util.hpp"
#include "safemb/lbsgd/bench.hpp"
#include "safemb/lbsgd/lagrangian.hpp"
#include "safemb/lbsgd/lbsgd.hpp"

namespace safemb::agent {

// What to do when a model refresh leaves the current policy with a
// worst-case imagined constraint >= 0 before any update of the epoch.
enum class InfeasiblePolicy { kRecover, kAbort };

struct TrainConfig {
  int epochs = 50;
  int episodes_per_epoch = 2;
  int horizon = 200;
  // Episode budget at the reference horizon; the budget applied at
  // `horizon` is cost_budget * horizon / budget_reference_horizon.
  double cost_budget = 25.0;
  int budget_reference_horizon = 1000;
  int imagination_horizon = 15;
  int imagination_batch = 64;
  // Imagination starts are drawn from the newest this-many episodes of the
  // buffer; 0 uses the whole buffer.
  int imagination_recent_episodes = 4;
  // Only start imagination from states whose recorded cost was zero.
  bool imagination_cost_free_starts = false;
  int policy_updates = 20;
  int eval_episodes = 10;
  lbsgd::OptimizerKind optimizer = lbsgd::OptimizerKind::kLbsgd;
  InfeasiblePolicy on_infeasible = InfeasiblePolicy::kRecover;
  int max_recovery_steps = 50;
  bool warm_start = true;
  int keep_checkpoints = 3;
  std::uint64_t seed = 0;

  // Layout file; when empty a layout is generated from layout_seed.
  std::string layout_path;
  std::uint64_t layout_seed = 7;
  envs::DefaultLayoutOptions layout_options;
  envs::DynamicsParams dynamics;

  ensemble::FitConfig model;
  PolicyConfig policy;
  lbsgd::LbsgdConfig lbsgd;
  lbsgd::LagrangianConfig lagrangian;

  double episode_budget() const;
  double imagination_offset() const;

  void validate() const;
  Json to_json() const;
  static TrainConfig from_json(const Json& j);
  static TrainConfig load(const std::string& path);
};

std::string infeasible_policy_name(InfeasiblePolicy p);
InfeasiblePolicy parse_infeasible_policy(const std::string& name);

}  // namespace safemb::agent
