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

#include "safemb/agent/config.hpp"

#include <filesystem>

#include "safemb/errors.hpp"
#include "safemb/pessimism/imagination.hpp"

namespace safemb::agent {

namespace {

Json dynamics_to_json(const envs::DynamicsParams& d) {
  return Json{{"damping", d.damping},
              {"dt", d.dt},
              {"noise", d.noise},
              {"goal_bonus", d.goal_bonus},
              {"spawn_margin", d.spawn_margin}};
}

envs::DynamicsParams dynamics_from_json(const Json& j) {
  require_keys(j, {"damping", "dt", "noise", "goal_bonus", "spawn_margin"},
               "dynamics");
  envs::DynamicsParams d;
  read_optional(j, "damping", d.damping, "dynamics");
  read_optional(j, "dt", d.dt, "dynamics");
  read_optional(j, "noise", d.noise, "dynamics");
  read_optional(j, "goal_bonus", d.goal_bonus, "dynamics");
  read_optional(j, "spawn_margin", d.spawn_margin, "dynamics");
  return d;
}

Json layout_options_to_json(const envs::DefaultLayoutOptions& o) {
  return Json{{"hazard_count", o.hazard_count},
              {"hazard_radius", o.hazard_radius},
              {"arena_half_width", o.arena_half_width},
              {"goal_radius", o.goal_radius}};
}

envs::DefaultLayoutOptions layout_options_from_json(const Json& j) {
  require_keys(j,
               {"hazard_count", "hazard_radius", "arena_half_width",
                "goal_radius"},
               "layout_options");
  envs::DefaultLayoutOptions o;
  read_optional(j, "hazard_count", o.hazard_count, "layout_options");
  read_optional(j, "hazard_radius", o.hazard_radius, "layout_options");
  read_optional(j, "arena_half_width", o.arena_half_width, "layout_options");
  read_optional(j, "goal_radius", o.goal_radius, "layout_options");
  return o;
}

}  // namespace

std::string infeasible_policy_name(InfeasiblePolicy p) {
  return p == InfeasiblePolicy::kRecover ? "recover" : "abort";
}

InfeasiblePolicy parse_infeasible_policy(const std::string& name) {
  if (name == "recover") return InfeasiblePolicy::kRecover;
  if (name == "abort") return InfeasiblePolicy::kAbort;
  throw ConfigError("on_infeasible: expected recover or abort, got '" + name +
                    "'");
}

double TrainConfig::episode_budget() const {
  return cost_budget * static_cast<double>(horizon) /
         static_cast<double>(budget_reference_horizon);
}

double TrainConfig::imagination_offset() const {
  return pessimism::prorated_budget(episode_budget(), horizon,
                                    imagination_horizon);
}

void TrainConfig::validate() const {
  if (epochs < 1 || episodes_per_epoch < 1 || horizon < 1 ||
      imagination_horizon < 1 || imagination_batch < 1 ||
      policy_updates < 1 || eval_episodes < 1 ||
      budget_reference_horizon < 1 || keep_checkpoints < 1) {
    throw ConfigError("train: all counts must be >= 1");
  }
  if (imagination_recent_episodes < 0) {
    throw ConfigError("train: imagination_recent_episodes must be >= 0");
  }
  if (max_recovery_steps < 0) {
    throw ConfigError("train: max_recovery_steps must be >= 0");
  }
  if (!(cost_budget >= 0.0)) throw ConfigError("train: cost_budget < 0");
  model.validate();
  lbsgd.validate();
  lagrangian.validate();
}

Json TrainConfig::to_json() const {
  return Json{{"epochs", epochs},
              {"episodes_per_epoch", episodes_per_epoch},
              {"horizon", horizon},
              {"cost_budget", cost_budget},
              {"budget_reference_horizon", budget_reference_horizon},
              {"imagination_horizon", imagination_horizon},
              {"imagination_batch", imagination_batch},
              {"imagination_recent_episodes", imagination_recent_episodes},
              {"imagination_cost_free_starts", imagination_cost_free_starts},
              {"policy_updates", policy_updates},
              {"eval_episodes", eval_episodes},
              {"optimizer", lbsgd::optimizer_name(optimizer)},
              {"on_infeasible", infeasible_policy_name(on_infeasible)},
              {"max_recovery_steps", max_recovery_steps},
              {"warm_start", warm_start},
              {"keep_checkpoints", keep_checkpoints},
              {"seed", seed},
              {"layout_path", layout_path},
              {"layout_seed", layout_seed},
              {"layout_options", layout_options_to_json(layout_options)},
              {"dynamics", dynamics_to_json(dynamics)},
              {"model", model.to_json()},
              {"policy", policy.to_json()},
              {"lbsgd", lbsgd.to_json()},
              {"lagrangian", lagrangian.to_json()}};
}

TrainConfig TrainConfig::from_json(const Json& j) {
  require_keys(j,
               {"epochs", "episodes_per_epoch", "horizon", "cost_budget",
                "budget_reference_horizon", "imagination_horizon",
                "imagination_batch", "imagination_recent_episodes",
                "imagination_cost_free_starts", "policy_updates", "eval_episodes",
                "optimizer", "on_infeasible", "max_recovery_steps",
                "warm_start", "keep_checkpoints", "seed", "layout_path",
                "layout_seed", "layout_options", "dynamics", "model",
                "policy", "lbsgd", "lagrangian"},
               "train");
  TrainConfig c;
  const std::string w = "train";
  read_optional(j, "epochs", c.epochs, w);
  read_optional(j, "episodes_per_epoch", c.episodes_per_epoch, w);
  read_optional(j, "horizon", c.horizon, w);
  read_optional(j, "cost_budget", c.cost_budget, w);
  read_optional(j, "budget_reference_horizon", c.budget_reference_horizon, w);
  read_optional(j, "imagination_horizon", c.imagination_horizon, w);
  read_optional(j, "imagination_batch", c.imagination_batch, w);
  read_optional(j, "imagination_recent_episodes",
                c.imagination_recent_episodes, w);
  read_optional(j, "imagination_cost_free_starts",
                c.imagination_cost_free_starts, w);
  read_optional(j, "policy_updates", c.policy_updates, w);
  read_optional(j, "eval_episodes", c.eval_episodes, w);
  std::string opt = lbsgd::optimizer_name(c.optimizer);
  read_optional(j, "optimizer", opt, w);
  c.optimizer = lbsgd::parse_optimizer(opt);
  std::string inf = infeasible_policy_name(c.on_infeasible);
  read_optional(j, "on_infeasible", inf, w);
  c.on_infeasible = parse_infeasible_policy(inf);
  read_optional(j, "max_recovery_steps", c.max_recovery_steps, w);
  read_optional(j, "warm_start", c.warm_start, w);
  read_optional(j, "keep_checkpoints", c.keep_checkpoints, w);
  read_optional(j, "seed", c.seed, w);
  read_optional(j, "layout_path", c.layout_path, w);
  read_optional(j, "layout_seed", c.layout_seed, w);
  if (j.contains("layout_options")) {
    c.layout_options = layout_options_from_json(j["layout_options"]);
  }
  if (j.contains("dynamics")) c.dynamics = dynamics_from_json(j["dynamics"]);
  if (j.contains("model")) c.model = ensemble::FitConfig::from_json(j["model"]);
  if (j.contains("policy")) c.policy = PolicyConfig::from_json(j["policy"]);
  if (j.contains("lbsgd")) c.lbsgd = lbsgd::LbsgdConfig::from_json(j["lbsgd"]);
  if (j.contains("lagrangian")) {
    c.lagrangian = lbsgd::LagrangianConfig::from_json(j["lagrangian"]);
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  TrainConfig c = from_json(read_json_file(path));
  // Relative layout paths are resolved against the config file.
  if (!c.layout_path.empty() &&
      std::filesystem::path(c.layout_path).is_relative()) {
    c.layout_path =
        (std::filesystem::path(path).parent_path() / c.layout_path).string();
  }
  return c;
}

}  // namespace safemb::agent
