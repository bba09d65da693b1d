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

#include "safemb/lbsgd/lagrangian.hpp"

#include <algorithm>

#include "safemb/errors.hpp"

namespace safemb::lbsgd {

using Eigen::VectorXd;

Json LagrangianConfig::to_json() const {
  return Json{{"lambda_init", lambda_init}, {"mu_init", mu_init},
              {"lambda_lr", lambda_lr},     {"growth", growth},
              {"mu_max", mu_max},           {"patience", patience},
              {"learning_rate", learning_rate}};
}

LagrangianConfig LagrangianConfig::from_json(const Json& j) {
  require_keys(j,
               {"lambda_init", "mu_init", "lambda_lr", "growth", "mu_max",
                "patience", "learning_rate"},
               "lagrangian");
  LagrangianConfig c;
  read_optional(j, "lambda_init", c.lambda_init, "lagrangian");
  read_optional(j, "mu_init", c.mu_init, "lagrangian");
  read_optional(j, "lambda_lr", c.lambda_lr, "lagrangian");
  read_optional(j, "growth", c.growth, "lagrangian");
  read_optional(j, "mu_max", c.mu_max, "lagrangian");
  read_optional(j, "patience", c.patience, "lagrangian");
  read_optional(j, "learning_rate", c.learning_rate, "lagrangian");
  c.validate();
  return c;
}

void LagrangianConfig::validate() const {
  if (!(lambda_init >= 0.0)) throw ConfigError("lagrangian: lambda_init < 0");
  if (!(mu_init > 0.0) || !(mu_max >= mu_init)) {
    throw ConfigError("lagrangian: need 0 < mu_init <= mu_max");
  }
  if (!(lambda_lr > 0.0) || !(learning_rate > 0.0)) {
    throw ConfigError("lagrangian: learning rates must be > 0");
  }
  if (!(growth >= 1.0)) throw ConfigError("lagrangian: growth < 1");
  if (patience < 1) throw ConfigError("lagrangian: patience < 1");
}

LagrangianOptState LagrangianOptState::from_config(const LagrangianConfig& c) {
  c.validate();
  LagrangianOptState s;
  s.lambda = c.lambda_init;
  s.mu = c.mu_init;
  s.lambda_lr = c.lambda_lr;
  s.growth = c.growth;
  s.mu_max = c.mu_max;
  s.patience = c.patience;
  s.learning_rate = c.learning_rate;
  return s;
}

VectorXd lagrangian_gradient(const VectorXd& objective_grad,
                             const VectorXd& constraint_grad,
                             double constraint,
                             const LagrangianOptState& state) {
  if (objective_grad.size() != constraint_grad.size()) {
    throw ShapeError("lagrangian: gradient sizes differ");
  }
  const double weight = state.lambda + state.mu * std::max(0.0, constraint);
  return objective_grad + weight * constraint_grad;
}

VectorXd lagrangian_step(const VectorXd& params, const VectorXd& objective_grad,
                         const VectorXd& constraint_grad, double constraint,
                         LagrangianOptState& state) {
  if (params.size() != objective_grad.size()) {
    throw ShapeError("lagrangian: parameter and gradient sizes differ");
  }
  const VectorXd next =
      params - state.learning_rate * lagrangian_gradient(
                                         objective_grad, constraint_grad,
                                         constraint, state);
  state.lambda = std::max(0.0, state.lambda + state.lambda_lr * constraint);
  if (constraint > 0.0) {
    if (++state.violation_streak >= state.patience) {
      state.mu = std::min(state.mu_max, state.mu * state.growth);
      state.violation_streak = 0;
    }
  } else {
    state.violation_streak = 0;
  }
  ++state.iterate;
  return next;
}

}  // namespace safemb::lbsgd
