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

// Augmented-Lagrangian baseline for min f(x) s.t. g(x) <= 0. Iterates may
// leave the feasible set; only the multiplier and penalty react.
//
// Same sign convention as lbsgd: pass f = -J for reward maximization.

#include <Eigen/Core>

#include "safemb/json_util.hpp"

namespace safemb::lbsgd {

struct LagrangianConfig {
  double lambda_init = 0.0;
  double mu_init = 1.0;
  double lambda_lr = 0.05;
  double growth = 1.5;
  double mu_max = 10.0;
  // Consecutive violating steps before mu grows.
  int patience = 10;
  double learning_rate = 0.05;

  Json to_json() const;
  static LagrangianConfig from_json(const Json& j);
  void validate() const;
};

struct LagrangianOptState {
  double lambda = 0.0;
  double mu = 1.0;
  double lambda_lr = 0.05;
  double growth = 1.5;
  double mu_max = 10.0;
  int patience = 10;
  double learning_rate = 0.05;
  int violation_streak = 0;
  long iterate = 0;

  static LagrangianOptState from_config(const LagrangianConfig& config);
};

// Gradient of f + lambda * g + (mu / 2) * max(0, g)^2.
Eigen::VectorXd lagrangian_gradient(const Eigen::VectorXd& objective_grad,
                                    const Eigen::VectorXd& constraint_grad,
                                    double constraint,
                                    const LagrangianOptState& state);

// One primal descent step followed by the dual update
//   lambda <- max(0, lambda + lambda_lr * g)
// and penalty growth once g > 0 has persisted for `patience` steps.
Eigen::VectorXd lagrangian_step(const Eigen::VectorXd& params,
                                const Eigen::VectorXd& objective_grad,
                                const Eigen::VectorXd& constraint_grad,
                                double constraint, LagrangianOptState& state);

}  // namespace safemb::lbsgd
