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

// Log-barrier stochastic gradient descent for
//
//   min f(x)  s.t.  g(x) < 0.
//
// Each step descends the barrier f - eta * log(-g) with a step size that
// is capped so that the first-order change of g stays within half of the
// remaining distance to the boundary, then guarded by backtracking on a
// fresh evaluation of g. Every accepted iterate is strictly feasible.
//
// For reward maximization pass f = -J and grad f = -grad J.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "safemb/json_util.hpp"

namespace safemb::lbsgd {

struct LbsgdConfig {
  double eta = 0.1;
  double eta_decay = 0.97;
  double eta_min = 1e-3;
  double learning_rate = 0.05;  // base step size
  double curvature_init = 1.0;  // M2 at start
  double curvature_ema = 0.9;
  int max_backtracks = 10;
  // A trial point is accepted only if g(x') < -margin. Zero for exact
  // constraint evaluations.
  double feasibility_margin = 0.0;

  Json to_json() const;
  static LbsgdConfig from_json(const Json& j);
  void validate() const;
};

struct LedgerEntry {
  long iterate = 0;
  double eta = 0.0;
  double step_size = 0.0;  // accepted gamma (0 when rejected)
  double objective = 0.0;  // f at the entry point
  double constraint = 0.0; // g at the iterate held after the step
  bool accepted = false;
  int backtracks = 0;

  Json to_json() const;
};

struct BarrierOptState {
  double eta = 0.1;
  double eta_decay = 0.97;
  double eta_min = 1e-3;
  double learning_rate = 0.05;
  double curvature = 1.0;  // running smoothness estimate M2
  double curvature_ema = 0.9;
  int max_backtracks = 10;
  double feasibility_margin = 0.0;
  long iterate = 0;
  std::vector<LedgerEntry> ledger;
  // Previous point and constraint gradient, for the curvature estimate.
  std::optional<Eigen::VectorXd> previous_params;
  std::optional<Eigen::VectorXd> previous_constraint_gradient;

  static BarrierOptState from_config(const LbsgdConfig& config);
};

// Largest step multiplier on the barrier gradient allowed by the
// adaptive rule:
//   alpha = -g / (2 (|<grad g, d>| + M2 * -g)),  d = -grad B / |grad B|,
//   gamma = min(learning_rate, alpha / |grad B|).
double adaptive_step_size(const Eigen::VectorXd& barrier_grad,
                          const Eigen::VectorXd& constraint_grad,
                          double constraint, double curvature,
                          double learning_rate);

using ConstraintFn = std::function<double(const Eigen::VectorXd&)>;

struct StepOutcome {
  Eigen::VectorXd params;
  double constraint = 0.0;  // g at `params`
  double step_size = 0.0;
  int backtracks = 0;
  bool accepted = false;
};

// One barrier step from `params` where g(params) = constraint < 0.
// `evaluate_constraint` re-evaluates g at trial points. Throws
// InfeasibleIterate when constraint >= 0 on entry.
StepOutcome lbsgd_step(const Eigen::VectorXd& params,
                       const Eigen::VectorXd& objective_grad,
                       const Eigen::VectorXd& constraint_grad,
                       double objective, double constraint,
                       BarrierOptState& state,
                       const ConstraintFn& evaluate_constraint);

// eta <- max(eta_min, eta * eta_decay). Call once per epoch.
void decay_eta(BarrierOptState& state);

// Line-delimited JSON, one record per ledger entry.
void write_ledger(const std::vector<LedgerEntry>& ledger,
                  const std::string& path);

}  // namespace safemb::lbsgd
