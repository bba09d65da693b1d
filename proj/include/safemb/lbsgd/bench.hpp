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

// Optimizer-only runs on the analytic problems, with an exact count of
// accepted iterates that violate the true constraint.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "safemb/json_util.hpp"
#include "safemb/lbsgd/lagrangian.hpp"
#include "safemb/lbsgd/lbsgd.hpp"

namespace safemb::lbsgd {

enum class OptimizerKind { kLbsgd, kLagrangian };

OptimizerKind parse_optimizer(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

struct BenchConfig {
  std::string problem = "ball-projection";
  OptimizerKind optimizer = OptimizerKind::kLbsgd;
  // Per-sample noise std; unset means the problem's default.
  std::optional<double> noise;
  // Samples averaged per evaluation.
  int batch = 400;
  // Trial points must clear the boundary by this many standard errors of
  // the constraint estimate.
  double margin_sigmas = 4.0;
  int outer_iterations = 200;  // eta decays once per outer iteration
  int inner_iterations = 25;
  LbsgdConfig lbsgd;
  LagrangianConfig lagrangian;
  unsigned long long seed = 0;

  Json to_json() const;
  static BenchConfig from_json(const Json& j);
};

struct BenchResult {
  std::string problem;
  std::string optimizer;
  Eigen::VectorXd solution;
  Eigen::VectorXd optimum;
  double error = 0.0;  // |solution - optimum|
  long accepted = 0;
  long rejected = 0;
  // Accepted iterates with true g(x) >= 0.
  long violations = 0;
  double max_true_constraint = 0.0;
  double noise = 0.0;
  std::vector<LedgerEntry> ledger;

  Json summary() const;
};

BenchResult run_bench(const BenchConfig& config);

}  // namespace safemb::lbsgd
