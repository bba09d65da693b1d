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

// Small constrained problems  min f(x)  s.t.  g(x) <= 0  with known
// solutions, used to exercise the optimizers without any learning in the
// loop.

#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace safemb::envs {

struct AnalyticProblem {
  std::string id;
  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> objective_gradient;
  std::function<double(const Eigen::VectorXd&)> constraint;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraint_gradient;
  Eigen::VectorXd optimum;
  Eigen::VectorXd start;  // strictly feasible
  // Per-sample evaluation noise used when the caller does not override it.
  double default_noise = 0.0;
};

// id in {"ball-projection", "linear-cut", "noisy-quadratic"}; anything else
// throws ConfigError.
AnalyticProblem analytic_problem(std::string_view id);
std::vector<std::string> analytic_problem_ids();

// Zero-mean Gaussian evaluation noise. Each evaluation averages `batch`
// independent samples of per-sample std `scale`.
struct EvaluationNoise {
  double scale = 0.0;
  int batch = 1;
  double standard_error() const;
};

struct ProblemEvaluation {
  double objective = 0.0;
  double constraint = 0.0;
  Eigen::VectorXd objective_gradient;
  Eigen::VectorXd constraint_gradient;
};

ProblemEvaluation evaluate(const AnalyticProblem& problem,
                           const Eigen::VectorXd& x,
                           const EvaluationNoise& noise, std::mt19937_64& rng);

}  // namespace safemb::envs
