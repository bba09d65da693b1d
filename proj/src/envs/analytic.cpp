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

#include "safemb/envs/analytic.hpp"

#include <cmath>

#include "safemb/errors.hpp"

namespace safemb::envs {
namespace {

using Eigen::VectorXd;

AnalyticProblem ball_projection() {
  AnalyticProblem p;
  p.id = "ball-projection";
  const VectorXd target = (VectorXd(2) << 2.0, 0.0).finished();
  p.objective = [target](const VectorXd& x) {
    return (x - target).squaredNorm();
  };
  p.objective_gradient = [target](const VectorXd& x) -> VectorXd {
    return 2.0 * (x - target);
  };
  p.constraint = [](const VectorXd& x) { return x.squaredNorm() - 1.0; };
  p.constraint_gradient = [](const VectorXd& x) -> VectorXd {
    return 2.0 * x;
  };
  p.optimum = target / target.norm();
  p.start = VectorXd::Zero(2);
  return p;
}

AnalyticProblem linear_cut() {
  AnalyticProblem p;
  p.id = "linear-cut";
  const VectorXd target = VectorXd::Ones(2);
  p.objective = [target](const VectorXd& x) {
    return (x - target).squaredNorm();
  };
  p.objective_gradient = [target](const VectorXd& x) -> VectorXd {
    return 2.0 * (x - target);
  };
  p.constraint = [](const VectorXd& x) { return x.sum() - 1.0; };
  p.constraint_gradient = [](const VectorXd& x) -> VectorXd {
    return VectorXd::Ones(x.size());
  };
  p.optimum = VectorXd::Constant(2, 0.5);
  p.start = VectorXd::Zero(2);
  return p;
}

// min (x1 - 1)^2 + 4 (x2 - 1)^2  s.t.  |x|^2 <= 1.
// Stationarity gives x1 = 1 / (1 + l), x2 = 4 / (4 + l); the multiplier l
// is the root of |x(l)|^2 = 1, found by bisection.
AnalyticProblem noisy_quadratic() {
  AnalyticProblem p;
  p.id = "noisy-quadratic";
  p.objective = [](const VectorXd& x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + 4.0 * (x[1] - 1.0) * (x[1] - 1.0);
  };
  p.objective_gradient = [](const VectorXd& x) -> VectorXd {
    return (VectorXd(2) << 2.0 * (x[0] - 1.0), 8.0 * (x[1] - 1.0)).finished();
  };
  p.constraint = [](const VectorXd& x) { return x.squaredNorm() - 1.0; };
  p.constraint_gradient = [](const VectorXd& x) -> VectorXd {
    return 2.0 * x;
  };
  auto point = [](double l) {
    return (VectorXd(2) << 1.0 / (1.0 + l), 4.0 / (4.0 + l)).finished();
  };
  double lo = 0.0;
  double hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (point(mid).squaredNorm() > 1.0 ? lo : hi) = mid;
  }
  p.optimum = point(0.5 * (lo + hi));
  p.start = VectorXd::Zero(2);
  p.default_noise = 0.01;
  return p;
}

}  // namespace

std::vector<std::string> analytic_problem_ids() {
  return {"ball-projection", "linear-cut", "noisy-quadratic"};
}

AnalyticProblem analytic_problem(std::string_view id) {
  if (id == "ball-projection") return ball_projection();
  if (id == "linear-cut") return linear_cut();
  if (id == "noisy-quadratic") return noisy_quadratic();
  throw ConfigError("unknown analytic problem '" + std::string(id) + "'");
}

double EvaluationNoise::standard_error() const {
  if (batch < 1) throw ConfigError("evaluation noise batch must be >= 1");
  return scale / std::sqrt(static_cast<double>(batch));
}

ProblemEvaluation evaluate(const AnalyticProblem& problem, const VectorXd& x,
                           const EvaluationNoise& noise,
                           std::mt19937_64& rng) {
  ProblemEvaluation e;
  e.objective = problem.objective(x);
  e.constraint = problem.constraint(x);
  e.objective_gradient = problem.objective_gradient(x);
  e.constraint_gradient = problem.constraint_gradient(x);
  const double se = noise.standard_error();
  if (se > 0.0) {
    // A mean of `batch` Gaussian samples is Gaussian with std se.
    std::normal_distribution<double> n(0.0, se);
    e.objective += n(rng);
    e.constraint += n(rng);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      e.objective_gradient[i] += n(rng);
      e.constraint_gradient[i] += n(rng);
    }
  }
  return e;
}

}  // namespace safemb::envs
