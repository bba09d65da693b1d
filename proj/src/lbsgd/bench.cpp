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

#include "safemb/lbsgd/bench.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "safemb/envs/analytic.hpp"
#include "safemb/errors.hpp"

namespace safemb::lbsgd {

using Eigen::VectorXd;

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "lbsgd") return OptimizerKind::kLbsgd;
  if (name == "lagrangian") return OptimizerKind::kLagrangian;
  throw ConfigError("unknown optimizer '" + name +
                    "' (expected lbsgd or lagrangian)");
}

std::string optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kLbsgd ? "lbsgd" : "lagrangian";
}

Json BenchConfig::to_json() const {
  Json j{{"problem", problem},
         {"optimizer", optimizer_name(optimizer)},
         {"batch", batch},
         {"margin_sigmas", margin_sigmas},
         {"outer_iterations", outer_iterations},
         {"inner_iterations", inner_iterations},
         {"lbsgd", lbsgd.to_json()},
         {"lagrangian", lagrangian.to_json()},
         {"seed", seed}};
  if (noise) j["noise"] = *noise;
  return j;
}

BenchConfig BenchConfig::from_json(const Json& j) {
  require_keys(j,
               {"problem", "optimizer", "noise", "batch", "margin_sigmas",
                "outer_iterations", "inner_iterations", "lbsgd", "lagrangian",
                "seed"},
               "bench");
  BenchConfig c;
  read_optional(j, "problem", c.problem, "bench");
  std::string opt = optimizer_name(c.optimizer);
  read_optional(j, "optimizer", opt, "bench");
  c.optimizer = parse_optimizer(opt);
  if (j.contains("noise")) {
    double n = 0.0;
    read_optional(j, "noise", n, "bench");
    c.noise = n;
  }
  read_optional(j, "batch", c.batch, "bench");
  read_optional(j, "margin_sigmas", c.margin_sigmas, "bench");
  read_optional(j, "outer_iterations", c.outer_iterations, "bench");
  read_optional(j, "inner_iterations", c.inner_iterations, "bench");
  if (j.contains("lbsgd")) c.lbsgd = LbsgdConfig::from_json(j["lbsgd"]);
  if (j.contains("lagrangian")) {
    c.lagrangian = LagrangianConfig::from_json(j["lagrangian"]);
  }
  read_optional(j, "seed", c.seed, "bench");
  if (c.batch < 1 || c.outer_iterations < 1 || c.inner_iterations < 1) {
    throw ConfigError("bench: counts must be >= 1");
  }
  return c;
}

Json BenchResult::summary() const {
  return Json{{"problem", problem},
              {"optimizer", optimizer},
              {"noise", noise},
              {"solution", std::vector<double>(solution.data(),
                                               solution.data() + solution.size())},
              {"optimum", std::vector<double>(optimum.data(),
                                              optimum.data() + optimum.size())},
              {"error", error},
              {"accepted", accepted},
              {"rejected", rejected},
              {"violations", violations},
              {"max_true_constraint", max_true_constraint}};
}

BenchResult run_bench(const BenchConfig& config) {
  const envs::AnalyticProblem problem = envs::analytic_problem(config.problem);
  const envs::EvaluationNoise noise{config.noise.value_or(problem.default_noise),
                                    config.batch};
  std::mt19937_64 rng(config.seed);

  BenchResult result;
  result.problem = problem.id;
  result.optimizer = optimizer_name(config.optimizer);
  result.optimum = problem.optimum;
  result.noise = noise.scale;
  result.max_true_constraint = -std::numeric_limits<double>::infinity();

  VectorXd x = problem.start;
  auto record_true = [&](const VectorXd& p) {
    const double g = problem.constraint(p);
    result.max_true_constraint = std::max(result.max_true_constraint, g);
    if (g >= 0.0) ++result.violations;
  };

  if (config.optimizer == OptimizerKind::kLbsgd) {
    LbsgdConfig lc = config.lbsgd;
    lc.feasibility_margin =
        std::max(lc.feasibility_margin,
                 config.margin_sigmas * noise.standard_error());
    BarrierOptState state = BarrierOptState::from_config(lc);
    auto constraint_at = [&](const VectorXd& p) {
      return envs::evaluate(problem, p, noise, rng).constraint;
    };
    double constraint = constraint_at(x);
    if (!(constraint < -state.feasibility_margin)) {
      throw InfeasibleIterate(constraint);
    }
    for (int outer = 0; outer < config.outer_iterations; ++outer) {
      for (int inner = 0; inner < config.inner_iterations; ++inner) {
        const envs::ProblemEvaluation e = envs::evaluate(problem, x, noise, rng);
        const StepOutcome out =
            lbsgd_step(x, e.objective_gradient, e.constraint_gradient,
                       e.objective, constraint, state, constraint_at);
        if (out.accepted) {
          x = out.params;
          constraint = out.constraint;
          ++result.accepted;
          record_true(x);
        } else {
          ++result.rejected;
        }
      }
      decay_eta(state);
    }
    result.ledger = std::move(state.ledger);
  } else {
    LagrangianOptState state =
        LagrangianOptState::from_config(config.lagrangian);
    const long steps =
        static_cast<long>(config.outer_iterations) * config.inner_iterations;
    for (long k = 0; k < steps; ++k) {
      const envs::ProblemEvaluation e = envs::evaluate(problem, x, noise, rng);
      LedgerEntry entry{k, 0.0, state.learning_rate, e.objective,
                        e.constraint, true, 0};
      x = lagrangian_step(x, e.objective_gradient, e.constraint_gradient,
                          e.constraint, state);
      ++result.accepted;
      record_true(x);
      result.ledger.push_back(entry);
    }
  }

  result.solution = x;
  result.error = (x - problem.optimum).norm();
  return result;
}

}  // namespace safemb::lbsgd
