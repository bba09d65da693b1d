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


#include <cmath>
#include <fstream>
#include <string>

#include <doctest.h>

#include "safemb/errors.hpp"
#include "safemb/lbsgd/barrier.hpp"
#include "safemb/lbsgd/bench.hpp"
#include "safemb/lbsgd/lagrangian.hpp"
#include "safemb/lbsgd/lbsgd.hpp"
#include "suites.hpp"
#include "test_util.hpp"

using namespace safemb;
using namespace safemb::lbsgd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

}  // namespace

TEST_CASE("barrier value and gradient on hand examples") {
  CHECK(barrier_value(1.0, -1.0, 0.1) == 1.0);
  CHECK(barrier_value(0.0, -1.0 / std::exp(1.0), 0.3) ==
        doctest::Approx(0.3).epsilon(1e-15));
  const VectorXd g = barrier_gradient(vec({1, 0}), vec({0, 1}), -0.5, 0.1);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == doctest::Approx(0.2).epsilon(1e-15));
  const VectorXd gJ = vec({0.3, -2.0, 7.0});
  CHECK(barrier_gradient(gJ, VectorXd::Zero(3), -0.2, 0.5) == gJ);
}

TEST_CASE("barrier quantities refuse infeasible points") {
  CHECK_THROWS_AS(barrier_value(0.0, 0.0, 0.1), InfeasibleIterate);
  CHECK_THROWS_AS(barrier_value(0.0, 0.3, 0.1), InfeasibleIterate);
  CHECK_THROWS_AS(barrier_gradient(vec({1}), vec({1}), 0.0, 0.1),
                  InfeasibleIterate);
  try {
    barrier_value(0.0, 0.25, 0.1);
  } catch (const InfeasibleIterate& e) {
    CHECK(e.constraint_value() == 0.25);
  }
}

TEST_CASE("barrier gradient matches central differences on 1000 fixtures") {
  const test::SuiteResult r = test::barrier_fd_suite(1000, 31);
  CAPTURE(r.worst);
  CHECK(r.cases == 1000);
  CHECK(r.failures == 0);
}

TEST_CASE("barrier gradient on the ball-projection problem") {
  const envs::AnalyticProblem p = envs::analytic_problem("ball-projection");
  const double eta = 0.05;
  auto B = [&](const VectorXd& x) {
    return barrier_value(p.objective(x), p.constraint(x), eta);
  };
  for (const VectorXd& x : {vec({0.1, 0.2}), vec({0.7, -0.3}), vec({-0.5, 0.5})}) {
    const VectorXd g = barrier_gradient(p.objective_gradient(x),
                                        p.constraint_gradient(x),
                                        p.constraint(x), eta);
    for (int i = 0; i < 2; ++i) {
      VectorXd a = x, b = x;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      CHECK(diff::relative_error(g[i], (B(a) - B(b)) / 2e-6, 1e-8) <= 1e-4);
    }
  }
}

TEST_CASE("far from the boundary the step is the base learning rate") {
  BarrierOptState s = BarrierOptState::from_config(LbsgdConfig{});
  const VectorXd x = vec({0.0, 0.0});
  const StepOutcome out =
      lbsgd_step(x, vec({1.0, -2.0}), VectorXd::Zero(2), 0.0, -10.0, s,
                 [](const VectorXd&) { return -10.0; });
  CHECK(out.accepted);
  CHECK(out.step_size == s.learning_rate);
  CHECK(out.params[0] == doctest::Approx(-0.05));
  CHECK(out.params[1] == doctest::Approx(0.1));
}

TEST_CASE("a step that would cross a linear boundary is shortened") {
  // g(x) = x0 - 1 at x0 = 0.99; descending f = -x0 pushes toward it. A small
  // eta keeps the barrier from reversing the direction.
  LbsgdConfig c;
  c.eta = 1e-3;
  BarrierOptState s = BarrierOptState::from_config(c);
  auto g = [](const VectorXd& x) { return x[0] - 1.0; };
  const VectorXd x = vec({0.99, 0.0});
  const VectorXd fg = vec({-1.0, 0.0});
  CHECK(g(x - s.learning_rate * fg) > 0.0);  // the plain step crosses
  const StepOutcome out = lbsgd_step(x, fg, vec({1.0, 0.0}), -0.99, g(x), s, g);
  CHECK(out.accepted);
  CHECK(out.step_size < s.learning_rate);
  CHECK(out.constraint < 0.0);
  CHECK(g(out.params) < 0.0);
  CHECK(out.params[0] > x[0]);
}

TEST_CASE("backtracking rejects a step it cannot make feasible") {
  LbsgdConfig c;
  c.max_backtracks = 3;
  BarrierOptState s = BarrierOptState::from_config(c);
  int calls = 0;
  const VectorXd x = vec({0.0});
  const StepOutcome out = lbsgd_step(x, vec({1.0}), vec({0.0}), 0.0, -1.0, s,
                                     [&](const VectorXd&) {
                                       ++calls;
                                       return 0.5;
                                     });
  CHECK_FALSE(out.accepted);
  CHECK(out.params == x);
  CHECK(out.constraint == -1.0);
  CHECK(calls == 4);
  REQUIRE(s.ledger.size() == 1);
  CHECK_FALSE(s.ledger[0].accepted);
  CHECK(s.ledger[0].step_size == 0.0);
}

TEST_CASE("entering a step at an infeasible point is an error") {
  BarrierOptState s = BarrierOptState::from_config(LbsgdConfig{});
  CHECK_THROWS_AS(lbsgd_step(vec({0}), vec({1}), vec({1}), 0.0, 0.0, s,
                             [](const VectorXd&) { return -1.0; }),
                  InfeasibleIterate);
  CHECK(s.ledger.empty());
}

TEST_CASE("step size shrinks toward the boundary") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const VectorXd gb = test::random_array(4, 1, rng, -3, 3).matrix();
    const VectorXd gc = test::random_array(4, 1, rng, -3, 3).matrix();
    const double m2 = std::uniform_real_distribution<double>(0, 5)(rng);
    CHECK(adaptive_step_size(gb, gc, -0.01, m2, 0.05) <=
          adaptive_step_size(gb, gc, -10.0, m2, 0.05));
  }
}

TEST_CASE("eta decay schedule") {
  BarrierOptState s = BarrierOptState::from_config(LbsgdConfig{});
  CHECK(s.eta == 0.1);
  decay_eta(s);
  CHECK(s.eta == doctest::Approx(0.097).epsilon(1e-14));
  s.eta = s.eta_min;
  decay_eta(s);
  CHECK(s.eta == s.eta_min);
  BarrierOptState t = BarrierOptState::from_config(LbsgdConfig{});
  double prev = t.eta;
  for (int e = 0; e < 200; ++e) {
    decay_eta(t);
    CHECK(t.eta <= prev);
    CHECK(t.eta > 0.0);
    prev = t.eta;
  }
  CHECK(t.eta == doctest::Approx(std::max(1e-3, 0.1 * std::pow(0.97, 200))));
}

TEST_CASE("lbsgd on ball-projection keeps every iterate feasible") {
  const envs::AnalyticProblem p = envs::analytic_problem("ball-projection");
  BarrierOptState s = BarrierOptState::from_config(LbsgdConfig{});
  VectorXd x = p.start;
  double c = p.constraint(x);
  for (int outer = 0; outer < 200; ++outer) {
    for (int inner = 0; inner < 25; ++inner) {
      const StepOutcome out =
          lbsgd_step(x, p.objective_gradient(x), p.constraint_gradient(x),
                     p.objective(x), c, s, p.constraint);
      REQUIRE(out.constraint < 0.0);
      x = out.params;
      c = out.constraint;
      REQUIRE(p.constraint(x) < 0.0);
    }
    decay_eta(s);
  }
  CHECK(s.eta == s.eta_min);
  CHECK((x - test::reference_optimum("ball-projection")).norm() <= 1e-2);
  for (const LedgerEntry& e : s.ledger) {
    CHECK(e.constraint < 0.0);
  }
}

TEST_CASE("bench runs are feasible and accurate on every problem and noise level") {
  for (const std::string& id : envs::analytic_problem_ids()) {
    for (double noise : {0.0, 0.01}) {
      CAPTURE(id);
      CAPTURE(noise);
      BenchConfig c;
      c.problem = id;
      c.noise = noise;
      c.seed = 3;
      const BenchResult r = run_bench(c);
      CHECK(r.accepted > 0);
      CHECK(r.violations == 0);
      CHECK(r.max_true_constraint < 0.0);
      CHECK((r.solution - test::reference_optimum(id)).norm() <= 1e-2);
      for (const LedgerEntry& e : r.ledger) {
        if (e.accepted) CHECK(e.constraint < 0.0);
      }
    }
  }
}

TEST_CASE("library optima agree with the reference oracles") {
  for (const std::string& id : envs::analytic_problem_ids()) {
    CAPTURE(id);
    const envs::AnalyticProblem p = envs::analytic_problem(id);
    // Golden-section search resolves the angle to about sqrt(machine eps).
    CHECK((p.optimum - test::reference_optimum(id)).norm() <= 1e-7);
    CHECK(p.constraint(p.start) < 0.0);
  }
}

TEST_CASE("lagrangian step with an inactive constraint is plain gradient descent") {
  LagrangianOptState s = LagrangianOptState::from_config(LagrangianConfig{});
  const VectorXd x = vec({1.0, 2.0});
  const VectorXd fg = vec({0.5, -1.0});
  const VectorXd next = lagrangian_step(x, fg, vec({3.0, 3.0}), -0.5, s);
  CHECK(next == x - s.learning_rate * fg);
  CHECK(s.lambda == 0.0);
}

TEST_CASE("lagrangian multiplier is projected onto lambda >= 0") {
  LagrangianConfig c;
  c.lambda_lr = 0.1;
  c.lambda_init = 0.05;
  LagrangianOptState s = LagrangianOptState::from_config(c);
  lagrangian_step(vec({0}), vec({0}), vec({0}), -1.0, s);
  CHECK(s.lambda == 0.0);
  lagrangian_step(vec({0}), vec({0}), vec({0}), 2.0, s);
  CHECK(s.lambda == doctest::Approx(0.2));
}

TEST_CASE("lagrangian penalty grows after persistent violation, up to mu_max") {
  LagrangianConfig c;
  c.patience = 3;
  LagrangianOptState s = LagrangianOptState::from_config(c);
  for (int k = 0; k < 2; ++k) lagrangian_step(vec({0}), vec({0}), vec({0}), 1.0, s);
  CHECK(s.mu == 1.0);
  lagrangian_step(vec({0}), vec({0}), vec({0}), 1.0, s);
  CHECK(s.mu == 1.5);
  for (int k = 0; k < 300; ++k) lagrangian_step(vec({0}), vec({0}), vec({0}), 1.0, s);
  CHECK(s.mu == c.mu_max);
}

TEST_CASE("lagrangian gradient of the augmented objective") {
  LagrangianOptState s = LagrangianOptState::from_config(LagrangianConfig{});
  s.lambda = 0.5;
  s.mu = 2.0;
  const VectorXd fg = vec({1.0, 0.0}), cg = vec({0.0, 1.0});
  // f + l g + (mu/2) max(0, g)^2 at g = 0.25: fg + (l + mu g) cg
  const VectorXd g = lagrangian_gradient(fg, cg, 0.25, s);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == doctest::Approx(1.0));
  CHECK(lagrangian_gradient(fg, cg, -0.25, s)[1] == doctest::Approx(0.5));
}

TEST_CASE("lagrangian converges on linear-cut, possibly through infeasible iterates") {
  BenchConfig c;
  c.problem = "linear-cut";
  c.optimizer = OptimizerKind::kLagrangian;
  c.noise = 0.0;
  const BenchResult r = run_bench(c);
  CHECK((r.solution - test::reference_optimum("linear-cut")).norm() <= 1e-2);
  MESSAGE("lagrangian infeasible iterates on linear-cut: " << r.violations);
}

TEST_CASE("ledger export is one JSON record per step") {
  test::TempDir dir("ledger");
  BenchConfig c;
  c.outer_iterations = 2;
  c.inner_iterations = 3;
  const BenchResult r = run_bench(c);
  write_ledger(r.ledger, dir.str("ledger.jsonl"));
  std::ifstream in(dir.str("ledger.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const Json j = Json::parse(line);
    for (const char* k : {"iterate", "eta", "gamma", "J", "J_c", "accepted", "backtracks"}) {
      CHECK(j.contains(k));
    }
    CHECK(j["iterate"].get<long>() == n);
    ++n;
  }
  CHECK(n == 6);
}

TEST_CASE("optimizer configs reject unknown and invalid fields") {
  CHECK_THROWS_AS(LbsgdConfig::from_json(Json{{"etaa", 0.1}}), ConfigError);
  CHECK_THROWS_AS(LbsgdConfig::from_json(Json{{"eta", -1.0}}), ConfigError);
  CHECK_THROWS_AS(LagrangianConfig::from_json(Json{{"mu", 1.0}}), ConfigError);
  CHECK_THROWS_AS(BenchConfig::from_json(Json{{"problem", "x"}, {"bogus", 1}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_optimizer("cpo"), ConfigError);
  const LbsgdConfig d = LbsgdConfig::from_json(Json::object());
  CHECK(d.eta == 0.1);
  CHECK(d.eta_decay == 0.97);
  CHECK(d.eta_min == 1e-3);
  CHECK(LbsgdConfig::from_json(d.to_json()).to_json() == d.to_json());
}
