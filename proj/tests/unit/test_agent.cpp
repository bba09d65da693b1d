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
#include <random>

#include <doctest.h>

#include "fixtures.hpp"
#include "safemb/agent/agent.hpp"
#include "safemb/agent/config.hpp"
#include "safemb/agent/policy.hpp"
#include "safemb/errors.hpp"
#include "test_util.hpp"

using namespace safemb;
using namespace safemb::agent;
using Eigen::VectorXd;

namespace {

Policy make_policy(std::uint64_t seed, double log_std = -0.5) {
  std::mt19937_64 rng(seed);
  PolicyConfig c;
  c.hidden = 8;
  c.init_log_std = log_std;
  c.init_output_scale = 0.5;
  return Policy(4, 2, VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0),
                c, rng);
}

// Output layer zeroed: the pre-squash mean and log-std are the biases.
Policy constant_policy(double ux, double uy, double log_std) {
  Policy p = make_policy(1);
  p.network().weights().back().setZero();
  p.network().biases().back() << ux, uy, log_std, log_std;
  return p;
}

VectorXd random_state(std::mt19937_64& rng) {
  return test::random_array(4, 1, rng, -2.0, 2.0).matrix();
}

envs::PointHazardEnv band_env() {
  envs::PointHazardLayout layout;
  layout.goal = envs::Vec2(1.5, 1.5);
  for (int k = -5; k <= 5; ++k) {
    layout.hazards.push_back({envs::Vec2(0.0, 0.4 * k), 0.25});
  }
  envs::DynamicsParams d;
  d.noise = 0.0;
  return envs::PointHazardEnv(layout, d, 100, 5.0);
}

}  // namespace

TEST_CASE("at the log-std floor mean and stochastic actions differ by at most the noise bound") {
  // tanh is 1-Lipschitz, so |a_stoch - a_mean| <= half_range * exp(-5) * |eps|.
  Policy p = make_policy(3, kMinLogStd - 4.0);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 200; ++k) {
    const VectorXd s = random_state(rng);
    const VectorXd eps = test::random_array(2, 1, rng, -3, 3).matrix();
    const VectorXd a_mean = p.act(s, VectorXd::Zero(2));
    const VectorXd a_stoch = p.act(s, eps);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(a_stoch[i] - a_mean[i]) <=
            std::exp(kMinLogStd) * std::abs(eps[i]) + 1e-15);
    }
  }
}

TEST_CASE("a saturated pre-squash mean gives the action bounds exactly") {
  const Policy p = constant_policy(1e6, -1e6, kMinLogStd);
  std::mt19937_64 rng(1);
  const VectorXd a = p.act(VectorXd::Zero(4), ActMode::kMean, rng);
  CHECK(a[0] == 1.0);
  CHECK(a[1] == -1.0);
}

TEST_CASE("actions stay in bounds and are reproducible for a fixed seed") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k) {
    const Policy p = make_policy(rng(), 1.0);
    const VectorXd s = random_state(rng);
    const std::uint64_t seed = rng();
    std::mt19937_64 r1(seed), r2(seed);
    const VectorXd a1 = p.act(s, ActMode::kStochastic, r1);
    const VectorXd a2 = p.act(s, ActMode::kStochastic, r2);
    CHECK(a1 == a2);
    CHECK((a1.array() >= -1.0).all());
    CHECK((a1.array() <= 1.0).all());
  }
}

TEST_CASE("non-finite states are rejected") {
  const Policy p = make_policy(2);
  std::mt19937_64 rng(1);
  VectorXd s = VectorXd::Zero(4);
  s[2] = std::nan("");
  CHECK_THROWS_AS(p.act(s, ActMode::kMean, rng), DomainError);
  CHECK_THROWS_AS(p.act(VectorXd::Zero(3), ActMode::kMean, rng), DomainError);
}

TEST_CASE("policy JSON round-trip preserves actions") {
  const Policy p = make_policy(6);
  const Policy q = Policy::from_json(p.to_json());
  std::mt19937_64 rng(2);
  const VectorXd s = random_state(rng);
  CHECK(p.act(s, VectorXd::Ones(2)) == q.act(s, VectorXd::Ones(2)));
}

TEST_CASE("the zero policy on a noiseless env gives a stationary, cost-free trajectory") {
  TrainConfig c;
  c.dynamics.noise = 0.0;
  const envs::PointHazardEnv env = make_env(c);
  const Policy p = constant_policy(0.0, 0.0, kMinLogStd);
  std::mt19937_64 rng(12);
  for (int e = 0; e < 5; ++e) {
    const Trajectory t = collect_episode(p, env, rng, ActMode::kMean);
    CHECK(t.length() == c.horizon);
    CHECK(t.actions.isZero(0.0));
    for (int k = 1; k < t.length(); ++k) CHECK(t.states.row(k) == t.states.row(0));
    CHECK(t.total_cost() == 0.0);
  }
}

TEST_CASE("collect_episode is deterministic and fixed-length") {
  TrainConfig c;
  const envs::PointHazardEnv env = make_env(c);
  const Policy p = make_policy(4, 0.0);
  std::mt19937_64 r1(77), r2(77);
  const Trajectory a = collect_episode(p, env, r1);
  const Trajectory b = collect_episode(p, env, r2);
  CHECK(a.length() == c.horizon);
  CHECK(a.states == b.states);
  CHECK(a.actions == b.actions);
  CHECK(a.rewards == b.rewards);
  CHECK(a.costs == b.costs);
  CHECK(a.seed == b.seed);
  CHECK(a.total_cost() >= 0.0);
  CHECK(a.total_cost() <= c.horizon);
}

TEST_CASE("evaluate over one episode equals that episode's sums") {
  TrainConfig c;
  const envs::PointHazardEnv env = make_env(c);
  const Policy p = make_policy(5, 0.0);
  std::mt19937_64 r1(3), r2(3);
  const EvalResult ev = evaluate(p, env, 1, r1);
  const Trajectory t = collect_episode(p, env, r2, ActMode::kMean);
  CHECK(ev.mean_return == t.total_reward());
  CHECK(ev.mean_cost == t.total_cost());
  CHECK_THROWS_AS(evaluate(p, env, 0, r1), ConfigError);
}

TEST_CASE("evaluate leaves the policy untouched and a stationary policy costs nothing") {
  TrainConfig c;
  c.dynamics.noise = 0.0;
  const envs::PointHazardEnv env = make_env(c);
  const Policy p = constant_policy(0.0, 0.0, kMinLogStd);
  const VectorXd before = p.parameters();
  std::mt19937_64 rng(9);
  const EvalResult ev = evaluate(p, env, 10, rng);
  CHECK(p.parameters() == before);
  CHECK(ev.returns.size() == 10);
  CHECK(ev.mean_cost == 0.0);
}

TEST_CASE("driving straight through a hazard band costs the hand-counted steps") {
  const envs::PointHazardEnv env = band_env();
  const double a = 0.5;
  const Policy p = constant_policy(std::atanh(a), 0.0, kMinLogStd);
  // Pick a generator whose first reset spawns well left of the band.
  std::uint64_t s = 0;
  for (;; ++s) {
    std::mt19937_64 probe(s);
    if (env.reset(probe()).position.x() < -1.0) break;
  }
  std::mt19937_64 rng(s);
  const EvalResult ev = evaluate(p, env, 1, rng);

  std::mt19937_64 probe(s);
  const envs::EnvState start = env.reset(probe());
  double x = start.position.x(), v = 0.0;
  const double y = start.position.y();
  int inside = 0;
  for (int t = 0; t < 100; ++t) {
    v = 0.9 * v + 0.1 * a;
    x = std::min(2.0, x + 0.1 * v);
    for (int k = -5; k <= 5; ++k) {
      const double dy = y - 0.4 * k;
      if (x * x + dy * dy <= 0.25 * 0.25) {
        ++inside;
        break;
      }
    }
  }
  CHECK(inside > 0);
  CHECK(ev.mean_cost == inside);
}

TEST_CASE("streams differ across seeds and stream tags") {
  auto first = [](std::uint64_t seed, std::uint64_t stream) {
    return make_stream(seed, stream)();
  };
  CHECK(first(1, 2) == first(1, 2));
  CHECK(first(1, 2) != first(2, 2));
  CHECK(first(1, 2) != first(1, 3));
  CHECK(first(1ull << 32, 2) != first(0, 2));
}

TEST_CASE("train config: defaults, strict keys, validation and round-trip") {
  const TrainConfig d;
  CHECK(d.horizon == 200);
  CHECK(d.eval_episodes == 10);
  CHECK(d.episode_budget() == doctest::Approx(5.0));
  CHECK(d.imagination_offset() == doctest::Approx(0.375));
  CHECK(TrainConfig::from_json(d.to_json()).to_json() == d.to_json());
  CHECK_THROWS_AS(TrainConfig::from_json(Json{{"epoch", 3}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(Json{{"epochs", 0}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(Json{{"optimizer", "cpo"}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(Json{{"model", {{"member", 3}}}}),
                  ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(Json{{"epochs", "3"}}), ConfigError);
  const TrainConfig c = TrainConfig::from_json(
      Json{{"epochs", 7}, {"optimizer", "lagrangian"}, {"model", {{"members", 2}}}});
  CHECK(c.epochs == 7);
  CHECK(c.optimizer == lbsgd::OptimizerKind::kLagrangian);
  CHECK(c.model.members == 2);
  CHECK(c.model.hidden == d.model.hidden);
  CHECK_THROWS_AS(TrainConfig::load("/nonexistent/safemb.json"), ConfigError);
}

TEST_CASE("a tiny lbsgd run: records, replay growth and the feasibility ledger") {
  const TrainConfig c = test::tiny_train_config(1);
  int epochs_seen = 0;
  TrainSink sink;
  sink.on_epoch = [&](const harness::EpochRecord&) { ++epochs_seen; };
  const TrainResult r = train(c, sink);
  REQUIRE_FALSE(r.metrics.aborted);
  REQUIRE(r.metrics.records.size() == 3);
  CHECK(epochs_seen == 3);
  long prev_steps = 0;
  double prev_cost = 0.0;
  for (std::size_t k = 0; k < r.metrics.records.size(); ++k) {
    const harness::EpochRecord& e = r.metrics.records[k];
    CHECK(e.epoch == static_cast<int>(k) + 1);
    CHECK(std::isfinite(e.objective));
    CHECK(std::isfinite(e.constraint));
    CHECK(std::isfinite(e.model_constraint));
    CHECK(std::isfinite(e.model_loss));
    CHECK(e.env_steps > prev_steps);
    CHECK(e.accumulated_cost >= prev_cost);
    CHECK(e.violations == 0);
    CHECK(e.eta > 0.0);
    prev_steps = e.env_steps;
    prev_cost = e.accumulated_cost;
    CHECK(r.buffer_sizes[k] == (k + 1) * 2 * 100);
  }
  CHECK(r.metrics.records[0].accepted_updates == 0);
  for (const lbsgd::LedgerEntry& e : r.ledger) {
    if (e.accepted) CHECK(e.constraint < 0.0);
  }
  double total = 0.0;
  for (double ec : r.episode_costs) total += ec;
  CHECK(total == r.metrics.final_accumulated_cost());
}

TEST_CASE("identical config and seed give identical metric values, per arm") {
  for (auto arm : {lbsgd::OptimizerKind::kLbsgd, lbsgd::OptimizerKind::kLagrangian}) {
    TrainConfig c = test::tiny_train_config(4);
    c.optimizer = arm;
    const TrainResult a = train(c);
    const TrainResult b = train(c);
    REQUIRE(a.metrics.records.size() == b.metrics.records.size());
    for (std::size_t k = 0; k < a.metrics.records.size(); ++k) {
      CHECK(a.metrics.records[k].same_values(b.metrics.records[k]));
    }
    CHECK(a.policy.parameters() == b.policy.parameters());
    CHECK(a.metrics.header.config_hash == b.metrics.header.config_hash);
  }
}

TEST_CASE("an unsatisfiable budget aborts the lbsgd arm when asked to") {
  TrainConfig c = test::tiny_train_config(2);
  c.cost_budget = 0.0;  // predicted cost probabilities are > 0
  c.on_infeasible = InfeasiblePolicy::kAbort;
  int aborts = 0;
  TrainSink sink;
  sink.on_abort = [&](int epoch, const std::string& reason) {
    ++aborts;
    CHECK(epoch == 2);
    CHECK(reason.find("infeasible") != std::string::npos);
  };
  const TrainResult r = train(c, sink);
  CHECK(r.metrics.aborted);
  CHECK(aborts == 1);
  CHECK(r.metrics.records.size() == 1);

  c.on_infeasible = InfeasiblePolicy::kRecover;
  const TrainResult rec = train(c);
  CHECK_FALSE(rec.metrics.aborted);
  CHECK(rec.metrics.total_violations() == 0);
  for (std::size_t k = 1; k < rec.metrics.records.size(); ++k) {
    CHECK(rec.metrics.records[k].accepted_updates == 0);
    CHECK(rec.metrics.records[k].recovery_steps > 0);
  }
}

TEST_CASE("checkpoints: keep-last plus best, loadable") {
  test::TempDir dir("ckpt");
  TrainConfig c = test::tiny_train_config(3);
  c.keep_checkpoints = 2;
  TrainOptions opts;
  opts.checkpoint_dir = dir.str();
  const TrainResult r = train(c, {}, opts);
  CHECK_FALSE(std::filesystem::exists(dir.str("epoch_0001.json")));
  CHECK(std::filesystem::exists(dir.str("epoch_0002.json")));
  CHECK(std::filesystem::exists(dir.str("epoch_0003.json")));
  const Checkpoint ck = load_agent_checkpoint(dir.str("epoch_0003.json"));
  CHECK(ck.epoch == 3);
  CHECK(ck.policy.parameters() == r.policy.parameters());
  CHECK(ck.objective == r.metrics.records.back().objective);
}
