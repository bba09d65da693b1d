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


#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "fixtures.hpp"
#include "safemb/diffcore/grad_check.hpp"
#include "safemb/ensemble/ensemble.hpp"
#include "safemb/ensemble/replay_buffer.hpp"
#include "safemb/errors.hpp"
#include "test_util.hpp"

using namespace safemb;
using namespace safemb::ensemble;
using diff::Array;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd system_a() {
  MatrixXd A(2, 2);
  A << 0.95, 0.1, -0.1, 0.95;
  return A;
}

MatrixXd system_b() {
  MatrixXd B(2, 2);
  B << 0.1, 0.0, 0.05, 0.1;
  return B;
}

// Fitted once and shared: 5k noiseless linear-system transitions.
const FitResult& linear_fit() {
  static const FitResult result = [] {
    std::mt19937_64 rng(1);
    const ReplayBuffer buffer =
        test::linear_system_buffer(system_a(), system_b(), 100, 50, rng);
    FitConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 3e-3;
    cfg.seed = 5;
    return fit(buffer, cfg);
  }();
  return result;
}

agent::Trajectory tiny_episode(int length, double offset) {
  agent::Trajectory t;
  t.states.resize(length, 2);
  t.actions.resize(length, 1);
  t.rewards.resize(length);
  t.costs.resize(length);
  for (int k = 0; k < length; ++k) {
    t.states.row(k) << offset + k, -k;
    t.actions(k, 0) = 0.5 * k;
    t.rewards[k] = k;
    t.costs[k] = k % 2;
  }
  t.terminal_state = VectorXd::Constant(2, offset + length);
  return t;
}

}  // namespace

TEST_CASE("replay buffer keeps episodes contiguous and evicts whole episodes") {
  ReplayBuffer b(2, 1, 25);
  b.append(tiny_episode(10, 0));
  b.append(tiny_episode(10, 100));
  CHECK(b.size() == 20);
  CHECK(b.episodes()[1] == std::make_pair(std::size_t(10), std::size_t(20)));
  CHECK(b.state(12)[0] == 102);
  CHECK(b.next_state(9)[0] == 10);   // terminal state of the first episode
  CHECK(b.next_state(13)[0] == 104);
  b.append(tiny_episode(10, 200));
  CHECK(b.size() == 20);
  CHECK(b.episode_count() == 2);
  CHECK(b.state(0)[0] == 100);
  CHECK(b.episodes()[0].first == 0);
  const TransitionBatch all = b.all();
  CHECK(all.states.rows() == 20);
  CHECK(all.next_states(19, 0) == 210);
}

TEST_CASE("fit on a noiseless linear system predicts A s + B a") {
  const FitResult& r = linear_fit();
  const EnsembleModel& model = r.model;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  double se_mean = 0.0;
  double worst_member = 0.0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    VectorXd s(2), a(2);
    s << u(rng), u(rng);
    a << u(rng), u(rng);
    const VectorXd truth = system_a() * s + system_b() * a;
    VectorXd mean = VectorXd::Zero(2);
    for (std::size_t k = 0; k < model.size(); ++k) {
      const Prediction p = model.predict(k, s, a);
      mean += p.mean / static_cast<double>(model.size());
      worst_member = std::max(worst_member, (p.mean - truth).cwiseAbs().maxCoeff());
    }
    se_mean += (mean - truth).squaredNorm() / 2.0;
  }
  const double rmse = std::sqrt(se_mean / n);
  CAPTURE(rmse);
  CAPTURE(worst_member);
  CHECK(rmse <= 1e-2);
  CHECK(worst_member <= 3e-2);
}

TEST_CASE("training loss decreases for every member") {
  const FitReport& rep = linear_fit().report;
  for (const auto& curve : rep.loss) CHECK(curve.back() <= curve.front());
  CHECK(rep.final_epoch_loss() <= rep.first_epoch_loss());
}

TEST_CASE("members disagree more away from the training distribution") {
  const EnsembleModel& model = linear_fit().model;
  std::mt19937_64 rng(8);
  auto disagreement = [&](double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> d;
    for (int i = 0; i < 200; ++i) {
      VectorXd s(2), a(2);
      s << u(rng), u(rng);
      a << std::uniform_real_distribution<double>(-1, 1)(rng),
          std::uniform_real_distribution<double>(-1, 1)(rng);
      VectorXd mean = VectorXd::Zero(2);
      std::vector<VectorXd> mus;
      for (std::size_t k = 0; k < model.size(); ++k) {
        mus.push_back(model.predict(k, s, a).mean);
        mean += mus.back() / static_cast<double>(model.size());
      }
      double var = 0.0;
      for (const auto& mu : mus) var += (mu - mean).squaredNorm();
      d.push_back(var / static_cast<double>(model.size()));
    }
    std::sort(d.begin(), d.end());
    return d[d.size() / 2];
  };
  const double inside = disagreement(-0.9, 0.9);
  const double outside = disagreement(3.0, 5.0);
  CAPTURE(inside);
  CAPTURE(outside);
  CHECK(outside / inside > 1.0);
}

TEST_CASE("a cost-free buffer yields small cost probabilities") {
  std::mt19937_64 rng(3);
  const ReplayBuffer buffer =
      test::linear_system_buffer(system_a(), system_b(), 20, 50, rng, 0.0);
  FitConfig cfg;
  cfg.members = 2;
  cfg.epochs = 60;
  const EnsembleModel model = fit(buffer, cfg).model;
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    VectorXd s(2), a(2);
    s << u(rng), u(rng);
    a << u(rng), u(rng);
    for (std::size_t k = 0; k < model.size(); ++k) {
      worst = std::max(worst, model.predict(k, s, a).cost_prob);
    }
  }
  CHECK(worst <= 0.05);
}

TEST_CASE("single-member ensembles fit and predict") {
  std::mt19937_64 rng(4);
  const ReplayBuffer buffer =
      test::linear_system_buffer(system_a(), system_b(), 5, 50, rng);
  FitConfig cfg;
  cfg.members = 1;
  cfg.epochs = 2;
  const EnsembleModel model = fit(buffer, cfg).model;
  CHECK(model.size() == 1);
  CHECK(model.predict(0, VectorXd::Zero(2), VectorXd::Zero(2)).mean.allFinite());
}

TEST_CASE("fit rejects too little data") {
  std::mt19937_64 rng(4);
  const ReplayBuffer buffer =
      test::linear_system_buffer(system_a(), system_b(), 1, 50, rng);
  FitConfig cfg;
  CHECK_THROWS_AS(fit(buffer, cfg), TrainingError);
}

TEST_CASE("predict is deterministic, bounded and finite at the normalization extremes") {
  const EnsembleModel& model = linear_fit().model;
  const Normalizer& norm = model.normalizer();
  const VectorXd s0 = VectorXd::Constant(2, 0.3);
  const VectorXd a0 = VectorXd::Constant(2, -0.2);
  const Prediction p1 = model.predict(0, s0, a0);
  const Prediction p2 = model.predict(0, s0, a0);
  CHECK(p1.mean == p2.mean);
  CHECK(p1.variance == p2.variance);
  CHECK(p1.reward == p2.reward);
  for (double k : {-5.0, 5.0}) {
    const VectorXd s = norm.input_mean.head(2) + k * norm.input_std.head(2);
    const VectorXd a = norm.input_mean.tail(2) + k * norm.input_std.tail(2);
    for (std::size_t m = 0; m < model.size(); ++m) {
      const Prediction p = model.predict(m, s, a);
      CHECK(p.mean.allFinite());
      CHECK(std::isfinite(p.reward));
      CHECK((p.variance.array() >= 1e-6 * (1 - 1e-12)).all());
      CHECK((p.variance.array() <= 1e2 * (1 + 1e-12)).all());
      CHECK(p.cost_prob >= 0.0);
      CHECK(p.cost_prob <= 1.0);
    }
  }
  VectorXd bad = s0;
  bad[0] = NAN;
  CHECK_THROWS_AS(model.predict(0, bad, a0), DomainError);
}

TEST_CASE("sample_next: zero noise at minimum variance returns the mean") {
  const EnsembleModel model = test::constant_ensemble(
      2, 1, {{0.0, 0.5, std::log(1e-9), 0.25}});
  const VectorXd s = VectorXd::Constant(2, 1.0);
  const VectorXd a = VectorXd::Zero(1);
  const Prediction p = model.predict(0, s, a);
  CHECK(p.variance[0] == doctest::Approx(1e-6));
  CHECK(model.sample_next(0, s, a, VectorXd::Zero(2)) == p.mean);
  CHECK(p.mean[0] == doctest::Approx(1.25));
  std::mt19937_64 r1(5), r2(5);
  CHECK(model.sample_next(0, s, a, r1) == model.sample_next(0, s, a, r2));
}

TEST_CASE("sample_next: Monte-Carlo mean is within 3 sigma / sqrt(N) of the prediction") {
  const EnsembleModel model = test::random_ensemble(2, 2, 1, 8, 12);
  const VectorXd s = (VectorXd(2) << 0.2, -0.4).finished();
  const VectorXd a = (VectorXd(2) << 0.5, 0.1).finished();
  const Prediction p = model.predict(0, s, a);
  std::mt19937_64 rng(6);
  const int N = 100000;
  VectorXd sum = VectorXd::Zero(2);
  for (int i = 0; i < N; ++i) sum += model.sample_next(0, s, a, rng);
  const VectorXd mean = sum / N;
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(mean[i] - p.mean[i]) <= 3.0 * std::sqrt(p.variance[i] / N));
  }
}

TEST_CASE("sampled rollouts are differentiable with respect to actions") {
  const EnsembleModel model = test::random_ensemble(2, 2, 1, 8, 31);
  std::mt19937_64 rng(2);
  const int H = 4;
  diff::Tape t;
  const diff::MlpNodes net = model.member(0).net.add_constants(t);
  const NormalizerNodes norm = model.add_normalizer(t);
  diff::NodeId s = t.constant(test::random_array(3, 2, rng));
  diff::NodeId total = t.constant(0.0);
  diff::Bindings in;
  for (int k = 0; k < H; ++k) {
    const std::string name = "a" + std::to_string(k);
    const diff::NodeId a = t.input(name, 3, 2);
    in[name] = test::random_array(3, 2, rng);
    const MemberGraph g = model.add_member(t, net, norm, s, a);
    const diff::NodeId sd = t.exp(t.scale(g.log_var, 0.5));
    s = t.add(g.next_mean, t.mul(sd, t.constant(test::random_array(3, 2, rng))));
    total = t.add(total, t.add(t.sum(g.reward), t.sum(s)));
  }
  t.set_output(total);
  const diff::GradCheckReport r = diff::grad_check(t, in, 1e-6, 1e-3);
  CAPTURE(r.max_relative_error);
  CHECK(r.passed);
}

TEST_CASE("checkpoints reproduce bit-identical predictions") {
  test::TempDir dir("ensemble");
  const EnsembleModel& model = linear_fit().model;
  save_checkpoint(model, dir.str("m.json"));
  const EnsembleModel back = load_checkpoint(dir.str("m.json"));
  std::mt19937_64 rng(9);
  const Array s = test::random_array(20, 2, rng);
  const Array a = test::random_array(20, 2, rng);
  for (std::size_t k = 0; k < model.size(); ++k) {
    const BatchPrediction p = model.predict_batch(k, s, a);
    const BatchPrediction q = back.predict_batch(k, s, a);
    CHECK(p.mean == q.mean);
    CHECK(p.variance == q.variance);
    CHECK(p.reward == q.reward);
    CHECK(p.cost_prob == q.cost_prob);
  }
}

TEST_CASE("fit is reproducible for a fixed seed and warm start keeps shapes") {
  std::mt19937_64 rng(4);
  const ReplayBuffer buffer =
      test::linear_system_buffer(system_a(), system_b(), 6, 50, rng);
  FitConfig cfg;
  cfg.members = 2;
  cfg.epochs = 3;
  cfg.seed = 99;
  const FitResult a = fit(buffer, cfg);
  const FitResult b = fit(buffer, cfg);
  CHECK(a.model.member(1).net == b.model.member(1).net);
  const FitResult warm = fit(buffer, cfg, &a.model);
  CHECK(warm.model.size() == 2);
  CHECK_FALSE(warm.model.member(0).net == a.model.member(0).net);
}

TEST_CASE("fit config is strict about unknown fields") {
  Json j = FitConfig{}.to_json();
  CHECK(FitConfig::from_json(j).members == 5);
  j["memebers"] = 3;
  CHECK_THROWS_AS(FitConfig::from_json(j), ConfigError);
  FitConfig bad;
  bad.members = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
