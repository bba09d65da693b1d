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

// Hand-built models and buffers shared by the unit and acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "safemb/agent/config.hpp"
#include "safemb/agent/policy.hpp"
#include "safemb/agent/trajectory.hpp"
#include "safemb/ensemble/ensemble.hpp"
#include "safemb/ensemble/replay_buffer.hpp"

namespace safemb::test {

inline ensemble::Normalizer identity_normalizer(int n, int m) {
  ensemble::Normalizer norm;
  norm.input_mean = Eigen::VectorXd::Zero(n + m);
  norm.input_std = Eigen::VectorXd::Ones(n + m);
  norm.delta_mean = Eigen::VectorXd::Zero(n);
  norm.delta_std = Eigen::VectorXd::Ones(n);
  return norm;
}

struct ConstantMember {
  double reward = 0.0;
  double cost_prob = 0.0;   // in [0, 1)
  double log_var = std::log(1e-6);
  double delta = 0.0;       // added to every state coordinate
};

// A member whose outputs ignore (s, a): zero weights, output bias only.
inline ensemble::MemberParams constant_member(int n, int m,
                                              const ConstantMember& c) {
  std::mt19937_64 rng(0);
  diff::Mlp net({n + m, 4, 2 * n + 2}, rng);
  for (auto& w : net.weights()) w.setZero();
  for (auto& b : net.biases()) b.setZero();
  diff::Array& out = net.biases().back();
  for (int i = 0; i < n; ++i) {
    out(0, i) = c.delta;
    out(0, n + i) = c.log_var;
  }
  out(0, 2 * n) = c.reward;
  // A logit of -1000 gives a probability of exactly 0 after underflow.
  out(0, 2 * n + 1) = c.cost_prob > 0.0
                          ? std::log(c.cost_prob / (1.0 - c.cost_prob))
                          : -1000.0;
  return {net};
}

inline ensemble::EnsembleModel constant_ensemble(
    int n, int m, const std::vector<ConstantMember>& members) {
  std::vector<ensemble::MemberParams> params;
  for (const auto& c : members) params.push_back(constant_member(n, m, c));
  ensemble::FitConfig cfg;
  cfg.members = static_cast<int>(members.size());
  return ensemble::EnsembleModel(n, m, std::move(params),
                                 identity_normalizer(n, m), cfg);
}

// Members with random weights: smooth, state-dependent dynamics, reward
// and cost. Used where gradients must be non-trivial.
inline ensemble::EnsembleModel random_ensemble(int n, int m, int members,
                                               int hidden, std::uint64_t seed,
                                               double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::vector<ensemble::MemberParams> params;
  for (int i = 0; i < members; ++i) {
    diff::Mlp net({n + m, hidden, 2 * n + 2}, rng);
    for (auto& w : net.weights()) w *= scale;
    std::normal_distribution<double> normal(0.0, 0.3);
    for (auto& b : net.biases()) {
      for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = normal(rng);
    }
    // Keep the predicted variance moderate.
    for (int j = 0; j < n; ++j) net.biases().back()(0, n + j) -= 4.0;
    params.push_back({net});
  }
  ensemble::FitConfig cfg;
  cfg.members = members;
  cfg.hidden = hidden;
  return ensemble::EnsembleModel(n, m, std::move(params),
                                 identity_normalizer(n, m), cfg);
}

inline agent::Policy small_policy(int n, int m, std::uint64_t seed,
                                  double log_std = -1.0) {
  std::mt19937_64 rng(seed);
  agent::PolicyConfig cfg;
  cfg.hidden = 6;
  cfg.init_log_std = log_std;
  cfg.init_output_scale = 1.0;
  return agent::Policy(n, m, Eigen::VectorXd::Constant(m, -1.0),
                       Eigen::VectorXd::Constant(m, 1.0), cfg, rng);
}

// Episodes from s' = A s + B a with uniform random starts and actions.
inline ensemble::ReplayBuffer linear_system_buffer(const Eigen::MatrixXd& A,
                                                   const Eigen::MatrixXd& B,
                                                   int episodes, int length,
                                                   std::mt19937_64& rng,
                                                   double cost = 0.0) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ensemble::ReplayBuffer buffer(n, m);
  for (int e = 0; e < episodes; ++e) {
    agent::Trajectory t;
    t.states.resize(length, n);
    t.actions.resize(length, m);
    t.rewards.resize(length);
    t.costs = Eigen::VectorXd::Constant(length, cost);
    Eigen::VectorXd s(n);
    for (int i = 0; i < n; ++i) s[i] = u(rng);
    for (int k = 0; k < length; ++k) {
      Eigen::VectorXd a(m);
      for (int i = 0; i < m; ++i) a[i] = u(rng);
      t.states.row(k) = s.transpose();
      t.actions.row(k) = a.transpose();
      t.rewards[k] = -s.squaredNorm();
      s = A * s + B * a;
    }
    t.terminal_state = s;
    buffer.append(t);
  }
  return buffer;
}

// A few short epochs with small networks; seconds to train.
inline agent::TrainConfig tiny_train_config(std::uint64_t seed) {
  agent::TrainConfig c;
  c.epochs = 3;
  c.episodes_per_epoch = 2;
  c.horizon = 100;
  c.imagination_batch = 16;
  c.imagination_horizon = 5;
  c.policy_updates = 3;
  c.eval_episodes = 2;
  c.model.members = 3;
  c.model.hidden = 16;
  c.model.epochs = 3;
  c.model.batch_size = 64;
  c.policy.hidden = 8;
  c.seed = seed;
  return c;
}

}  // namespace safemb::test
