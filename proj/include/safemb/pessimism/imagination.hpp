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

// Policy evaluation under the plausible-model set. Every ensemble member
// rolls the policy forward from the same start states with the same frozen
// noise. The constraint is the worst case over members and the objective
// is the member average.

#include <memory>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "safemb/agent/policy.hpp"
#include "safemb/diffcore/tape.hpp"
#include "safemb/ensemble/ensemble.hpp"
#include "safemb/ensemble/replay_buffer.hpp"

namespace safemb::pessimism {

struct ImaginedBatch {
  diff::Array initial_states;             // B x n
  std::vector<diff::Array> state_noise;   // H entries of B x n
  std::vector<diff::Array> action_noise;  // H entries of B x m

  int horizon() const { return static_cast<int>(state_noise.size()); }
  Eigen::Index batch_size() const { return initial_states.rows(); }
  void validate(int state_dim, int action_dim) const;

  // Start states drawn uniformly from the buffer, standard normal noise.
  // With recent_episodes > 0 only the newest that many episodes are used.
  // With cost_free_starts only transitions whose recorded cost is zero are
  // eligible (falling back to all when there are none).
  static ImaginedBatch sample(const ensemble::ReplayBuffer& buffer,
                              int batch_size, int horizon,
                              std::mt19937_64& rng, int recent_episodes = 0,
                              bool cost_free_starts = false);
  static ImaginedBatch from_states(const diff::Array& states, int action_dim,
                                   int horizon, std::mt19937_64& rng);
};

struct RolloutEstimate {
  double objective = 0.0;   // mean over batch of summed predicted rewards
  double constraint = 0.0;  // mean summed expected cost minus cost_offset
};

// Differentiable imagined rollout of the policy under one member. The tape
// is built once; evaluate() rebinds the policy parameters.
class MemberRollout {
 public:
  MemberRollout(const agent::Policy& policy,
                const ensemble::EnsembleModel& model, std::size_t member,
                const ImaginedBatch& batch, double cost_offset);

  // Forward pass. Throws DomainError naming the step on non-finite values.
  RolloutEstimate evaluate(const Eigen::VectorXd& policy_params);
  // Gradients w.r.t. the policy parameters at the last evaluate() point.
  Eigen::VectorXd objective_gradient();
  Eigen::VectorXd constraint_gradient();

  diff::Tape& tape() { return tape_; }
  std::size_t member() const { return member_; }

 private:
  const agent::Policy* policy_;
  std::size_t member_;
  diff::Tape tape_;
  diff::NodeId objective_;
  diff::NodeId constraint_;
  std::vector<diff::NodeId> states_;
};

struct PessimisticEstimate {
  std::vector<double> member_objectives;
  std::vector<double> member_constraints;
  std::size_t argmax = 0;       // worst-case member, lowest index on ties
  double objective = 0.0;       // mean of member objectives
  double constraint = 0.0;      // max of member constraints
};

struct BarrierTerms {
  PessimisticEstimate estimate;
  Eigen::VectorXd objective_gradient;   // of the member-mean objective
  Eigen::VectorXd constraint_gradient;  // of the argmax member's constraint
};

// Holds one rollout tape per member for a fixed batch so that repeated
// evaluations at different policy parameters reuse the graphs.
class PessimisticEvaluator {
 public:
  PessimisticEvaluator(const agent::Policy& policy,
                       const ensemble::EnsembleModel& model,
                       const ImaginedBatch& batch, double cost_offset);

  PessimisticEstimate evaluate(const Eigen::VectorXd& policy_params);
  // Forward + backward. With require_feasible, a worst-case constraint
  // >= 0 throws InfeasibleIterate.
  BarrierTerms gradients(const Eigen::VectorXd& policy_params,
                         bool require_feasible);

  std::size_t members() const { return rollouts_.size(); }
  MemberRollout& rollout(std::size_t i) { return *rollouts_.at(i); }

 private:
  std::vector<std::unique_ptr<MemberRollout>> rollouts_;
};

// Constraint offset that prorates an episode budget to the imagination
// horizon: budget * horizon / episode_length.
double prorated_budget(double episode_budget, int episode_length,
                       int imagination_horizon);

RolloutEstimate imagine_rollout(const agent::Policy& policy,
                                const ensemble::EnsembleModel& model,
                                std::size_t member, const ImaginedBatch& batch,
                                double cost_offset);

PessimisticEstimate pessimistic_eval(const agent::Policy& policy,
                                     const ensemble::EnsembleModel& model,
                                     const ImaginedBatch& batch,
                                     double cost_offset);

BarrierTerms barrier_terms(const agent::Policy& policy,
                           const ensemble::EnsembleModel& model,
                           const ImaginedBatch& batch, double cost_offset,
                           double eta);

}  // namespace safemb::pessimism
