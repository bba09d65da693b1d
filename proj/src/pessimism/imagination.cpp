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

#include "safemb/pessimism/imagination.hpp"

#include <sstream>

#include "safemb/errors.hpp"

namespace safemb::pessimism {

using diff::Array;
using diff::NodeId;
using Eigen::VectorXd;

namespace {

const std::string kPolicyPrefix = "pi/";

Array standard_normal(Eigen::Index rows, Eigen::Index cols,
                      std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Array a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  return a;
}

}  // namespace

void ImaginedBatch::validate(int state_dim, int action_dim) const {
  if (batch_size() < 1) throw ShapeError("imagined batch: empty batch");
  if (horizon() < 1) throw ShapeError("imagined batch: horizon must be >= 1");
  if (initial_states.cols() != state_dim ||
      action_noise.size() != state_noise.size()) {
    throw ShapeError("imagined batch: inconsistent dimensions");
  }
  for (int t = 0; t < horizon(); ++t) {
    const auto i = static_cast<std::size_t>(t);
    if (state_noise[i].rows() != batch_size() ||
        state_noise[i].cols() != state_dim ||
        action_noise[i].rows() != batch_size() ||
        action_noise[i].cols() != action_dim) {
      throw ShapeError("imagined batch: noise has the wrong shape at step " +
                       std::to_string(t));
    }
  }
}

ImaginedBatch ImaginedBatch::from_states(const Array& states, int action_dim,
                                         int horizon, std::mt19937_64& rng) {
  if (horizon < 1) throw ShapeError("imagined batch: horizon must be >= 1");
  ImaginedBatch b;
  b.initial_states = states;
  for (int t = 0; t < horizon; ++t) {
    b.state_noise.push_back(standard_normal(states.rows(), states.cols(), rng));
    b.action_noise.push_back(standard_normal(states.rows(), action_dim, rng));
  }
  return b;
}

ImaginedBatch ImaginedBatch::sample(const ensemble::ReplayBuffer& buffer,
                                    int batch_size, int horizon,
                                    std::mt19937_64& rng, int recent_episodes,
                                    bool cost_free_starts) {
  if (buffer.size() == 0) throw ShapeError("imagined batch: empty buffer");
  if (batch_size < 1) throw ShapeError("imagined batch: empty batch");
  std::size_t first = 0;
  const auto& episodes = buffer.episodes();
  if (recent_episodes > 0 &&
      static_cast<std::size_t>(recent_episodes) < episodes.size()) {
    first = episodes[episodes.size() - static_cast<std::size_t>(recent_episodes)]
                .first;
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = first; i < buffer.size(); ++i) {
    if (!cost_free_starts || buffer.cost(i) == 0.0) eligible.push_back(i);
  }
  if (eligible.empty()) {
    for (std::size_t i = first; i < buffer.size(); ++i) eligible.push_back(i);
  }
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  Array states(batch_size, buffer.state_dim());
  for (int i = 0; i < batch_size; ++i) {
    states.row(i) = buffer.state(eligible[pick(rng)]).transpose();
  }
  return from_states(states, buffer.action_dim(), horizon, rng);
}

MemberRollout::MemberRollout(const agent::Policy& policy,
                             const ensemble::EnsembleModel& model,
                             std::size_t member, const ImaginedBatch& batch,
                             double cost_offset)
    : policy_(&policy), member_(member) {
  if (policy.state_dim() != model.state_dim() ||
      policy.action_dim() != model.action_dim()) {
    throw ShapeError("imagine: policy and model dimensions differ");
  }
  if (member >= model.size()) throw ShapeError("imagine: no such member");
  batch.validate(model.state_dim(), model.action_dim());

  diff::Tape& t = tape_;
  const diff::MlpNodes pi = policy.network().add_inputs(t, kPolicyPrefix);
  const diff::MlpNodes net = model.member(member).net.add_constants(t);
  const ensemble::NormalizerNodes norm = model.add_normalizer(t);

  NodeId s = t.constant(batch.initial_states);
  NodeId reward_sum;
  NodeId cost_sum;
  states_.push_back(s);
  for (int step = 0; step < batch.horizon(); ++step) {
    const auto i = static_cast<std::size_t>(step);
    const NodeId a =
        policy.add_to_tape(t, pi, s, t.constant(batch.action_noise[i]));
    const ensemble::MemberGraph g = model.add_member(t, net, norm, s, a);
    const NodeId std_dev = t.exp(t.scale(g.log_var, 0.5));
    s = t.add(g.next_mean,
              t.mul(std_dev, t.constant(batch.state_noise[i])));
    states_.push_back(s);
    // Expected indicator cost: sigmoid(z) = exp(-softplus(-z)).
    const NodeId cost_prob =
        t.exp(t.scale(t.softplus(t.scale(g.cost_logit, -1.0)), -1.0));
    const NodeId r = t.sum(g.reward);
    const NodeId c = t.sum(cost_prob);
    reward_sum = step == 0 ? r : t.add(reward_sum, r);
    cost_sum = step == 0 ? c : t.add(cost_sum, c);
  }
  const double inv_b = 1.0 / static_cast<double>(batch.batch_size());
  objective_ = t.scale(reward_sum, inv_b);
  constraint_ = t.sub(t.scale(cost_sum, inv_b), t.constant(cost_offset));
  t.set_output(constraint_);
}

RolloutEstimate MemberRollout::evaluate(const VectorXd& policy_params) {
  agent::Policy scratch = *policy_;
  scratch.set_parameters(policy_params);
  scratch.network().bind(tape_, kPolicyPrefix);
  tape_.forward();
  for (std::size_t k = 0; k < states_.size(); ++k) {
    if (!tape_.value(states_[k]).allFinite()) {
      std::ostringstream os;
      os << "imagine: non-finite state at step " << k << " of member "
         << member_;
      throw DomainError(os.str());
    }
  }
  RolloutEstimate e{tape_.value(objective_)(0, 0),
                    tape_.value(constraint_)(0, 0)};
  if (!std::isfinite(e.objective) || !std::isfinite(e.constraint)) {
    throw DomainError("imagine: non-finite return in member " +
                      std::to_string(member_));
  }
  return e;
}

VectorXd MemberRollout::objective_gradient() {
  return policy_->network().flatten_gradients(tape_.backward(objective_),
                                              kPolicyPrefix);
}

VectorXd MemberRollout::constraint_gradient() {
  return policy_->network().flatten_gradients(tape_.backward(constraint_),
                                              kPolicyPrefix);
}

PessimisticEvaluator::PessimisticEvaluator(
    const agent::Policy& policy, const ensemble::EnsembleModel& model,
    const ImaginedBatch& batch, double cost_offset) {
  if (model.size() == 0) throw ShapeError("pessimism: empty ensemble");
  for (std::size_t i = 0; i < model.size(); ++i) {
    rollouts_.push_back(
        std::make_unique<MemberRollout>(policy, model, i, batch, cost_offset));
  }
}

PessimisticEstimate PessimisticEvaluator::evaluate(const VectorXd& params) {
  PessimisticEstimate e;
  for (auto& r : rollouts_) {
    const RolloutEstimate re = r->evaluate(params);
    e.member_objectives.push_back(re.objective);
    e.member_constraints.push_back(re.constraint);
  }
  e.argmax = 0;
  for (std::size_t i = 1; i < e.member_constraints.size(); ++i) {
    if (e.member_constraints[i] > e.member_constraints[e.argmax]) e.argmax = i;
  }
  e.constraint = e.member_constraints[e.argmax];
  double sum = 0.0;
  for (double j : e.member_objectives) sum += j;
  e.objective = sum / static_cast<double>(e.member_objectives.size());
  return e;
}

BarrierTerms PessimisticEvaluator::gradients(const VectorXd& params,
                                             bool require_feasible) {
  BarrierTerms b;
  b.estimate = evaluate(params);
  if (require_feasible && b.estimate.constraint >= 0.0) {
    throw InfeasibleIterate(b.estimate.constraint);
  }
  b.objective_gradient = VectorXd::Zero(params.size());
  for (auto& r : rollouts_) b.objective_gradient += r->objective_gradient();
  b.objective_gradient /= static_cast<double>(rollouts_.size());
  b.constraint_gradient = rollouts_[b.estimate.argmax]->constraint_gradient();
  return b;
}

double prorated_budget(double episode_budget, int episode_length,
                       int imagination_horizon) {
  if (episode_length < 1 || imagination_horizon < 1) {
    throw ConfigError("prorated budget: lengths must be >= 1");
  }
  return episode_budget * static_cast<double>(imagination_horizon) /
         static_cast<double>(episode_length);
}

RolloutEstimate imagine_rollout(const agent::Policy& policy,
                                const ensemble::EnsembleModel& model,
                                std::size_t member, const ImaginedBatch& batch,
                                double cost_offset) {
  MemberRollout r(policy, model, member, batch, cost_offset);
  return r.evaluate(policy.parameters());
}

PessimisticEstimate pessimistic_eval(const agent::Policy& policy,
                                     const ensemble::EnsembleModel& model,
                                     const ImaginedBatch& batch,
                                     double cost_offset) {
  PessimisticEvaluator ev(policy, model, batch, cost_offset);
  return ev.evaluate(policy.parameters());
}

BarrierTerms barrier_terms(const agent::Policy& policy,
                           const ensemble::EnsembleModel& model,
                           const ImaginedBatch& batch, double cost_offset,
                           double eta) {
  if (!(eta > 0.0)) throw DomainError("barrier terms: eta must be > 0");
  PessimisticEvaluator ev(policy, model, batch, cost_offset);
  return ev.gradients(policy.parameters(), /*require_feasible=*/true);
}

}  // namespace safemb::pessimism
