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

#include "safemb/ensemble/replay_buffer.hpp"

#include <numeric>

#include "safemb/errors.hpp"

namespace safemb::ensemble {

ReplayBuffer::ReplayBuffer(int state_dim, int action_dim,
                           std::size_t capacity)
    : state_dim_(state_dim), action_dim_(action_dim), capacity_(capacity) {
  if (state_dim < 1 || action_dim < 1 || capacity < 1) {
    throw ConfigError("replay buffer: dimensions and capacity must be >= 1");
  }
}

void ReplayBuffer::append(const agent::Trajectory& episode) {
  const int T = episode.length();
  if (T < 1) throw ConfigError("replay buffer: empty episode");
  if (episode.states.cols() != state_dim_ ||
      episode.actions.cols() != action_dim_ ||
      episode.states.rows() != T || episode.actions.rows() != T ||
      episode.costs.size() != T ||
      episode.terminal_state.size() != state_dim_) {
    throw ShapeError("replay buffer: episode does not match buffer dims");
  }
  if (static_cast<std::size_t>(T) > capacity_) {
    throw ConfigError("replay buffer: episode longer than capacity");
  }
  while (size() + static_cast<std::size_t>(T) > capacity_) evict_oldest();
  const std::size_t begin = size();
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < state_dim_; ++j) {
      states_.push_back(episode.states(t, j));
    }
    for (int j = 0; j < action_dim_; ++j) {
      actions_.push_back(episode.actions(t, j));
    }
    const Eigen::VectorXd next = episode.next_state(t);
    for (int j = 0; j < state_dim_; ++j) next_states_.push_back(next[j]);
    rewards_.push_back(episode.rewards[t]);
    costs_.push_back(episode.costs[t]);
  }
  episodes_.emplace_back(begin, size());
}

void ReplayBuffer::evict_oldest() {
  const auto [begin, end] = episodes_.front();
  const auto n = static_cast<std::ptrdiff_t>(end - begin);
  states_.erase(states_.begin(), states_.begin() + n * state_dim_);
  actions_.erase(actions_.begin(), actions_.begin() + n * action_dim_);
  next_states_.erase(next_states_.begin(),
                     next_states_.begin() + n * state_dim_);
  rewards_.erase(rewards_.begin(), rewards_.begin() + n);
  costs_.erase(costs_.begin(), costs_.begin() + n);
  episodes_.erase(episodes_.begin());
  for (auto& [b, e] : episodes_) {
    b -= static_cast<std::size_t>(n);
    e -= static_cast<std::size_t>(n);
  }
}

Eigen::Map<const Eigen::VectorXd> ReplayBuffer::state(std::size_t i) const {
  return {states_.data() + i * static_cast<std::size_t>(state_dim_),
          state_dim_};
}

Eigen::Map<const Eigen::VectorXd> ReplayBuffer::action(std::size_t i) const {
  return {actions_.data() + i * static_cast<std::size_t>(action_dim_),
          action_dim_};
}

Eigen::Map<const Eigen::VectorXd> ReplayBuffer::next_state(
    std::size_t i) const {
  return {next_states_.data() + i * static_cast<std::size_t>(state_dim_),
          state_dim_};
}

TransitionBatch ReplayBuffer::gather(
    const std::vector<std::size_t>& indices) const {
  const auto B = static_cast<Eigen::Index>(indices.size());
  TransitionBatch batch;
  batch.states.resize(B, state_dim_);
  batch.actions.resize(B, action_dim_);
  batch.next_states.resize(B, state_dim_);
  batch.rewards.resize(B, 1);
  batch.costs.resize(B, 1);
  for (Eigen::Index k = 0; k < B; ++k) {
    const std::size_t i = indices[static_cast<std::size_t>(k)];
    if (i >= size()) throw ShapeError("replay buffer: index out of range");
    batch.states.row(k) = state(i).transpose();
    batch.actions.row(k) = action(i).transpose();
    batch.next_states.row(k) = next_state(i).transpose();
    batch.rewards(k, 0) = rewards_[i];
    batch.costs(k, 0) = costs_[i];
  }
  return batch;
}

TransitionBatch ReplayBuffer::all() const {
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return gather(idx);
}

}  // namespace safemb::ensemble

namespace safemb::agent {

Eigen::VectorXd Trajectory::next_state(int t) const {
  if (t + 1 < length()) return states.row(t + 1).transpose();
  return terminal_state;
}

}  // namespace safemb::agent
