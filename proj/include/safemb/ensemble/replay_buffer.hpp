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

#include <cstddef>
#include <utility>
#include <vector>

#include "safemb/agent/trajectory.hpp"
#include "safemb/diffcore/tape.hpp"

namespace safemb::ensemble {

struct TransitionBatch {
  diff::Array states;       // B x n
  diff::Array actions;      // B x m
  diff::Array next_states;  // B x n
  diff::Array rewards;      // B x 1
  diff::Array costs;        // B x 1
};

// Flat store of (s, a, s', r, c). Each appended episode occupies a
// contiguous, time-ordered index range. When full, whole episodes are
// evicted oldest first.
class ReplayBuffer {
 public:
  ReplayBuffer(int state_dim, int action_dim, std::size_t capacity = 1'000'000);

  void append(const agent::Trajectory& episode);

  std::size_t size() const { return rewards_.size(); }
  std::size_t capacity() const { return capacity_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  std::size_t episode_count() const { return episodes_.size(); }
  // [begin, end) transition ranges, oldest first.
  const std::vector<std::pair<std::size_t, std::size_t>>& episodes() const {
    return episodes_;
  }

  Eigen::Map<const Eigen::VectorXd> state(std::size_t i) const;
  Eigen::Map<const Eigen::VectorXd> action(std::size_t i) const;
  Eigen::Map<const Eigen::VectorXd> next_state(std::size_t i) const;
  double reward(std::size_t i) const { return rewards_.at(i); }
  double cost(std::size_t i) const { return costs_.at(i); }

  TransitionBatch gather(const std::vector<std::size_t>& indices) const;
  TransitionBatch all() const;

 private:
  void evict_oldest();

  int state_dim_;
  int action_dim_;
  std::size_t capacity_;
  std::vector<double> states_;
  std::vector<double> actions_;
  std::vector<double> next_states_;
  std::vector<double> rewards_;
  std::vector<double> costs_;
  std::vector<std::pair<std::size_t, std::size_t>> episodes_;
};

}  // namespace safemb::ensemble
