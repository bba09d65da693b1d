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

#include <cstdint>

#include <Eigen/Core>

#include "safemb/diffcore/tape.hpp"

namespace safemb::agent {

// One fixed-horizon episode: rows t = 0..T-1 of (s_t, a_t, r_t, c_t) plus
// the terminal state s_T.
struct Trajectory {
  diff::Array states;   // T x n
  diff::Array actions;  // T x m
  Eigen::VectorXd rewards;
  Eigen::VectorXd costs;
  Eigen::VectorXd terminal_state;
  std::uint64_t seed = 0;

  int length() const { return static_cast<int>(rewards.size()); }
  double total_reward() const { return rewards.sum(); }
  double total_cost() const { return costs.sum(); }
  // s_{t+1}, using the terminal state for the last step.
  Eigen::VectorXd next_state(int t) const;
};

}  // namespace safemb::agent
