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

#include <Eigen/Core>

namespace safemb::envs {

// Static description of an episodic constrained MDP. The runtime
// constraint is (expected episode cost) - budget <= 0.
struct CMDPSpec {
  int state_dim = 0;
  int action_dim = 0;
  int horizon = 1;      // steps per episode
  double budget = 0.0;  // expected cost units per episode
  Eigen::VectorXd action_low;
  Eigen::VectorXd action_high;

  // Throws ConfigError when an invariant does not hold.
  void validate() const;
};

}  // namespace safemb::envs
