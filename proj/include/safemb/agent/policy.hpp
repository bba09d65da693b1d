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

#include <random>

#include <Eigen/Core>

#include "safemb/diffcore/mlp.hpp"
#include "safemb/diffcore/tape.hpp"
#include "safemb/envs/cmdp.hpp"
#include "safemb/json_util.hpp"

namespace safemb::agent {

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 1.0;

enum class ActMode { kStochastic, kMean };

struct PolicyConfig {
  int hidden = 32;
  double init_log_std = -0.5;
  // Scale of the output layer's initial weights; small values give a
  // near-zero initial mean action.
  double init_output_scale = 0.01;

  Json to_json() const;
  static PolicyConfig from_json(const Json& j);
};

// Gaussian policy squashed into the action box:
//   u = mean(s) + exp(clamp(log_std(s))) * eps,
//   a = center + half_range * tanh(u).
class Policy {
 public:
  Policy() = default;
  Policy(int state_dim, int action_dim, Eigen::VectorXd action_low,
         Eigen::VectorXd action_high, const PolicyConfig& config,
         std::mt19937_64& rng);

  Eigen::VectorXd act(const Eigen::VectorXd& state, ActMode mode,
                      std::mt19937_64& rng) const;
  // Deterministic form with caller-provided standard normal noise.
  Eigen::VectorXd act(const Eigen::VectorXd& state,
                      const Eigen::VectorXd& noise) const;

  // Appends the policy to a tape; `params` may be inputs or constants.
  diff::NodeId add_to_tape(diff::Tape& tape, const diff::MlpNodes& params,
                           diff::NodeId states, diff::NodeId noise) const;

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const Eigen::VectorXd& action_low() const { return low_; }
  const Eigen::VectorXd& action_high() const { return high_; }

  Eigen::VectorXd parameters() const { return net_.flatten(); }
  void set_parameters(const Eigen::VectorXd& flat) { net_.unflatten(flat); }
  std::size_t parameter_count() const { return net_.parameter_count(); }
  const diff::Mlp& network() const { return net_; }
  diff::Mlp& network() { return net_; }

  Json to_json() const;
  static Policy from_json(const Json& j);

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  Eigen::VectorXd low_;
  Eigen::VectorXd high_;
  diff::Mlp net_;
};

}  // namespace safemb::agent
