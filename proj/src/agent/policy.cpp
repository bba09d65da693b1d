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

#include "safemb/agent/policy.hpp"

#include <cmath>

#include "safemb/errors.hpp"

namespace safemb::agent {

using diff::Array;
using diff::NodeId;
using Eigen::VectorXd;

Json PolicyConfig::to_json() const {
  return Json{{"hidden", hidden},
              {"init_log_std", init_log_std},
              {"init_output_scale", init_output_scale}};
}

PolicyConfig PolicyConfig::from_json(const Json& j) {
  require_keys(j, {"hidden", "init_log_std", "init_output_scale"}, "policy");
  PolicyConfig c;
  read_optional(j, "hidden", c.hidden, "policy");
  read_optional(j, "init_log_std", c.init_log_std, "policy");
  read_optional(j, "init_output_scale", c.init_output_scale, "policy");
  if (c.hidden < 1) throw ConfigError("policy.hidden must be >= 1");
  return c;
}

Policy::Policy(int state_dim, int action_dim, VectorXd action_low,
               VectorXd action_high, const PolicyConfig& config,
               std::mt19937_64& rng)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      low_(std::move(action_low)),
      high_(std::move(action_high)),
      net_({state_dim, config.hidden, config.hidden, 2 * action_dim}, rng,
           config.init_output_scale) {
  if (low_.size() != action_dim || high_.size() != action_dim ||
      !(low_.array() < high_.array()).all()) {
    throw ConfigError("policy: invalid action bounds");
  }
  net_.biases().back().rightCols(action_dim).setConstant(config.init_log_std);
}

VectorXd Policy::act(const VectorXd& state, const VectorXd& noise) const {
  if (state.size() != state_dim_ || !state.allFinite()) {
    throw DomainError("policy: state must be finite with state_dim entries");
  }
  const Array out = net_.forward(state.transpose());
  const VectorXd center = 0.5 * (high_ + low_);
  const VectorXd half = 0.5 * (high_ - low_);
  VectorXd a(action_dim_);
  for (int i = 0; i < action_dim_; ++i) {
    const double log_std =
        std::clamp(out(0, action_dim_ + i), kMinLogStd, kMaxLogStd);
    const double u = out(0, i) + std::exp(log_std) * noise[i];
    a[i] = center[i] + half[i] * std::tanh(u);
  }
  return a;
}

VectorXd Policy::act(const VectorXd& state, ActMode mode,
                     std::mt19937_64& rng) const {
  VectorXd noise = VectorXd::Zero(action_dim_);
  if (mode == ActMode::kStochastic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < action_dim_; ++i) noise[i] = normal(rng);
  }
  return act(state, noise);
}

NodeId Policy::add_to_tape(diff::Tape& tape, const diff::MlpNodes& params,
                           NodeId states, NodeId noise) const {
  const NodeId out = diff::Mlp::apply(tape, params, states);
  const NodeId mean = tape.slice_cols(out, 0, action_dim_);
  const NodeId log_std = tape.clamp(tape.slice_cols(out, action_dim_,
                                                    action_dim_),
                                    kMinLogStd, kMaxLogStd);
  const NodeId u = tape.add(mean, tape.mul(tape.exp(log_std), noise));
  const Array center = (0.5 * (high_ + low_)).transpose();
  const Array half = (0.5 * (high_ - low_)).transpose();
  return tape.add(tape.mul(tape.tanh(u), tape.constant(half)),
                  tape.constant(center));
}

Json Policy::to_json() const {
  auto vec = [](const VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  return Json{{"state_dim", state_dim_},
              {"action_dim", action_dim_},
              {"action_low", vec(low_)},
              {"action_high", vec(high_)},
              {"network", net_.to_json()}};
}

Policy Policy::from_json(const Json& j) {
  require_keys(j,
               {"state_dim", "action_dim", "action_low", "action_high",
                "network"},
               "policy checkpoint");
  Policy p;
  p.state_dim_ = j.at("state_dim").get<int>();
  p.action_dim_ = j.at("action_dim").get<int>();
  const auto lo = j.at("action_low").get<std::vector<double>>();
  const auto hi = j.at("action_high").get<std::vector<double>>();
  p.low_ = Eigen::Map<const VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  p.high_ = Eigen::Map<const VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  p.net_ = diff::Mlp::from_json(j.at("network"));
  if (p.net_.input_dim() != p.state_dim_ ||
      p.net_.output_dim() != 2 * p.action_dim_ ||
      p.low_.size() != p.action_dim_ || p.high_.size() != p.action_dim_) {
    throw ConfigError("policy checkpoint: inconsistent dimensions");
  }
  return p;
}

}  // namespace safemb::agent
