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

// Point navigation with circular hazard regions: a 2D double integrator
// that earns progress-to-goal reward and an indicator cost whenever its
// position lies inside a hazard disc.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "safemb/envs/cmdp.hpp"

namespace safemb::envs {

using Vec2 = Eigen::Vector2d;

struct Hazard {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  friend bool operator==(const Hazard&, const Hazard&) = default;
};

struct PointHazardLayout {
  Vec2 goal = Vec2::Zero();
  double goal_radius = 0.3;
  std::vector<Hazard> hazards;
  double arena_half_width = 2.0;
  std::uint64_t seed = 0;
  friend bool operator==(const PointHazardLayout&,
                         const PointHazardLayout&) = default;
};

struct DynamicsParams {
  double damping = 0.9;   // velocity retention per step
  double dt = 0.1;        // seconds per step
  double noise = 0.01;    // velocity noise std
  double goal_bonus = 1.0;
  double spawn_margin = 0.2;
};

struct DefaultLayoutOptions {
  int hazard_count = 8;
  double hazard_radius = 0.4;
  double arena_half_width = 2.0;
  double goal_radius = 0.3;
};

// Checks geometric invariants and that the safe spawn region is non-empty.
// Throws LayoutError otherwise.
void validate_layout(const PointHazardLayout& layout, double spawn_margin);

// Rejection-samples a valid layout from `seed`.
PointHazardLayout default_layout(std::uint64_t seed,
                                 const DefaultLayoutOptions& options = {});

struct EnvState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  int step = 0;
  std::mt19937_64 rng;
};

// (x, y, vx, vy)
Eigen::VectorXd observe(const EnvState& state);

struct StepResult {
  EnvState next;
  double reward = 0.0;
  double cost = 0.0;
  bool done = false;
};

class PointHazardEnv {
 public:
  static constexpr int kStateDim = 4;
  static constexpr int kActionDim = 2;

  PointHazardEnv(PointHazardLayout layout, DynamicsParams dynamics,
                 int horizon, double budget);

  // Position uniform over the safe spawn region, zero velocity.
  EnvState reset(std::uint64_t seed) const;
  StepResult step(const EnvState& state, const Eigen::VectorXd& action) const;

  bool in_hazard(const Vec2& position) const;
  bool in_spawn_region(const Vec2& position) const;
  double distance_to_goal(const Vec2& position) const;

  const CMDPSpec& spec() const { return spec_; }
  const PointHazardLayout& layout() const { return layout_; }
  const DynamicsParams& dynamics() const { return dynamics_; }
  DynamicsParams& mutable_dynamics() { return dynamics_; }

 private:
  PointHazardLayout layout_;
  DynamicsParams dynamics_;
  CMDPSpec spec_;
};

}  // namespace safemb::envs
