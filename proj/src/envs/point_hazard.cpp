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

#include "safemb/envs/point_hazard.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "safemb/errors.hpp"

namespace safemb::envs {
namespace {

constexpr int kSpawnGrid = 201;
constexpr int kMaxSpawnDraws = 1'000'000;
constexpr int kMaxLayoutDraws = 10'000;

bool spawn_ok(const PointHazardLayout& layout, const Vec2& p, double margin) {
  for (const Hazard& h : layout.hazards) {
    if ((p - h.center).norm() < h.radius + margin) return false;
  }
  return true;
}

}  // namespace

void CMDPSpec::validate() const {
  if (state_dim < 1 || action_dim < 1) {
    throw ConfigError("cmdp: state and action dimensions must be >= 1");
  }
  if (horizon < 1) throw ConfigError("cmdp: horizon must be >= 1");
  if (!(budget >= 0.0)) throw ConfigError("cmdp: budget must be >= 0");
  if (action_low.size() != action_dim || action_high.size() != action_dim) {
    throw ConfigError("cmdp: action bounds must have action_dim entries");
  }
  for (int i = 0; i < action_dim; ++i) {
    if (!std::isfinite(action_low[i]) || !std::isfinite(action_high[i]) ||
        !(action_low[i] < action_high[i])) {
      throw ConfigError("cmdp: action bounds must be finite with low < high");
    }
  }
}

void validate_layout(const PointHazardLayout& layout, double spawn_margin) {
  const double hw = layout.arena_half_width;
  if (!(hw > 0.0) || !std::isfinite(hw)) {
    throw LayoutError("layout: arena half-width must be positive");
  }
  if (!(layout.goal_radius > 0.0)) {
    throw LayoutError("layout: goal radius must be positive");
  }
  if (std::abs(layout.goal.x()) > hw || std::abs(layout.goal.y()) > hw) {
    throw LayoutError("layout: goal lies outside the arena");
  }
  for (const Hazard& h : layout.hazards) {
    if (!(h.radius > 0.0)) {
      throw LayoutError("layout: hazard radius must be positive");
    }
    if ((layout.goal - h.center).norm() < h.radius) {
      throw LayoutError("layout: goal center lies inside a hazard");
    }
  }
  // The spawn region is open, so a grid hit proves positive area.
  bool found = false;
  for (int i = 0; i < kSpawnGrid && !found; ++i) {
    for (int j = 0; j < kSpawnGrid && !found; ++j) {
      const Vec2 p(-hw + 2.0 * hw * i / (kSpawnGrid - 1),
                   -hw + 2.0 * hw * j / (kSpawnGrid - 1));
      found = spawn_ok(layout, p, spawn_margin);
    }
  }
  if (!found) {
    throw LayoutError("layout: hazards leave no safe spawn region");
  }
}

PointHazardLayout default_layout(std::uint64_t seed,
                                 const DefaultLayoutOptions& options) {
  std::mt19937_64 rng(seed);
  const double hw = options.arena_half_width;
  const double r = options.hazard_radius;
  std::uniform_real_distribution<double> goal_coord(-0.75 * hw, 0.75 * hw);
  std::uniform_real_distribution<double> hazard_coord(-hw + r, hw - r);
  for (int attempt = 0; attempt < kMaxLayoutDraws; ++attempt) {
    PointHazardLayout layout;
    layout.seed = seed;
    layout.arena_half_width = hw;
    layout.goal_radius = options.goal_radius;
    layout.goal = Vec2(goal_coord(rng), goal_coord(rng));
    bool ok = true;
    for (int k = 0; k < options.hazard_count && ok; ++k) {
      Hazard h{Vec2(hazard_coord(rng), hazard_coord(rng)), r};
      ok = (layout.goal - h.center).norm() >= h.radius + options.goal_radius;
      layout.hazards.push_back(h);
    }
    if (!ok) continue;
    try {
      validate_layout(layout, DynamicsParams{}.spawn_margin);
    } catch (const LayoutError&) {
      continue;
    }
    return layout;
  }
  throw LayoutError("layout: could not sample a valid layout for seed " +
                    std::to_string(seed));
}

Eigen::VectorXd observe(const EnvState& state) {
  Eigen::VectorXd s(4);
  s << state.position, state.velocity;
  return s;
}

PointHazardEnv::PointHazardEnv(PointHazardLayout layout,
                               DynamicsParams dynamics, int horizon,
                               double budget)
    : layout_(std::move(layout)), dynamics_(dynamics) {
  spec_.state_dim = kStateDim;
  spec_.action_dim = kActionDim;
  spec_.horizon = horizon;
  spec_.budget = budget;
  spec_.action_low = Eigen::VectorXd::Constant(kActionDim, -1.0);
  spec_.action_high = Eigen::VectorXd::Constant(kActionDim, 1.0);
  spec_.validate();
  validate_layout(layout_, dynamics_.spawn_margin);
}

bool PointHazardEnv::in_hazard(const Vec2& position) const {
  for (const Hazard& h : layout_.hazards) {
    if ((position - h.center).norm() <= h.radius) return true;
  }
  return false;
}

bool PointHazardEnv::in_spawn_region(const Vec2& position) const {
  const double hw = layout_.arena_half_width;
  return std::abs(position.x()) <= hw && std::abs(position.y()) <= hw &&
         spawn_ok(layout_, position, dynamics_.spawn_margin);
}

double PointHazardEnv::distance_to_goal(const Vec2& position) const {
  return (position - layout_.goal).norm();
}

EnvState PointHazardEnv::reset(std::uint64_t seed) const {
  EnvState state;
  state.rng.seed(seed);
  const double hw = layout_.arena_half_width;
  std::uniform_real_distribution<double> coord(-hw, hw);
  for (int draw = 0; draw < kMaxSpawnDraws; ++draw) {
    const Vec2 p(coord(state.rng), coord(state.rng));
    if (spawn_ok(layout_, p, dynamics_.spawn_margin)) {
      state.position = p;
      state.velocity.setZero();
      state.step = 0;
      return state;
    }
  }
  throw LayoutError("reset: safe spawn region is empty");
}

StepResult PointHazardEnv::step(const EnvState& state,
                                const Eigen::VectorXd& action) const {
  if (state.step >= spec_.horizon) {
    throw ProtocolError("step: episode already finished at step " +
                        std::to_string(state.step));
  }
  if (action.size() != kActionDim || !action.allFinite()) {
    throw DomainError("step: action must be 2 finite values");
  }
  const Vec2 a = action.cwiseMax(spec_.action_low)
                     .cwiseMin(spec_.action_high)
                     .head<2>();
  StepResult out;
  out.next = state;
  EnvState& next = out.next;
  Vec2 xi = Vec2::Zero();
  if (dynamics_.noise > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    xi.x() = normal(next.rng);
    xi.y() = normal(next.rng);
  }
  next.velocity = dynamics_.damping * state.velocity + dynamics_.dt * a +
                  dynamics_.noise * xi;
  next.position = state.position + dynamics_.dt * next.velocity;
  // Inelastic walls: clamp the position and drop the velocity component
  // that points out of the arena.
  const double hw = layout_.arena_half_width;
  for (int i = 0; i < 2; ++i) {
    if (next.position[i] > hw) {
      next.position[i] = hw;
      next.velocity[i] = std::min(next.velocity[i], 0.0);
    } else if (next.position[i] < -hw) {
      next.position[i] = -hw;
      next.velocity[i] = std::max(next.velocity[i], 0.0);
    }
  }
  next.step = state.step + 1;

  const double d_prev = distance_to_goal(state.position);
  const double d_next = distance_to_goal(next.position);
  out.reward = d_prev - d_next;
  if (d_next <= layout_.goal_radius) out.reward += dynamics_.goal_bonus;
  out.cost = in_hazard(next.position) ? 1.0 : 0.0;
  out.done = next.step >= spec_.horizon;
  return out;
}

}  // namespace safemb::envs
