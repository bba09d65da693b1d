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

#include "safemb/lbsgd/lbsgd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "safemb/errors.hpp"
#include "safemb/lbsgd/barrier.hpp"

namespace safemb::lbsgd {

using Eigen::VectorXd;

Json LbsgdConfig::to_json() const {
  return Json{{"eta", eta},
              {"eta_decay", eta_decay},
              {"eta_min", eta_min},
              {"learning_rate", learning_rate},
              {"curvature_init", curvature_init},
              {"curvature_ema", curvature_ema},
              {"max_backtracks", max_backtracks},
              {"feasibility_margin", feasibility_margin}};
}

LbsgdConfig LbsgdConfig::from_json(const Json& j) {
  require_keys(j,
               {"eta", "eta_decay", "eta_min", "learning_rate",
                "curvature_init", "curvature_ema", "max_backtracks",
                "feasibility_margin"},
               "lbsgd");
  LbsgdConfig c;
  read_optional(j, "eta", c.eta, "lbsgd");
  read_optional(j, "eta_decay", c.eta_decay, "lbsgd");
  read_optional(j, "eta_min", c.eta_min, "lbsgd");
  read_optional(j, "learning_rate", c.learning_rate, "lbsgd");
  read_optional(j, "curvature_init", c.curvature_init, "lbsgd");
  read_optional(j, "curvature_ema", c.curvature_ema, "lbsgd");
  read_optional(j, "max_backtracks", c.max_backtracks, "lbsgd");
  read_optional(j, "feasibility_margin", c.feasibility_margin, "lbsgd");
  c.validate();
  return c;
}

void LbsgdConfig::validate() const {
  if (!(eta > 0.0) || !(eta_min > 0.0)) {
    throw ConfigError("lbsgd: eta and eta_min must be > 0");
  }
  if (!(eta_decay > 0.0 && eta_decay <= 1.0)) {
    throw ConfigError("lbsgd: eta_decay must be in (0, 1]");
  }
  if (!(learning_rate > 0.0)) {
    throw ConfigError("lbsgd: learning_rate must be > 0");
  }
  if (!(curvature_init >= 0.0) ||
      !(curvature_ema >= 0.0 && curvature_ema < 1.0)) {
    throw ConfigError("lbsgd: invalid curvature settings");
  }
  if (max_backtracks < 0) throw ConfigError("lbsgd: max_backtracks < 0");
  if (!(feasibility_margin >= 0.0)) {
    throw ConfigError("lbsgd: feasibility_margin must be >= 0");
  }
}

Json LedgerEntry::to_json() const {
  return Json{{"iterate", iterate},     {"eta", eta},
              {"gamma", step_size},     {"J", objective},
              {"J_c", constraint},      {"accepted", accepted},
              {"backtracks", backtracks}};
}

BarrierOptState BarrierOptState::from_config(const LbsgdConfig& c) {
  c.validate();
  BarrierOptState s;
  s.eta = c.eta;
  s.eta_decay = c.eta_decay;
  s.eta_min = c.eta_min;
  s.learning_rate = c.learning_rate;
  s.curvature = c.curvature_init;
  s.curvature_ema = c.curvature_ema;
  s.max_backtracks = c.max_backtracks;
  s.feasibility_margin = c.feasibility_margin;
  return s;
}

double adaptive_step_size(const VectorXd& barrier_grad,
                          const VectorXd& constraint_grad, double constraint,
                          double curvature, double learning_rate) {
  if (!(constraint < 0.0)) throw InfeasibleIterate(constraint);
  const double norm = barrier_grad.norm();
  if (norm == 0.0) return learning_rate;
  const double distance = -constraint;
  const double slope = std::abs(constraint_grad.dot(barrier_grad)) / norm;
  const double alpha = distance / (2.0 * (slope + curvature * distance));
  return std::min(learning_rate, alpha / norm);
}

StepOutcome lbsgd_step(const VectorXd& params, const VectorXd& objective_grad,
                       const VectorXd& constraint_grad, double objective,
                       double constraint, BarrierOptState& state,
                       const ConstraintFn& evaluate_constraint) {
  if (!(constraint < 0.0)) throw InfeasibleIterate(constraint);
  if (params.size() != objective_grad.size() ||
      params.size() != constraint_grad.size()) {
    throw ShapeError("lbsgd: parameter and gradient sizes differ");
  }

  if (state.previous_params && state.previous_constraint_gradient &&
      state.previous_params->size() == params.size()) {
    const double dx = (params - *state.previous_params).norm();
    if (dx > 0.0) {
      const double ratio =
          (constraint_grad - *state.previous_constraint_gradient).norm() / dx;
      if (std::isfinite(ratio)) {
        state.curvature = state.curvature_ema * state.curvature +
                          (1.0 - state.curvature_ema) * ratio;
      }
    }
  }
  state.previous_params = params;
  state.previous_constraint_gradient = constraint_grad;

  const VectorXd g =
      barrier_gradient(objective_grad, constraint_grad, constraint, state.eta);
  double gamma = adaptive_step_size(g, constraint_grad, constraint,
                                    state.curvature, state.learning_rate);

  StepOutcome out;
  out.params = params;
  out.constraint = constraint;
  for (int k = 0; k <= state.max_backtracks; ++k) {
    const VectorXd trial = params - gamma * g;
    const double c = evaluate_constraint(trial);
    if (c < -state.feasibility_margin) {
      out.params = trial;
      out.constraint = c;
      out.step_size = gamma;
      out.accepted = true;
      out.backtracks = k;
      break;
    }
    out.backtracks = k + 1;
    gamma *= 0.5;
  }
  if (!out.accepted) out.backtracks = state.max_backtracks;

  state.ledger.push_back(LedgerEntry{state.iterate, state.eta, out.step_size,
                                     objective, out.constraint, out.accepted,
                                     out.backtracks});
  ++state.iterate;
  return out;
}

void decay_eta(BarrierOptState& state) {
  state.eta = std::max(state.eta_min, state.eta * state.eta_decay);
}

void write_ledger(const std::vector<LedgerEntry>& ledger,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write ledger '" + path + "'");
  for (const LedgerEntry& e : ledger) out << e.to_json().dump() << "\n";
}

}  // namespace safemb::lbsgd
