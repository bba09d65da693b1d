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

#include "safemb/lbsgd/barrier.hpp"

#include <cmath>

#include "safemb/errors.hpp"

namespace safemb::lbsgd {

namespace {

void check(double constraint, double eta) {
  if (!(constraint < 0.0)) throw InfeasibleIterate(constraint);
  if (!(eta > 0.0)) throw DomainError("barrier: eta must be > 0");
}

}  // namespace

double barrier_value(double value, double constraint, double eta) {
  check(constraint, eta);
  return value - eta * std::log(-constraint);
}

Eigen::VectorXd barrier_gradient(const Eigen::VectorXd& grad_value,
                                 const Eigen::VectorXd& grad_constraint,
                                 double constraint, double eta) {
  check(constraint, eta);
  if (grad_value.size() != grad_constraint.size()) {
    throw ShapeError("barrier: gradient sizes differ");
  }
  return grad_value + (eta / -constraint) * grad_constraint;
}

}  // namespace safemb::lbsgd
