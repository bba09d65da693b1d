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

namespace safemb::lbsgd {

// B = value - eta * log(-constraint). Throws InfeasibleIterate when
// constraint >= 0.
double barrier_value(double value, double constraint, double eta);

// Gradient of barrier_value: grad_value + eta * grad_constraint / (-constraint).
Eigen::VectorXd barrier_gradient(const Eigen::VectorXd& grad_value,
                                 const Eigen::VectorXd& grad_constraint,
                                 double constraint, double eta);

}  // namespace safemb::lbsgd
