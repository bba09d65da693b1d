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

#include <functional>
#include <string>

#include "safemb/diffcore/tape.hpp"

namespace safemb::diff {

struct GradCheckReport {
  bool passed = true;
  double max_relative_error = 0.0;
  // Location of the worst coordinate.
  std::string input;
  Index row = -1;
  Index col = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// |a - b| / max(|a|, |b|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-8);

// Compares tape.backward() against central finite differences of
// tape.forward() at `inputs`, coordinate by coordinate. The tape's output
// must be scalar. Never throws for a mismatch; the report carries it.
GradCheckReport grad_check(Tape& tape, const Bindings& inputs, double h,
                           double tol);

// Same comparison for an arbitrary scalar function and a gradient provider,
// e.g. a hand-written adjoint under test.
GradCheckReport grad_check(
    const std::function<double(const Bindings&)>& f,
    const std::function<Gradients(const Bindings&)>& gradient,
    const Bindings& inputs, double h, double tol);

}  // namespace safemb::diff
