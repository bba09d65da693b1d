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

#include "safemb/diffcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "safemb/errors.hpp"

namespace safemb::diff {

double relative_error(double analytic, double numeric, double floor) {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport grad_check(
    const std::function<double(const Bindings&)>& f,
    const std::function<Gradients(const Bindings&)>& gradient,
    const Bindings& inputs, double h, double tol) {
  if (!(h > 0.0)) throw DomainError("grad_check: step h must be positive");
  GradCheckReport report;
  const Gradients analytic = gradient(inputs);
  Bindings probe = inputs;
  for (const auto& [name, value] : inputs) {
    auto g = analytic.find(name);
    if (g == analytic.end()) continue;
    Array& x = probe.at(name);
    for (Index r = 0; r < value.rows(); ++r) {
      for (Index c = 0; c < value.cols(); ++c) {
        const double x0 = value(r, c);
        x(r, c) = x0 + h;
        const double fp = f(probe);
        x(r, c) = x0 - h;
        const double fm = f(probe);
        x(r, c) = x0;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = g->second(r, c);
        const double err = relative_error(a, numeric);
        ++report.coordinates;
        if (!std::isfinite(err) || err > report.max_relative_error ||
            report.row < 0) {
          report.max_relative_error =
              std::isfinite(err) ? err : std::numeric_limits<double>::max();
          report.input = name;
          report.row = r;
          report.col = c;
          report.analytic = a;
          report.numeric = numeric;
        }
      }
    }
  }
  report.passed = report.max_relative_error <= tol;
  return report;
}

GradCheckReport grad_check(Tape& tape, const Bindings& inputs, double h,
                           double tol) {
  auto f = [&tape](const Bindings& b) { return tape.forward(b)(0, 0); };
  auto grad = [&tape](const Bindings& b) {
    tape.forward(b);
    return tape.backward();
  };
  return grad_check(f, grad, inputs, h, tol);
}

}  // namespace safemb::diff
