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

// Report bundle built from a sweep manifest:
//
//   cost_summary.csv    final accumulated training cost per arm
//   curves.csv          per-epoch median and std of the evaluation return
//                       and cost across seeds
//   accumulated_cost.svg, learning_curves.svg
//
// All standard deviations are population standard deviations. Output is a
// pure function of the metric files, so reruns are byte-identical.

#include <string>
#include <utility>
#include <vector>

#include "safemb/harness/metrics.hpp"
#include "safemb/harness/sweep.hpp"

namespace safemb::harness {

double population_std(const std::vector<double>& xs);
double median(std::vector<double> xs);

struct ArmCostSummary {
  std::string arm;
  std::vector<double> finals;  // one per run, in manifest order
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
};

struct CurvePoint {
  int epoch = 0;
  int runs = 0;
  double objective_median = 0.0;
  double objective_std = 0.0;
  double constraint_median = 0.0;
  double constraint_std = 0.0;
};

struct ArmCurves {
  std::string arm;
  std::vector<CurvePoint> points;
};

struct ReportData {
  double budget = 0.0;                 // per-episode budget at the desk horizon
  std::vector<ArmCostSummary> costs;   // ascending mean final cost
  std::vector<ArmCurves> curves;       // same arm order as `costs`
};

using LabeledRun = std::pair<std::string, RunMetrics>;  // (arm, metrics)

ReportData summarize(const std::vector<LabeledRun>& runs);

std::string cost_summary_csv(const ReportData& data);
std::string curves_csv(const ReportData& data);
std::string cost_svg(const ReportData& data);
std::string curves_svg(const ReportData& data);

struct ReportBundle {
  ReportData data;
  std::vector<std::string> files;
};

// Uses the runs with status "ok". Throws ConfigError when there are none.
ReportBundle report(const Manifest& manifest, const std::string& out_dir);

}  // namespace safemb::harness
