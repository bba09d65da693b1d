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


#include "safemb/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "safemb/agent/config.hpp"
#include "safemb/errors.hpp"

namespace safemb::harness {

namespace fs = std::filesystem;

namespace {

std::string num(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

std::string fixed(double x, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

const char* color(std::size_t i) { return kPalette[i % 6]; }

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Plot frame mapping data coordinates into a pixel box.
struct Frame {
  double x0, y0, w, h;  // pixel box
  double xmin, xmax, ymin, ymax;

  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
    return;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

void axes(std::ostringstream& o, const Frame& f, const std::string& xlabel,
          const std::string& ylabel, const std::string& title) {
  o << "<rect x=\"" << fixed(f.x0) << "\" y=\"" << fixed(f.y0)
    << "\" width=\"" << fixed(f.w) << "\" height=\"" << fixed(f.h)
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = f.ymin + (f.ymax - f.ymin) * k / 4.0;
    const double y = f.py(yv);
    o << "<line x1=\"" << fixed(f.x0 - 4) << "\" y1=\"" << fixed(y)
      << "\" x2=\"" << fixed(f.x0) << "\" y2=\"" << fixed(y)
      << "\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << fixed(f.x0 - 6) << "\" y=\"" << fixed(y + 4)
      << "\" font-size=\"11\" text-anchor=\"end\">" << num(yv, 3)
      << "</text>\n";
    const double xv = f.xmin + (f.xmax - f.xmin) * k / 4.0;
    const double x = f.px(xv);
    o << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(f.y0 + f.h)
      << "\" x2=\"" << fixed(x) << "\" y2=\"" << fixed(f.y0 + f.h + 4)
      << "\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(f.y0 + f.h + 16)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << num(xv, 3)
      << "</text>\n";
  }
  o << "<text x=\"" << fixed(f.x0 + f.w / 2) << "\" y=\""
    << fixed(f.y0 + f.h + 32) << "\" font-size=\"12\" text-anchor=\"middle\">"
    << xlabel << "</text>\n";
  o << "<text x=\"" << fixed(f.x0 - 48) << "\" y=\"" << fixed(f.y0 + f.h / 2)
    << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 "
    << fixed(f.x0 - 48) << " " << fixed(f.y0 + f.h / 2) << ")\">" << ylabel
    << "</text>\n";
  o << "<text x=\"" << fixed(f.x0 + f.w / 2) << "\" y=\"" << fixed(f.y0 - 10)
    << "\" font-size=\"13\" text-anchor=\"middle\">" << title << "</text>\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("report: cannot write " + path.string());
  out << text;
}

}  // namespace

double population_std(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

ReportData summarize(const std::vector<LabeledRun>& runs) {
  if (runs.empty()) throw ConfigError("report: no completed runs");
  ReportData data;
  bool have_budget = false;
  std::map<std::string, std::vector<const RunMetrics*>> by_arm;
  for (const auto& [arm, m] : runs) {
    by_arm[arm].push_back(&m);
    if (m.header.config.is_object() && !m.header.config.empty()) {
      const double b =
          agent::TrainConfig::from_json(m.header.config).episode_budget();
      if (have_budget && b != data.budget) {
        throw ConfigError("report: runs disagree on the cost budget");
      }
      data.budget = b;
      have_budget = true;
    }
  }
  for (const auto& [arm, ms] : by_arm) {
    ArmCostSummary c;
    c.arm = arm;
    for (const RunMetrics* m : ms) c.finals.push_back(m->final_accumulated_cost());
    c.mean = mean_of(c.finals);
    c.std = population_std(c.finals);
    c.median = median(c.finals);
    data.costs.push_back(c);
  }
  std::stable_sort(data.costs.begin(), data.costs.end(),
                   [](const ArmCostSummary& a, const ArmCostSummary& b) {
                     return a.mean < b.mean;
                   });
  for (const auto& c : data.costs) {
    ArmCurves curves;
    curves.arm = c.arm;
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> per_epoch;
    for (const RunMetrics* m : by_arm.at(c.arm)) {
      for (const auto& r : m->records) {
        per_epoch[r.epoch].first.push_back(r.objective);
        per_epoch[r.epoch].second.push_back(r.constraint);
      }
    }
    for (const auto& [epoch, vals] : per_epoch) {
      CurvePoint p;
      p.epoch = epoch;
      p.runs = static_cast<int>(vals.first.size());
      p.objective_median = median(vals.first);
      p.objective_std = population_std(vals.first);
      p.constraint_median = median(vals.second);
      p.constraint_std = population_std(vals.second);
      curves.points.push_back(p);
    }
    data.curves.push_back(curves);
  }
  return data;
}

std::string cost_summary_csv(const ReportData& data) {
  std::ostringstream o;
  o << "# final accumulated training cost per run; std is the population "
       "standard deviation\n";
  o << "arm,runs,mean,std,median,finals\n";
  for (const auto& c : data.costs) {
    o << c.arm << ',' << c.finals.size() << ',' << num(c.mean, 10) << ','
      << num(c.std, 10) << ',' << num(c.median, 10) << ',';
    for (std::size_t i = 0; i < c.finals.size(); ++i) {
      o << (i ? ";" : "") << num(c.finals[i], 10);
    }
    o << '\n';
  }
  return o.str();
}

std::string curves_csv(const ReportData& data) {
  std::ostringstream o;
  o << "# per-epoch median across seeds; std is the population standard "
       "deviation; budget "
    << num(data.budget, 10) << " per episode\n";
  o << "arm,epoch,runs,objective_median,objective_std,constraint_median,"
       "constraint_std\n";
  for (const auto& c : data.curves) {
    for (const auto& p : c.points) {
      o << c.arm << ',' << p.epoch << ',' << p.runs << ','
        << num(p.objective_median, 10) << ',' << num(p.objective_std, 10)
        << ',' << num(p.constraint_median, 10) << ','
        << num(p.constraint_std, 10) << '\n';
    }
  }
  return o.str();
}

std::string cost_svg(const ReportData& data) {
  const double W = 480, H = 340;
  double ymax = 0.0;
  for (const auto& c : data.costs) ymax = std::max(ymax, c.mean + c.std);
  if (!(ymax > 0.0)) ymax = 1.0;
  Frame f{70, 40, W - 100, H - 100, 0.0, static_cast<double>(data.costs.size()),
          0.0, ymax * 1.1};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
    << "\" height=\"" << H << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  axes(o, f, "arm", "accumulated cost",
       "Accumulated training cost (mean \xC2\xB1 std)");
  for (std::size_t i = 0; i < data.costs.size(); ++i) {
    const auto& c = data.costs[i];
    const double xl = f.px(i + 0.2), xr = f.px(i + 0.8);
    const double top = f.py(c.mean), base = f.py(0.0);
    o << "<rect x=\"" << fixed(xl) << "\" y=\"" << fixed(top) << "\" width=\""
      << fixed(xr - xl) << "\" height=\"" << fixed(base - top) << "\" fill=\""
      << color(i) << "\"/>\n";
    const double xm = f.px(i + 0.5);
    o << "<line x1=\"" << fixed(xm) << "\" y1=\"" << fixed(f.py(c.mean - c.std))
      << "\" x2=\"" << fixed(xm) << "\" y2=\"" << fixed(f.py(c.mean + c.std))
      << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    o << "<text x=\"" << fixed(xm) << "\" y=\"" << fixed(f.y0 + f.h + 48)
      << "\" font-size=\"12\" text-anchor=\"middle\">" << c.arm << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string curves_svg(const ReportData& data) {
  const double W = 900, H = 360;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double omin = xmin, omax = -xmin, cmin = 0.0, cmax = data.budget;
  for (const auto& c : data.curves) {
    for (const auto& p : c.points) {
      xmin = std::min(xmin, double(p.epoch));
      xmax = std::max(xmax, double(p.epoch));
      omin = std::min(omin, p.objective_median - p.objective_std);
      omax = std::max(omax, p.objective_median + p.objective_std);
      cmin = std::min(cmin, p.constraint_median - p.constraint_std);
      cmax = std::max(cmax, p.constraint_median + p.constraint_std);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
  if (!std::isfinite(omin)) omin = 0.0, omax = 1.0;
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  pad_range(omin, omax);
  pad_range(cmin, cmax);
  const Frame panels[2] = {{80, 40, 330, 250, xmin, xmax, omin, omax},
                           {530, 40, 330, 250, xmin, xmax, cmin, cmax}};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
    << "\" height=\"" << H << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  axes(o, panels[0], "epoch", "evaluation return", "Objective (median \xC2\xB1 std)");
  axes(o, panels[1], "epoch", "evaluation cost", "Constraint (median \xC2\xB1 std)");
  for (int k = 0; k < 2; ++k) {
    const Frame& f = panels[k];
    for (std::size_t i = 0; i < data.curves.size(); ++i) {
      const auto& pts = data.curves[i].points;
      if (pts.empty()) continue;
      auto mid = [&](const CurvePoint& p) {
        return k == 0 ? p.objective_median : p.constraint_median;
      };
      auto sd = [&](const CurvePoint& p) {
        return k == 0 ? p.objective_std : p.constraint_std;
      };
      o << "<polygon fill=\"" << color(i) << "\" fill-opacity=\"0.2\" points=\"";
      for (const auto& p : pts) {
        o << fixed(f.px(p.epoch)) << ',' << fixed(f.py(mid(p) + sd(p))) << ' ';
      }
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
        o << fixed(f.px(it->epoch)) << ','
          << fixed(f.py(mid(*it) - sd(*it))) << ' ';
      }
      o << "\"/>\n<polyline fill=\"none\" stroke=\"" << color(i)
        << "\" stroke-width=\"2\" points=\"";
      for (const auto& p : pts) {
        o << fixed(f.px(p.epoch)) << ',' << fixed(f.py(mid(p))) << ' ';
      }
      o << "\"/>\n";
    }
  }
  const Frame& fc = panels[1];
  const double yb = fc.py(data.budget);
  o << "<line x1=\"" << fixed(fc.x0) << "\" y1=\"" << fixed(yb) << "\" x2=\""
    << fixed(fc.x0 + fc.w) << "\" y2=\"" << fixed(yb)
    << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  o << "<text x=\"" << fixed(fc.x0 + fc.w - 4) << "\" y=\"" << fixed(yb - 5)
    << "\" font-size=\"11\" text-anchor=\"end\">budget d = "
    << num(data.budget, 4) << "</text>\n";
  for (std::size_t i = 0; i < data.curves.size(); ++i) {
    const double y = 320 + 16.0 * i;
    o << "<line x1=\"80\" y1=\"" << fixed(y) << "\" x2=\"100\" y2=\""
      << fixed(y) << "\" stroke=\"" << color(i) << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"106\" y=\"" << fixed(y + 4) << "\" font-size=\"11\">"
      << data.curves[i].arm << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

ReportBundle report(const Manifest& manifest, const std::string& out_dir) {
  std::vector<LabeledRun> runs;
  for (const auto& r : manifest.runs) {
    if (r.status != "ok") continue;
    const fs::path p = fs::path(manifest.dir) / r.metrics_path;
    runs.emplace_back(r.arm, read_metrics(p.string()));
  }
  if (runs.empty()) throw ConfigError("report: manifest has no completed runs");
  ReportBundle bundle;
  bundle.data = summarize(runs);
  fs::create_directories(out_dir);
  const std::pair<const char*, std::string> files[] = {
      {"cost_summary.csv", cost_summary_csv(bundle.data)},
      {"curves.csv", curves_csv(bundle.data)},
      {"accumulated_cost.svg", cost_svg(bundle.data)},
      {"learning_curves.svg", curves_svg(bundle.data)}};
  for (const auto& [name, text] : files) {
    const fs::path p = fs::path(out_dir) / name;
    write_text(p, text);
    bundle.files.push_back(p.string());
  }
  return bundle;
}

}  // namespace safemb::harness
