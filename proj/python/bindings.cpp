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


// Python bindings. Configs and results cross the boundary as plain dicts
// (through JSON), vectors as NumPy arrays.

#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "safemb/agent/agent.hpp"
#include "safemb/agent/config.hpp"
#include "safemb/envs/point_hazard.hpp"
#include "safemb/errors.hpp"
#include "safemb/harness/cli.hpp"
#include "safemb/harness/metrics.hpp"
#include "safemb/harness/report.hpp"
#include "safemb/harness/sweep.hpp"
#include "safemb/lbsgd/barrier.hpp"
#include "safemb/lbsgd/bench.hpp"
#include "safemb/lbsgd/lbsgd.hpp"
#include "safemb/pessimism/imagination.hpp"

namespace py = pybind11;
using namespace safemb;

namespace {

Json to_json(const py::object& obj) {
  const auto dumps = py::module_::import("json").attr("dumps");
  return Json::parse(dumps(obj).cast<std::string>());
}

py::object to_py(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

agent::TrainConfig config_from(const py::object& obj) {
  return obj.is_none() ? agent::TrainConfig{}
                       : agent::TrainConfig::from_json(to_json(obj));
}

py::dict metrics_dict(const harness::RunMetrics& m) {
  py::dict d;
  d["header"] = to_py(m.header.to_json());
  py::list records;
  for (const auto& r : m.records) records.append(to_py(r.to_json()));
  d["records"] = records;
  d["aborted"] = m.aborted;
  d["abort_reason"] = m.abort_reason;
  return d;
}

// Stateful wrapper over the functional environment API.
class Env {
 public:
  explicit Env(const py::object& config) : env_(agent::make_env(config_from(config))) {}

  Eigen::VectorXd reset(std::uint64_t seed) {
    state_ = env_.reset(seed);
    started_ = true;
    return envs::observe(state_);
  }

  py::tuple step(const Eigen::VectorXd& action) {
    if (!started_) throw ProtocolError("step: call reset first");
    envs::StepResult r = env_.step(state_, action);
    state_ = std::move(r.next);
    return py::make_tuple(envs::observe(state_), r.reward, r.cost, r.done);
  }

  int horizon() const { return env_.spec().horizon; }
  double budget() const { return env_.spec().budget; }
  py::object layout() const {
    const auto& l = env_.layout();
    py::list hazards;
    for (const auto& h : l.hazards) {
      hazards.append(py::make_tuple(h.center.x(), h.center.y(), h.radius));
    }
    py::dict d;
    d["goal"] = py::make_tuple(l.goal.x(), l.goal.y());
    d["goal_radius"] = l.goal_radius;
    d["arena_half_width"] = l.arena_half_width;
    d["hazards"] = hazards;
    return d;
  }

 private:
  envs::PointHazardEnv env_;
  envs::EnvState state_;
  bool started_ = false;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Safe model-based policy optimization with log barriers";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<BindingError>(m, "BindingError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<LayoutError>(m, "LayoutError", error.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", error.ptr());
  py::register_exception<InfeasibleIterate>(m, "InfeasibleIterate", error.ptr());

  m.def("barrier_value", &lbsgd::barrier_value, py::arg("value"),
        py::arg("constraint"), py::arg("eta"));
  m.def("barrier_gradient", &lbsgd::barrier_gradient, py::arg("grad_value"),
        py::arg("grad_constraint"), py::arg("constraint"), py::arg("eta"));
  m.def("adaptive_step_size", &lbsgd::adaptive_step_size,
        py::arg("barrier_grad"), py::arg("constraint_grad"),
        py::arg("constraint"), py::arg("curvature"), py::arg("learning_rate"));
  m.def("prorated_budget", &pessimism::prorated_budget,
        py::arg("episode_budget"), py::arg("episode_length"),
        py::arg("imagination_horizon"));

  m.def(
      "run_bench",
      [](const py::object& config) {
        const lbsgd::BenchConfig c = config.is_none()
                                         ? lbsgd::BenchConfig{}
                                         : lbsgd::BenchConfig::from_json(to_json(config));
        lbsgd::BenchResult r;
        {
          py::gil_scoped_release release;
          r = lbsgd::run_bench(c);
        }
        return to_py(r.summary());
      },
      py::arg("config") = py::none(),
      "Optimizer-only run on an analytic problem; returns the summary dict.");

  m.def(
      "default_config", [] { return to_py(agent::TrainConfig{}.to_json()); },
      "The full training config with every default filled in.");
  m.def(
      "validate_config",
      [](const py::object& config) { return to_py(config_from(config).to_json()); },
      py::arg("config"),
      "Parses a (partial) training config strictly and returns it completed.");

  m.def(
      "train",
      [](const py::object& config, const py::object& out_dir) {
        const agent::TrainConfig c = config_from(config);
        const std::string dir = out_dir.is_none() ? "" : out_dir.cast<std::string>();
        harness::RunMetrics metrics;
        {
          py::gil_scoped_release release;
          metrics = dir.empty() ? agent::train(c).metrics : harness::run_single(c, dir);
        }
        return metrics_dict(metrics);
      },
      py::arg("config") = py::none(), py::arg("out_dir") = py::none(),
      "Runs one training run; with out_dir, also writes metrics and checkpoints.");

  m.def(
      "read_metrics",
      [](const std::string& path) { return metrics_dict(harness::read_metrics(path)); },
      py::arg("path"));

  m.def(
      "report",
      [](const std::string& manifest, const std::string& out_dir) {
        const harness::ReportBundle b =
            harness::report(harness::Manifest::load(manifest), out_dir);
        py::list costs;
        for (const auto& c : b.data.costs) {
          py::dict d;
          d["arm"] = c.arm;
          d["finals"] = c.finals;
          d["mean"] = c.mean;
          d["std"] = c.std;
          d["median"] = c.median;
          costs.append(d);
        }
        py::dict d;
        d["budget"] = b.data.budget;
        d["costs"] = costs;
        d["files"] = b.files;
        return d;
      },
      py::arg("manifest"), py::arg("out_dir"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"safemb"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = harness::run_cli(static_cast<int>(argv.size()),
                                          argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process: (code, stdout, stderr).");

  py::class_<Env>(m, "Env", "PointHazard environment built from a training config.")
      .def(py::init<const py::object&>(), py::arg("config") = py::none())
      .def("reset", &Env::reset, py::arg("seed"))
      .def("step", &Env::step, py::arg("action"),
           "Returns (observation, reward, cost, done).")
      .def_property_readonly("horizon", &Env::horizon)
      .def_property_readonly("budget", &Env::budget)
      .def_property_readonly("layout", &Env::layout);
}
