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


#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "fixtures.hpp"
#include "safemb/errors.hpp"
#include "safemb/harness/cli.hpp"
#include "safemb/harness/metrics.hpp"
#include "safemb/harness/report.hpp"
#include "safemb/harness/sweep.hpp"
#include "test_util.hpp"

using namespace safemb;
using namespace safemb::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

EpochRecord record(int epoch, double accumulated, double objective,
                   double constraint) {
  EpochRecord r;
  r.epoch = epoch;
  r.env_steps = 400L * epoch;
  r.accumulated_cost = accumulated;
  r.objective = objective;
  r.constraint = constraint;
  r.eta = 0.1;
  return r;
}

// Three epochs whose final accumulated cost is `final_cost`.
RunMetrics run_with_final(const std::string& arm, std::uint64_t seed,
                          double final_cost) {
  RunMetrics m;
  m.header.arm = arm;
  m.header.seed = seed;
  m.header.config = agent::TrainConfig{}.to_json();
  m.header.config_hash = config_hash(m.header.config);
  m.records = {record(1, final_cost / 4, 0.1, 1.0),
               record(2, final_cost / 2, 0.2 * seed, 2.0),
               record(3, final_cost, 0.3, 3.0 * seed)};
  return m;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "safemb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code =
      run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("metrics: header, records and abort round-trip through the file") {
  test::TempDir dir("metrics");
  const std::string path = dir.str("m.jsonl");
  const RunMetrics src = run_with_final("lbsgd", 2, 8.0);
  {
    MetricsWriter w(path);
    w.write_header(src.header);
    for (const auto& r : src.records) w.append(r);
    w.write_abort(4, "infeasible iterate");
  }
  const RunMetrics m = read_metrics(path);
  CHECK(m.header.arm == "lbsgd");
  CHECK(m.header.seed == 2);
  CHECK(m.header.schema_version == kMetricsSchemaVersion);
  CHECK(m.header.config_hash == src.header.config_hash);
  REQUIRE(m.records.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(m.records[k].same_values(src.records[k]));
  CHECK(m.aborted);
  CHECK(m.abort_reason == "infeasible iterate");
  CHECK(m.final_accumulated_cost() == 8.0);
}

TEST_CASE("metrics: a truncated final line is skipped, complete lines parse") {
  test::TempDir dir("trunc");
  const std::string path = dir.str("m.jsonl");
  const RunMetrics src = run_with_final("lagrangian", 1, 6.0);
  {
    MetricsWriter w(path);
    w.write_header(src.header);
    for (const auto& r : src.records) w.append(r);
  }
  std::string text = slurp(path);
  const std::string partial = src.records[0].to_json().dump();
  write_text(path, text + partial.substr(0, partial.size() / 2));
  const RunMetrics m = read_metrics(path);
  CHECK(m.records.size() == 3);
  CHECK_FALSE(m.aborted);

  // A corrupt line that is not the last one is an error.
  write_text(path, text + "{bad\n" + partial + "\n");
  CHECK_THROWS_AS(read_metrics(path), Error);
}

TEST_CASE("same_values ignores wall time only") {
  EpochRecord a = record(1, 2.0, 3.0, 4.0);
  EpochRecord b = a;
  b.wall_time = 99.0;
  CHECK(a.same_values(b));
  b.violations = 1;
  CHECK_FALSE(a.same_values(b));
  b = a;
  b.eta = std::nextafter(a.eta, 1.0);
  CHECK_FALSE(a.same_values(b));
}

TEST_CASE("config hash changes with any field and only then") {
  const Json base = agent::TrainConfig{}.to_json();
  CHECK(config_hash(base) == config_hash(agent::TrainConfig{}.to_json()));
  CHECK(config_hash(base).size() >= 16);
  int fields = 0;
  for (auto it = base.begin(); it != base.end(); ++it) {
    if (!it.value().is_number()) continue;
    Json changed = base;
    changed[it.key()] = it.value().get<double>() + 1.0;
    CAPTURE(it.key());
    CHECK(config_hash(changed) != config_hash(base));
    ++fields;
  }
  CHECK(fields > 5);
  Json nested = base;
  nested["model"]["hidden"] = 65;
  CHECK(config_hash(nested) != config_hash(base));
}

TEST_CASE("statistics helpers") {
  CHECK(population_std({3, 5, 7}) == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(population_std({4}) == 0.0);
  CHECK(median({5, 1, 3}) == 3.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
}

TEST_CASE("report: final costs {3, 5, 7} give mean 5 and population std") {
  const ReportData d = summarize({{"lbsgd", run_with_final("lbsgd", 1, 3)},
                                  {"lbsgd", run_with_final("lbsgd", 2, 5)},
                                  {"lbsgd", run_with_final("lbsgd", 3, 7)}});
  REQUIRE(d.costs.size() == 1);
  CHECK(d.costs[0].mean == doctest::Approx(5.0));
  CHECK(d.costs[0].std == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(d.costs[0].median == 5.0);
  CHECK(d.budget == doctest::Approx(5.0));
  REQUIRE(d.curves.size() == 1);
  REQUIRE(d.curves[0].points.size() == 3);
  const CurvePoint& p = d.curves[0].points[2];
  CHECK(p.runs == 3);
  CHECK(p.constraint_median == 6.0);  // {3, 6, 9}
  CHECK(p.constraint_std == doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("report: a single run has zero spread everywhere") {
  const ReportData d = summarize({{"lagrangian", run_with_final("lagrangian", 1, 9)}});
  CHECK(d.costs[0].std == 0.0);
  for (const CurvePoint& p : d.curves[0].points) {
    CHECK(p.objective_std == 0.0);
    CHECK(p.constraint_std == 0.0);
  }
}

TEST_CASE("report: arms are ordered by mean final cost") {
  std::vector<LabeledRun> runs;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    runs.push_back({"lagrangian", run_with_final("lagrangian", s, 10.0 * s)});
    runs.push_back({"lbsgd", run_with_final("lbsgd", s, 4.0 * s)});
  }
  const ReportData d = summarize(runs);
  REQUIRE(d.costs.size() == 2);
  CHECK(d.costs[0].arm == "lbsgd");
  CHECK(d.costs[1].arm == "lagrangian");
  CHECK(d.curves[0].arm == "lbsgd");
  CHECK_THROWS_AS(summarize({}), ConfigError);
}

TEST_CASE("report tables document the std convention and render the budget line") {
  const ReportData d = summarize({{"lbsgd", run_with_final("lbsgd", 1, 3)}});
  CHECK(cost_summary_csv(d).find("population standard deviation") != std::string::npos);
  CHECK(curves_csv(d).find("population standard deviation") != std::string::npos);
  CHECK(curves_svg(d).find("budget d = 5") != std::string::npos);
  CHECK(cost_svg(d).find("<svg") != std::string::npos);
}

TEST_CASE("sweep: 2 seeds x 2 arms, deterministic, then a byte-identical report") {
  test::TempDir dir("sweep");
  SweepSpec spec;
  spec.base = test::tiny_train_config(0);
  spec.base.epochs = 2;
  spec.seeds = {1, 2};
  spec.arms = {lbsgd::OptimizerKind::kLbsgd, lbsgd::OptimizerKind::kLagrangian};
  spec.out_dir = dir.str("a");
  int progress = 0;
  const Manifest m = run_sweep(spec, [&](const RunEntry&) { ++progress; });
  CHECK(progress == 4);
  REQUIRE(m.runs.size() == 4);
  for (const RunEntry& e : m.runs) {
    CHECK(e.status == "ok");
    CHECK(fs::exists(fs::path(m.dir) / e.metrics_path));
    CHECK(fs::exists(fs::path(m.dir) / run_dir_name(e.arm, e.seed) / "checkpoints"));
  }
  const Manifest loaded = Manifest::load(dir.str("a/manifest.json"));
  CHECK(loaded.to_json() == m.to_json());

  spec.out_dir = dir.str("b");
  const Manifest again = run_sweep(spec);
  for (std::size_t k = 0; k < 4; ++k) {
    const RunMetrics x = read_metrics((fs::path(m.dir) / m.runs[k].metrics_path).string());
    const RunMetrics y =
        read_metrics((fs::path(again.dir) / again.runs[k].metrics_path).string());
    REQUIRE(x.records.size() == y.records.size());
    for (std::size_t e = 0; e < x.records.size(); ++e) {
      CHECK(x.records[e].same_values(y.records[e]));
    }
  }

  const ReportBundle r1 = report(m, dir.str("r1"));
  const ReportBundle r2 = report(m, dir.str("r2"));
  REQUIRE(r1.files.size() == 4);
  for (std::size_t k = 0; k < r1.files.size(); ++k) {
    CHECK(slurp(r1.files[k]) == slurp(r2.files[k]));
  }
}

TEST_CASE("sweep: a failing run is recorded and the others complete") {
  test::TempDir dir("isolation");
  SweepSpec spec;
  spec.base = test::tiny_train_config(0);
  spec.base.epochs = 2;
  spec.base.cost_budget = 0.0;
  spec.base.on_infeasible = agent::InfeasiblePolicy::kAbort;
  spec.seeds = {5};
  spec.arms = {lbsgd::OptimizerKind::kLbsgd, lbsgd::OptimizerKind::kLagrangian};
  spec.out_dir = dir.str();
  const Manifest m = run_sweep(spec);
  REQUIRE(m.runs.size() == 2);
  CHECK(m.runs[0].arm == "lbsgd");
  CHECK(m.runs[0].status == "failed");
  CHECK(m.runs[0].error.find("infeasible") != std::string::npos);
  CHECK(m.runs[1].status == "ok");
  const ReportBundle b = report(m, dir.str("report"));
  REQUIRE(b.data.costs.size() == 1);
  CHECK(b.data.costs[0].arm == "lagrangian");
}

TEST_CASE("sweep spec validation and loading") {
  test::TempDir dir("spec");
  SweepSpec s;
  s.seeds = {};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.seeds = {1, 1};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  write_json_file(dir.str("base.json"), Json{{"epochs", 4}});
  write_json_file(dir.str("sweep.json"),
                  Json{{"base", "base.json"}, {"seeds", {1, 2, 3}}});
  const SweepSpec l = SweepSpec::load(dir.str("sweep.json"));
  CHECK(l.base.epochs == 4);
  CHECK(l.seeds.size() == 3);
  CHECK(l.arms.size() == 2);
  CHECK_THROWS_AS(SweepSpec::from_json(Json{{"seeds", {1}}, {"seed", 2}}), ConfigError);
}

TEST_CASE("cli: train smoke run writes metrics") {
  test::TempDir dir("cli_train");
  write_json_file(dir.str("tiny.json"), test::tiny_train_config(0).to_json());
  const CliResult r = cli({"train", "--config", dir.str("tiny.json"), "--seed",
                           "1", "--out", dir.str("run")});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir.str("run/metrics.jsonl")));
  const RunMetrics m = read_metrics(dir.str("run/metrics.jsonl"));
  CHECK(m.records.size() == 3);
  CHECK(m.header.seed == 1);

  const CliResult e = cli({"evaluate", "--config", dir.str("tiny.json"),
                           "--checkpoint", dir.str("run/checkpoints/epoch_0003.json"),
                           "--episodes", "3"});
  CHECK(e.code == 0);
  const Json j = Json::parse(e.out);
  CHECK(j["returns"].size() == 3);
  CHECK(j.contains("Jc_hat"));
}

TEST_CASE("cli: bench-opt on ball-projection has a clean ledger") {
  test::TempDir dir("cli_bench");
  const CliResult r = cli({"bench-opt", "--problem", "ball-projection",
                           "--optimizer", "lbsgd", "--out", dir.str("b")});
  CHECK(r.code == 0);
  const Json s = read_json_file(dir.str("b/summary.json"));
  CHECK(s["violations"].get<long>() == 0);
  CHECK(s["error"].get<double>() <= 1e-2);
  std::ifstream in(dir.str("b/ledger.jsonl"));
  std::string line;
  long accepted = 0;
  while (std::getline(in, line)) {
    const Json e = Json::parse(line);
    if (e["accepted"].get<bool>()) {
      ++accepted;
      CHECK(e["J_c"].get<double>() < 0.0);
    }
  }
  CHECK(accepted > 0);
}

TEST_CASE("cli: errors give a nonzero exit and a diagnostic") {
  const CliResult missing =
      cli({"train", "--config", "/nonexistent/dir/tiny.json"});
  CHECK(missing.code != 0);
  CHECK(missing.err.find("/nonexistent/dir/tiny.json") != std::string::npos);
  CHECK(cli({"frobnicate"}).code != 0);
  const CliResult flag = cli({"train", "--bogus"});
  CHECK(flag.code != 0);
  CHECK(flag.err.find("train") != std::string::npos);
  CHECK(cli({}).code != 0);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"bench-opt", "--problem", "nope"}).code != 0);
}
