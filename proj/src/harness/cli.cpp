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


#include "safemb/harness/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "safemb/agent/agent.hpp"
#include "safemb/harness/report.hpp"
#include "safemb/harness/sweep.hpp"
#include "safemb/lbsgd/bench.hpp"

namespace safemb::harness {

namespace fs = std::filesystem;

namespace {

std::string resolve_out(const std::string& path) {
  const char* root = std::getenv("SAFEMB_OUT_ROOT");
  if (root && *root && fs::path(path).is_relative()) {
    return (fs::path(root) / path).string();
  }
  return path;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c, const std::string& config_help) {
  app->add_option("--config", c.config, config_help);
  app->add_option("--seed", c.seed, "Random seed override");
  app->add_option("--out", c.out, "Output path");
}

std::string summary_line(const RunMetrics& m) {
  std::ostringstream o;
  o << m.header.arm << " seed " << m.header.seed << ": " << m.records.size()
    << " epochs, accumulated cost " << m.final_accumulated_cost()
    << ", model violations " << m.total_violations();
  if (!m.records.empty()) {
    o << ", final J " << m.records.back().objective << ", J_c "
      << m.records.back().constraint;
  }
  if (m.aborted) o << ", aborted: " << m.abort_reason;
  return o.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"safemb: safe model-based policy optimization with log barriers"};
  app.require_subcommand(1);

  Common train_opts;
  std::string train_optimizer;
  auto* train = app.add_subcommand("train", "Single training run");
  add_common(train, train_opts, "Training config file (JSON)");
  train->add_option("--optimizer", train_optimizer, "lbsgd or lagrangian");

  Common sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "Seeds x optimizer arms");
  add_common(sweep, sweep_opts, "Sweep spec file (JSON)");

  Common eval_opts;
  std::string checkpoint;
  int episodes = 10;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  add_common(evaluate, eval_opts, "Training config the checkpoint came from");
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")
      ->required();
  evaluate->add_option("--episodes", episodes, "Evaluation episodes")
      ->check(CLI::PositiveNumber);

  Common bench_opts;
  std::string problem, bench_optimizer;
  std::optional<double> noise;
  auto* bench = app.add_subcommand("bench-opt", "Optimizer-only benchmark");
  add_common(bench, bench_opts, "Bench config file (JSON)");
  bench->add_option("--problem", problem,
                    "ball-projection, linear-cut or "
                    "noisy-quadratic");
  bench->add_option("--optimizer", bench_optimizer, "lbsgd or lagrangian");
  bench->add_option("--noise", noise, "Evaluation noise scale");

  Common report_opts;
  auto* rep = app.add_subcommand("report", "Report bundle from a manifest");
  add_common(rep, report_opts, "Sweep manifest (manifest.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "safemb: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (train->parsed()) {
      if (train_opts.config.empty()) throw ConfigError("train: --config is required");
      agent::TrainConfig config = agent::TrainConfig::load(train_opts.config);
      if (train_opts.seed) config.seed = *train_opts.seed;
      if (!train_optimizer.empty()) {
        config.optimizer = lbsgd::parse_optimizer(train_optimizer);
      }
      const std::string dir = resolve_out(
          train_opts.out.empty()
              ? run_dir_name(lbsgd::optimizer_name(config.optimizer), config.seed)
              : train_opts.out);
      RunMetrics m = run_single(config, dir);
      out << summary_line(m) << "\n";
      out << "metrics: " << (fs::path(dir) / "metrics.jsonl").string() << "\n";
      return m.aborted ? 3 : 0;
    }
    if (sweep->parsed()) {
      if (sweep_opts.config.empty()) throw ConfigError("sweep: --config is required");
      SweepSpec spec = SweepSpec::load(sweep_opts.config);
      if (sweep_opts.seed) spec.seeds = {*sweep_opts.seed};
      if (!sweep_opts.out.empty()) spec.out_dir = sweep_opts.out;
      spec.out_dir = resolve_out(spec.out_dir);
      Manifest m = run_sweep(spec, [&](const RunEntry& e) {
        out << e.arm << " seed " << e.seed << ": " << e.status
            << (e.error.empty() ? "" : " (" + e.error + ")") << std::endl;
      });
      out << "manifest: " << (fs::path(m.dir) / "manifest.json").string()
          << "\n";
      for (const auto& r : m.runs) {
        if (r.status != "ok") return 3;
      }
      return 0;
    }
    if (evaluate->parsed()) {
      if (eval_opts.config.empty()) throw ConfigError("evaluate: --config is required");
      const agent::TrainConfig config = agent::TrainConfig::load(eval_opts.config);
      const agent::Checkpoint ck = agent::load_agent_checkpoint(checkpoint);
      const auto env = agent::make_env(config);
      auto rng = agent::make_stream(eval_opts.seed.value_or(config.seed), 7);
      const agent::EvalResult r = agent::evaluate(ck.policy, env, episodes, rng);
      const Json result = {{"checkpoint", checkpoint},
                           {"epoch", ck.epoch},
                           {"episodes", episodes},
                           {"J_hat", r.mean_return},
                           {"Jc_hat", r.mean_cost},
                           {"returns", r.returns},
                           {"costs", r.costs}};
      if (!eval_opts.out.empty()) {
        const std::string path = resolve_out(eval_opts.out);
        if (fs::path(path).has_parent_path()) {
          fs::create_directories(fs::path(path).parent_path());
        }
        write_json_file(path, result);
      }
      out << result.dump() << "\n";
      return 0;
    }
    if (bench->parsed()) {
      lbsgd::BenchConfig config;
      if (!bench_opts.config.empty()) {
        config = lbsgd::BenchConfig::from_json(read_json_file(bench_opts.config));
      }
      if (!problem.empty()) config.problem = problem;
      if (!bench_optimizer.empty()) {
        config.optimizer = lbsgd::parse_optimizer(bench_optimizer);
      }
      if (noise) config.noise = *noise;
      if (bench_opts.seed) config.seed = *bench_opts.seed;
      const lbsgd::BenchResult r = lbsgd::run_bench(config);
      const std::string dir = resolve_out(
          bench_opts.out.empty()
              ? "bench/" + config.problem + "-" + lbsgd::optimizer_name(config.optimizer)
              : bench_opts.out);
      fs::create_directories(dir);
      lbsgd::write_ledger(r.ledger, (fs::path(dir) / "ledger.jsonl").string());
      write_json_file((fs::path(dir) / "summary.json").string(), r.summary());
      out << r.summary().dump() << "\n";
      return 0;
    }
    if (rep->parsed()) {
      if (report_opts.config.empty()) {
        throw ConfigError("report: --config must name a manifest");
      }
      const Manifest m = Manifest::load(report_opts.config);
      const std::string dir = resolve_out(
          report_opts.out.empty() ? (fs::path(m.dir) / "report").string()
                                  : report_opts.out);
      const ReportBundle b = report(m, dir);
      for (const auto& c : b.data.costs) {
        out << c.arm << ": mean accumulated cost " << c.mean << " +- " << c.std
            << " (median " << c.median << ", " << c.finals.size()
            << " runs)\n";
      }
      for (const auto& f : b.files) out << "wrote " << f << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    err << "safemb: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace safemb::harness
