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

#include "safemb/agent/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "safemb/ensemble/replay_buffer.hpp"
#include "safemb/envs/layout_io.hpp"
#include "safemb/errors.hpp"
#include "safemb/pessimism/imagination.hpp"

namespace safemb::agent {

namespace fs = std::filesystem;
using Eigen::VectorXd;

namespace {

// Stream tags.
constexpr std::uint64_t kPolicyInit = 1;
constexpr std::uint64_t kCollect = 2;
constexpr std::uint64_t kImagine = 3;
constexpr std::uint64_t kModel = 4;
constexpr std::uint64_t kEval = 1u << 20;  // + epoch

std::string checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%04d.json", epoch);
  return buf;
}

struct EpochUpdate {
  int accepted = 0;
  int rejected = 0;
  int recovery = 0;
  long violations = 0;
  double final_constraint = 0.0;
};

// Restores feasibility under a refreshed model: first the newest earlier
// epoch-end policy that the model accepts, otherwise descent on the
// worst-case constraint. Returns false if neither succeeds.
bool recover(pessimism::PessimisticEvaluator& ev,
             const std::vector<VectorXd>& history, VectorXd& params,
             double& constraint, double learning_rate, int max_steps,
             int& steps) {
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (steps >= max_steps) return false;
    ++steps;
    const double c = ev.evaluate(*it).constraint;
    if (c < 0.0) {
      params = *it;
      constraint = c;
      return true;
    }
  }
  while (constraint >= 0.0) {
    if (steps >= max_steps) return false;
    const pessimism::BarrierTerms bt = ev.gradients(params, false);
    double gamma = learning_rate;
    bool improved = false;
    for (int k = 0; k <= 10 && !improved; ++k, gamma *= 0.5) {
      const VectorXd trial = params - gamma * bt.constraint_gradient;
      const double c = ev.evaluate(trial).constraint;
      if (c < constraint) {
        params = trial;
        constraint = c;
        improved = true;
      }
    }
    ++steps;
    if (!improved) return false;
  }
  return true;
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Trajectory collect_episode(const Policy& policy,
                           const envs::PointHazardEnv& env,
                           std::mt19937_64& rng, ActMode mode) {
  const envs::CMDPSpec& spec = env.spec();
  Trajectory traj;
  traj.seed = rng();
  traj.states.resize(spec.horizon, spec.state_dim);
  traj.actions.resize(spec.horizon, spec.action_dim);
  traj.rewards.resize(spec.horizon);
  traj.costs.resize(spec.horizon);
  envs::EnvState state = env.reset(traj.seed);
  for (int t = 0; t < spec.horizon; ++t) {
    const VectorXd s = envs::observe(state);
    const VectorXd a = policy.act(s, mode, rng);
    envs::StepResult r = env.step(state, a);
    traj.states.row(t) = s.transpose();
    traj.actions.row(t) = a.transpose();
    traj.rewards[t] = r.reward;
    traj.costs[t] = r.cost;
    state = std::move(r.next);
  }
  traj.terminal_state = envs::observe(state);
  return traj;
}

EvalResult evaluate(const Policy& policy, const envs::PointHazardEnv& env,
                    int episodes, std::mt19937_64& rng) {
  if (episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
  EvalResult out;
  for (int e = 0; e < episodes; ++e) {
    const Trajectory t = collect_episode(policy, env, rng, ActMode::kMean);
    out.returns.push_back(t.total_reward());
    out.costs.push_back(t.total_cost());
  }
  double r = 0.0;
  double c = 0.0;
  for (int e = 0; e < episodes; ++e) {
    r += out.returns[static_cast<std::size_t>(e)];
    c += out.costs[static_cast<std::size_t>(e)];
  }
  out.mean_return = r / episodes;
  out.mean_cost = c / episodes;
  return out;
}

envs::PointHazardEnv make_env(const TrainConfig& config) {
  envs::PointHazardLayout layout =
      config.layout_path.empty()
          ? envs::default_layout(config.layout_seed, config.layout_options)
          : envs::load_layout(config.layout_path);
  return envs::PointHazardEnv(std::move(layout), config.dynamics,
                              config.horizon, config.episode_budget());
}

Policy make_initial_policy(const TrainConfig& config,
                           const envs::PointHazardEnv& env) {
  std::mt19937_64 rng = make_stream(config.seed, kPolicyInit);
  const envs::CMDPSpec& spec = env.spec();
  return Policy(spec.state_dim, spec.action_dim, spec.action_low,
                spec.action_high, config.policy, rng);
}

Json Checkpoint::to_json() const {
  return Json{{"epoch", epoch},         {"policy", policy.to_json()},
              {"model", model.to_json()}, {"eta", eta},
              {"lambda", lambda},       {"mu", mu},
              {"J_hat", objective},     {"Jc_hat", constraint}};
}

Checkpoint Checkpoint::from_json(const Json& j) {
  require_keys(j,
               {"epoch", "policy", "model", "eta", "lambda", "mu", "J_hat",
                "Jc_hat"},
               "checkpoint");
  Checkpoint c;
  c.epoch = j.at("epoch").get<int>();
  c.policy = Policy::from_json(j.at("policy"));
  c.model = ensemble::EnsembleModel::from_json(j.at("model"));
  c.eta = j.at("eta").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.mu = j.at("mu").get<double>();
  c.objective = j.at("J_hat").get<double>();
  c.constraint = j.at("Jc_hat").get<double>();
  return c;
}

Checkpoint load_agent_checkpoint(const std::string& path) {
  return Checkpoint::from_json(read_json_file(path));
}

void save_agent_checkpoint(const Checkpoint& checkpoint,
                           const std::string& path) {
  write_json_file(path, checkpoint.to_json(), -1);
}

TrainResult train(const TrainConfig& config, const TrainSink& sink,
                  const TrainOptions& options) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const envs::PointHazardEnv env = make_env(config);
  const envs::CMDPSpec& spec = env.spec();
  const double episode_budget = config.episode_budget();
  const double offset = config.imagination_offset();

  TrainResult result;
  result.policy = make_initial_policy(config, env);
  harness::RunHeader& header = result.metrics.header;
  header.config = config.to_json();
  header.config_hash = harness::config_hash(header.config);
  header.seed = config.seed;
  header.arm = lbsgd::optimizer_name(config.optimizer);
  header.start_time = harness::utc_timestamp();
  if (sink.on_header) sink.on_header(header);

  std::mt19937_64 collect_rng = make_stream(config.seed, kCollect);
  std::mt19937_64 imagine_rng = make_stream(config.seed, kImagine);
  ensemble::ReplayBuffer buffer(spec.state_dim, spec.action_dim);
  lbsgd::BarrierOptState barrier =
      lbsgd::BarrierOptState::from_config(config.lbsgd);
  lbsgd::LagrangianOptState lagrange =
      lbsgd::LagrangianOptState::from_config(config.lagrangian);
  const bool use_barrier = config.optimizer == lbsgd::OptimizerKind::kLbsgd;

  double accumulated_cost = 0.0;
  long violations = 0;
  long env_steps = 0;
  double best_objective = -std::numeric_limits<double>::infinity();
  std::vector<std::string> kept;
  if (options.checkpoint_dir) fs::create_directories(*options.checkpoint_dir);

  // Epoch-end policies, oldest first, for recovery.
  std::vector<VectorXd> history{result.policy.parameters()};

  int epoch = 1;
  auto abort_run = [&](const std::string& reason) {
    result.metrics.aborted = true;
    result.metrics.abort_reason = reason;
    if (sink.on_abort) sink.on_abort(epoch, reason);
  };

  try {
    for (; epoch <= config.epochs; ++epoch) {
      harness::EpochRecord rec;
      rec.epoch = epoch;

      // Collect.
      for (int e = 0; e < config.episodes_per_epoch; ++e) {
        const Trajectory traj = collect_episode(result.policy, env, collect_rng);
        buffer.append(traj);
        const double c = traj.total_cost();
        rec.epoch_cost += c;
        if (c > episode_budget) ++rec.exceedances;
        result.episode_costs.push_back(c);
        env_steps += traj.length();
      }
      accumulated_cost += rec.epoch_cost;
      result.buffer_sizes.push_back(buffer.size());

      // Fit.
      ensemble::FitConfig fit_config = config.model;
      fit_config.seed = make_stream(config.seed, kModel + 16u *
                                                 static_cast<std::uint64_t>(epoch))();
      const ensemble::EnsembleModel* warm =
          config.warm_start && result.model ? &*result.model : nullptr;
      ensemble::FitResult fitted = ensemble::fit(buffer, fit_config, warm);
      rec.model_loss = fitted.report.final_epoch_loss();
      result.model = std::move(fitted.model);

      // Improve.
      VectorXd params = result.policy.parameters();
      const pessimism::ImaginedBatch batch = pessimism::ImaginedBatch::sample(
          buffer, config.imagination_batch, config.imagination_horizon,
          imagine_rng, config.imagination_recent_episodes,
          config.imagination_cost_free_starts);
      pessimism::PessimisticEvaluator ev(result.policy, *result.model, batch,
                                         offset);
      double constraint = ev.evaluate(params).constraint;
      if (epoch > 1) {
        bool feasible = constraint < 0.0;
        if (!feasible) {
          if (use_barrier &&
              config.on_infeasible == InfeasiblePolicy::kAbort) {
            throw InfeasibleIterate(constraint);
          }
          if (use_barrier) {
            feasible = recover(ev, history, params, constraint,
                               config.lbsgd.learning_rate,
                               config.max_recovery_steps, rec.recovery_steps);
          }
        }
        for (int u = 0; u < config.policy_updates; ++u) {
          if (use_barrier) {
            if (!feasible) break;
            const pessimism::BarrierTerms bt = ev.gradients(params, true);
            const lbsgd::StepOutcome out = lbsgd::lbsgd_step(
                params, -bt.objective_gradient, bt.constraint_gradient,
                -bt.estimate.objective, bt.estimate.constraint, barrier,
                [&](const VectorXd& p) { return ev.evaluate(p).constraint; });
            if (out.accepted) {
              params = out.params;
              constraint = out.constraint;
              ++rec.accepted_updates;
              if (out.constraint >= 0.0) ++violations;
            } else {
              ++rec.rejected_updates;
            }
          } else {
            const pessimism::BarrierTerms bt = ev.gradients(params, false);
            params = lbsgd::lagrangian_step(params, -bt.objective_gradient,
                                            bt.constraint_gradient,
                                            bt.estimate.constraint, lagrange);
            constraint = ev.evaluate(params).constraint;
            ++rec.accepted_updates;
            if (constraint >= 0.0) ++violations;
          }
        }
        result.policy.set_parameters(params);
        if (feasible || !use_barrier) history.push_back(params);
      }
      rec.model_constraint = constraint;
      if (use_barrier) lbsgd::decay_eta(barrier);

      // Evaluate.
      std::mt19937_64 eval_rng =
          make_stream(config.seed, kEval + static_cast<std::uint64_t>(epoch));
      const EvalResult ev_result =
          evaluate(result.policy, env, config.eval_episodes, eval_rng);

      rec.env_steps = env_steps;
      rec.objective = ev_result.mean_return;
      rec.constraint = ev_result.mean_cost;
      rec.accumulated_cost = accumulated_cost;
      rec.eta = use_barrier ? barrier.eta : 0.0;
      rec.violations = violations;
      rec.wall_time = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      result.metrics.records.push_back(rec);
      if (sink.on_epoch) sink.on_epoch(rec);

      if (options.checkpoint_dir) {
        Checkpoint ck{epoch,
                      result.policy,
                      *result.model,
                      barrier.eta,
                      lagrange.lambda,
                      lagrange.mu,
                      rec.objective,
                      rec.constraint};
        const fs::path dir(*options.checkpoint_dir);
        const std::string path = (dir / checkpoint_name(epoch)).string();
        save_agent_checkpoint(ck, path);
        kept.push_back(path);
        while (static_cast<int>(kept.size()) > config.keep_checkpoints) {
          fs::remove(kept.front());
          kept.erase(kept.begin());
        }
        if (rec.constraint <= episode_budget &&
            rec.objective > best_objective) {
          best_objective = rec.objective;
          save_agent_checkpoint(ck, (dir / "best.json").string());
        }
      }
    }
  } catch (const InfeasibleIterate& e) {
    abort_run(e.what());
  } catch (const Error& e) {
    abort_run(e.what());
    throw;
  }

  result.ledger = std::move(barrier.ledger);
  result.buffer_size = buffer.size();
  return result;
}

}  // namespace safemb::agent
