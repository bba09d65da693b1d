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

#include "safemb/ensemble/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "safemb/errors.hpp"

namespace safemb::ensemble {
namespace {

using diff::Array;
using diff::NodeId;
using diff::Tape;
using Eigen::Index;
using Eigen::VectorXd;

const double kMinLogVar = std::log(kMinVariance);
const double kMaxLogVar = std::log(kMaxVariance);

Array row(const VectorXd& v) { return v.transpose(); }

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// exp(-softplus(-z)), written the same way the tape evaluates it.
double sigmoid(double z) { return std::exp(-softplus(-z)); }

struct Adam {
  VectorXd m;
  VectorXd v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit Adam(Index n) : m(VectorXd::Zero(n)), v(VectorXd::Zero(n)) {}

  void step(VectorXd& params, const VectorXd& grad, double lr) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    params.array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

std::mt19937_64 member_rng(std::uint64_t seed, std::size_t member) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(member), 0x5eedu};
  return std::mt19937_64(seq);
}

struct LossGraph {
  Tape tape;
  NodeId loss;
};

// Loss of one member on a minibatch of normalized inputs/targets:
// Gaussian NLL of the state delta + squared reward error + cost BCE, with
// deltas and rewards in normalized units.
LossGraph build_loss(const diff::Mlp& net, int n, int m, Index batch,
                     const Normalizer& norm) {
  LossGraph g;
  Tape& t = g.tape;
  const diff::MlpNodes params = net.add_inputs(t, "");
  const NodeId x = t.input("x", batch, n + m);
  const NodeId target = t.input("t", batch, n);
  const NodeId r = t.input("r", batch, 1);
  const NodeId c = t.input("c", batch, 1);
  const NodeId two_log_std =
      t.constant(row((2.0 * norm.delta_std.array().log()).matrix()));

  const NodeId out = diff::Mlp::apply(t, params, x);
  const NodeId mu = t.slice_cols(out, 0, n);
  const NodeId lv_phys = t.clamp(t.add(t.slice_cols(out, n, n), two_log_std),
                                 kMinLogVar, kMaxLogVar);
  const NodeId lv = t.sub(lv_phys, two_log_std);
  const NodeId r_hat = t.slice_cols(out, 2 * n, 1);
  const NodeId z = t.slice_cols(out, 2 * n + 1, 1);

  const double inv_b = 1.0 / static_cast<double>(batch);
  const NodeId nll =
      t.scale(t.sum(t.gaussian_logpdf(target, mu, lv)), -inv_b);
  const NodeId err = t.sub(r_hat, r);
  const NodeId mse = t.scale(t.sum(t.mul(err, err)), inv_b);
  const NodeId bce =
      t.scale(t.sum(t.sub(t.softplus(z), t.mul(c, z))), inv_b);
  g.loss = t.add(t.add(nll, mse), bce);
  t.set_output(g.loss);
  return g;
}

}  // namespace

Json FitConfig::to_json() const {
  return Json{{"members", members},
              {"hidden", hidden},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"max_batches_per_epoch", max_batches_per_epoch},
              {"learning_rate", learning_rate},
              {"min_transitions", min_transitions},
              {"bootstrap", bootstrap},
              {"seed", seed}};
}

FitConfig FitConfig::from_json(const Json& j) {
  require_keys(j,
               {"members", "hidden", "epochs", "batch_size",
                "max_batches_per_epoch", "learning_rate", "min_transitions",
                "bootstrap", "seed"},
               "model");
  FitConfig c;
  read_optional(j, "members", c.members, "model");
  read_optional(j, "hidden", c.hidden, "model");
  read_optional(j, "epochs", c.epochs, "model");
  read_optional(j, "batch_size", c.batch_size, "model");
  read_optional(j, "max_batches_per_epoch", c.max_batches_per_epoch, "model");
  read_optional(j, "learning_rate", c.learning_rate, "model");
  read_optional(j, "min_transitions", c.min_transitions, "model");
  read_optional(j, "bootstrap", c.bootstrap, "model");
  read_optional(j, "seed", c.seed, "model");
  c.validate();
  return c;
}

void FitConfig::validate() const {
  if (members < 1) throw ConfigError("model.members must be >= 1");
  if (hidden < 1) throw ConfigError("model.hidden must be >= 1");
  if (epochs < 1) throw ConfigError("model.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("model.batch_size must be >= 1");
  if (max_batches_per_epoch < 0) {
    throw ConfigError("model.max_batches_per_epoch must be >= 0");
  }
  if (!(learning_rate > 0.0)) {
    throw ConfigError("model.learning_rate must be > 0");
  }
  if (min_transitions < 1) {
    throw ConfigError("model.min_transitions must be >= 1");
  }
}

Normalizer Normalizer::from_batch(const TransitionBatch& data) {
  Normalizer norm;
  Array inputs(data.states.rows(), data.states.cols() + data.actions.cols());
  inputs << data.states, data.actions;
  const Array delta = data.next_states - data.states;
  auto stats = [](const Array& a, VectorXd& mean, VectorXd& std) {
    mean = a.colwise().mean().transpose();
    std.resize(a.cols());
    for (Index j = 0; j < a.cols(); ++j) {
      const double var = (a.col(j).array() - mean[j]).square().mean();
      std[j] = std::max(std::sqrt(var), kMinNormStd);
    }
  };
  stats(inputs, norm.input_mean, norm.input_std);
  stats(delta, norm.delta_mean, norm.delta_std);
  VectorXd rm;
  VectorXd rs;
  stats(data.rewards, rm, rs);
  norm.reward_mean = rm[0];
  norm.reward_std = rs[0];
  return norm;
}

Array Normalizer::normalize_inputs(const Array& states,
                                   const Array& actions) const {
  Array x(states.rows(), states.cols() + actions.cols());
  x << states, actions;
  x.rowwise() -= row(input_mean).row(0);
  const Array inv = row(input_std.cwiseInverse());
  return x.cwiseProduct(inv.replicate(x.rows(), 1));
}

EnsembleModel::EnsembleModel(int state_dim, int action_dim,
                             std::vector<MemberParams> members,
                             Normalizer normalizer, FitConfig config)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      members_(std::move(members)),
      normalizer_(std::move(normalizer)),
      config_(config) {
  if (members_.empty()) throw ConfigError("ensemble: needs >= 1 member");
  for (const MemberParams& p : members_) {
    if (p.net.input_dim() != state_dim + action_dim ||
        p.net.output_dim() != 2 * state_dim + 2) {
      throw ShapeError("ensemble: member network has the wrong shape");
    }
  }
  if ((normalizer_.input_std.array() < kMinNormStd).any() ||
      (normalizer_.delta_std.array() < kMinNormStd).any() ||
      normalizer_.reward_std < kMinNormStd) {
    throw ConfigError("ensemble: normalization std below floor");
  }
}

BatchPrediction EnsembleModel::predict_batch(std::size_t member,
                                             const Array& states,
                                             const Array& actions) const {
  if (states.cols() != state_dim_ || actions.cols() != action_dim_ ||
      states.rows() != actions.rows()) {
    throw ShapeError("ensemble: predict dimensions do not match the model");
  }
  if (!states.allFinite() || !actions.allFinite()) {
    throw DomainError("ensemble: non-finite model input");
  }
  const int n = state_dim_;
  const Array out =
      members_.at(member).net.forward(normalizer_.normalize_inputs(states,
                                                                   actions));
  const Index B = states.rows();
  BatchPrediction p;
  Array delta = out.leftCols(n).cwiseProduct(
      row(normalizer_.delta_std).replicate(B, 1));
  delta.rowwise() += row(normalizer_.delta_mean).row(0);
  p.mean = states + delta;
  Array lv = out.middleCols(n, n);
  lv.rowwise() +=
      row((2.0 * normalizer_.delta_std.array().log()).matrix()).row(0);
  p.variance = lv.cwiseMax(kMinLogVar).cwiseMin(kMaxLogVar).array().exp()
                   .matrix();
  p.reward = (out.col(2 * n).array() * normalizer_.reward_std +
               normalizer_.reward_mean).matrix();
  p.cost_prob = out.col(2 * n + 1).unaryExpr([](double z) {
    return sigmoid(z);
  });
  return p;
}

Prediction EnsembleModel::predict(std::size_t member, const VectorXd& s,
                                  const VectorXd& a) const {
  const BatchPrediction b = predict_batch(member, row(s), row(a));
  return Prediction{b.mean.row(0).transpose(), b.variance.row(0).transpose(),
                    b.reward(0, 0), b.cost_prob(0, 0)};
}

VectorXd EnsembleModel::sample_next(std::size_t member, const VectorXd& s,
                                    const VectorXd& a,
                                    const VectorXd& xi) const {
  const Prediction p = predict(member, s, a);
  return p.mean + p.variance.cwiseSqrt().cwiseProduct(xi);
}

VectorXd EnsembleModel::sample_next(std::size_t member, const VectorXd& s,
                                    const VectorXd& a,
                                    std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd xi(state_dim_);
  for (Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
  return sample_next(member, s, a, xi);
}

NormalizerNodes EnsembleModel::add_normalizer(Tape& tape) const {
  NormalizerNodes n;
  n.input_mean = tape.constant(row(normalizer_.input_mean));
  n.input_inv_std = tape.constant(row(normalizer_.input_std.cwiseInverse()));
  n.delta_mean = tape.constant(row(normalizer_.delta_mean));
  n.delta_std = tape.constant(row(normalizer_.delta_std));
  n.two_log_delta_std = tape.constant(
      row((2.0 * normalizer_.delta_std.array().log()).matrix()));
  return n;
}

MemberGraph EnsembleModel::add_member(Tape& tape, const diff::MlpNodes& net,
                                      const NormalizerNodes& norm,
                                      NodeId states, NodeId actions) const {
  const int n = state_dim_;
  const NodeId x = tape.mul(tape.sub(tape.concat_cols(states, actions),
                                     norm.input_mean),
                            norm.input_inv_std);
  const NodeId out = diff::Mlp::apply(tape, net, x);
  MemberGraph g;
  const NodeId delta = tape.add(
      tape.mul(tape.slice_cols(out, 0, n), norm.delta_std), norm.delta_mean);
  g.next_mean = tape.add(states, delta);
  g.log_var = tape.clamp(
      tape.add(tape.slice_cols(out, n, n), norm.two_log_delta_std),
      kMinLogVar, kMaxLogVar);
  g.reward = tape.add(
      tape.scale(tape.slice_cols(out, 2 * n, 1), normalizer_.reward_std),
      tape.constant(Array::Constant(1, 1, normalizer_.reward_mean)));
  g.cost_logit = tape.slice_cols(out, 2 * n + 1, 1);
  return g;
}

double FitReport::first_epoch_loss() const {
  double s = 0.0;
  for (const auto& l : loss) s += l.front();
  return s / static_cast<double>(loss.size());
}

double FitReport::final_epoch_loss() const {
  double s = 0.0;
  for (const auto& l : loss) s += l.back();
  return s / static_cast<double>(loss.size());
}

FitResult fit(const ReplayBuffer& buffer, const FitConfig& config,
              const EnsembleModel* warm_start) {
  config.validate();
  const std::size_t N = buffer.size();
  if (N < config.min_transitions) {
    throw TrainingError("fit: buffer holds " + std::to_string(N) +
                        " transitions, need at least " +
                        std::to_string(config.min_transitions));
  }
  const int n = buffer.state_dim();
  const int m = buffer.action_dim();
  const TransitionBatch data = buffer.all();
  const Normalizer norm = Normalizer::from_batch(data);

  // Normalized training arrays.
  const Array inputs = norm.normalize_inputs(data.states, data.actions);
  Array targets = data.next_states - data.states;
  targets.rowwise() -= row(norm.delta_mean).row(0);
  targets = targets.cwiseProduct(
      row(norm.delta_std.cwiseInverse()).replicate(targets.rows(), 1));

  std::vector<MemberParams> members;
  if (warm_start != nullptr) {
    if (warm_start->state_dim() != n || warm_start->action_dim() != m ||
        static_cast<int>(warm_start->size()) != config.members ||
        warm_start->config().hidden != config.hidden) {
      throw TrainingError("fit: warm start does not match the fit config");
    }
    for (std::size_t i = 0; i < warm_start->size(); ++i) {
      members.push_back(warm_start->member(i));
    }
  }

  const Index B = std::min<Index>(config.batch_size, static_cast<Index>(N));
  FitReport report;
  report.loss.resize(static_cast<std::size_t>(config.members));

  for (int i = 0; i < config.members; ++i) {
    const auto mi = static_cast<std::size_t>(i);
    std::mt19937_64 rng = member_rng(config.seed, mi);
    if (warm_start == nullptr) {
      members.push_back(
          {diff::Mlp({n + m, config.hidden, config.hidden, 2 * n + 2}, rng,
                     0.1)});
    }
    diff::Mlp& net = members[mi].net;

    std::vector<std::size_t> sample(N);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, N - 1);
      for (auto& s : sample) s = pick(rng);
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }

    LossGraph graph = build_loss(net, n, m, B, norm);
    Adam adam(static_cast<Index>(net.parameter_count()));
    VectorXd params = net.flatten();
    Array xb(B, n + m), tb(B, n), rb(B, 1), cb(B, 1);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(sample.begin(), sample.end(), rng);
      std::size_t batches = N / static_cast<std::size_t>(B);
      if (config.max_batches_per_epoch > 0) {
        batches = std::min(
            batches, static_cast<std::size_t>(config.max_batches_per_epoch));
      }
      double total = 0.0;
      for (std::size_t k = 0; k < batches; ++k) {
        for (Index r = 0; r < B; ++r) {
          const std::size_t idx =
              sample[k * static_cast<std::size_t>(B) + static_cast<std::size_t>(r)];
          const auto ii = static_cast<Index>(idx);
          xb.row(r) = inputs.row(ii);
          tb.row(r) = targets.row(ii);
          rb(r, 0) = (data.rewards(ii, 0) - norm.reward_mean) / norm.reward_std;
          cb(r, 0) = data.costs(ii, 0);
        }
        net.bind(graph.tape, "");
        graph.tape.bind("x", xb);
        graph.tape.bind("t", tb);
        graph.tape.bind("r", rb);
        graph.tape.bind("c", cb);
        const double loss = graph.tape.forward()(0, 0);
        if (!std::isfinite(loss)) {
          std::ostringstream os;
          os << "fit: non-finite loss in member " << i << ", epoch " << epoch
             << ", batch " << k << " (" << N << " transitions, lr "
             << config.learning_rate << ")";
          throw TrainingError(os.str());
        }
        total += loss;
        const VectorXd grad =
            net.flatten_gradients(graph.tape.backward(), "");
        adam.step(params, grad, config.learning_rate);
        net.unflatten(params);
        ++report.steps;
      }
      report.loss[mi].push_back(total / static_cast<double>(batches));
    }
  }
  return FitResult{EnsembleModel(n, m, std::move(members), norm, config),
                   std::move(report)};
}

Json EnsembleModel::to_json() const {
  auto vec = [](const VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  Json members = Json::array();
  for (const MemberParams& p : members_) members.push_back(p.net.to_json());
  return Json{
      {"schema_version", 1},
      {"state_dim", state_dim_},
      {"action_dim", action_dim_},
      {"fit_config", config_.to_json()},
      {"normalizer",
       {{"input_mean", vec(normalizer_.input_mean)},
        {"input_std", vec(normalizer_.input_std)},
        {"delta_mean", vec(normalizer_.delta_mean)},
        {"delta_std", vec(normalizer_.delta_std)},
        {"reward_mean", normalizer_.reward_mean},
        {"reward_std", normalizer_.reward_std}}},
      {"members", members},
  };
}

EnsembleModel EnsembleModel::from_json(const Json& j) {
  require_keys(j,
               {"schema_version", "state_dim", "action_dim", "fit_config",
                "normalizer", "members"},
               "ensemble");
  if (j.at("schema_version").get<int>() != 1) {
    throw ConfigError("ensemble: unsupported schema version");
  }
  auto vec = [](const Json& a) {
    const auto v = a.get<std::vector<double>>();
    return VectorXd(Eigen::Map<const VectorXd>(v.data(),
                                               static_cast<Index>(v.size())));
  };
  const Json& nj = j.at("normalizer");
  require_keys(nj,
               {"input_mean", "input_std", "delta_mean", "delta_std",
                "reward_mean", "reward_std"},
               "ensemble.normalizer");
  Normalizer norm{vec(nj.at("input_mean")),    vec(nj.at("input_std")),
                  vec(nj.at("delta_mean")),    vec(nj.at("delta_std")),
                  nj.at("reward_mean").get<double>(),
                  nj.at("reward_std").get<double>()};
  std::vector<MemberParams> members;
  for (const Json& mj : j.at("members")) {
    members.push_back({diff::Mlp::from_json(mj)});
  }
  return EnsembleModel(j.at("state_dim").get<int>(),
                       j.at("action_dim").get<int>(), std::move(members),
                       std::move(norm),
                       FitConfig::from_json(j.at("fit_config")));
}

}  // namespace safemb::ensemble
