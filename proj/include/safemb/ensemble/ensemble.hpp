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

// Probabilistic ensemble of Gaussian dynamics models. Each member maps a
// normalized (s, a) to the mean and log-variance of the state delta
// s' - s, a reward mean and a cost logit. The set of members is the
// plausible-model set used for pessimistic constraint evaluation.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "safemb/diffcore/mlp.hpp"
#include "safemb/diffcore/tape.hpp"
#include "safemb/ensemble/replay_buffer.hpp"
#include "safemb/json_util.hpp"

namespace safemb::ensemble {

inline constexpr double kMinVariance = 1e-6;
inline constexpr double kMaxVariance = 1e2;
inline constexpr double kMinNormStd = 1e-8;

struct FitConfig {
  int members = 5;
  int hidden = 64;
  int epochs = 20;  // passes over each member's bootstrap sample
  int batch_size = 128;
  // Caps minibatches per pass; 0 means a full pass.
  int max_batches_per_epoch = 50;
  double learning_rate = 1e-3;
  std::size_t min_transitions = 200;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  Json to_json() const;
  static FitConfig from_json(const Json& j);
  void validate() const;
};

struct Normalizer {
  Eigen::VectorXd input_mean;  // n + m
  Eigen::VectorXd input_std;
  Eigen::VectorXd delta_mean;  // n
  Eigen::VectorXd delta_std;
  double reward_mean = 0.0;
  double reward_std = 1.0;

  static Normalizer from_batch(const TransitionBatch& data);
  diff::Array normalize_inputs(const diff::Array& states,
                               const diff::Array& actions) const;
};

struct MemberParams {
  diff::Mlp net;
};

struct Prediction {
  Eigen::VectorXd mean;      // next-state mean
  Eigen::VectorXd variance;  // next-state variance, clamped
  double reward = 0.0;
  double cost_prob = 0.0;
};

struct BatchPrediction {
  diff::Array mean;
  diff::Array variance;
  diff::Array reward;     // B x 1
  diff::Array cost_prob;  // B x 1
};

// Tape nodes for one member's prediction on a batch of (s, a).
struct MemberGraph {
  diff::NodeId next_mean;
  diff::NodeId log_var;
  diff::NodeId reward;
  diff::NodeId cost_logit;
};

// Normalization statistics frozen as tape constants.
struct NormalizerNodes {
  diff::NodeId input_mean;
  diff::NodeId input_inv_std;
  diff::NodeId delta_mean;
  diff::NodeId delta_std;
  diff::NodeId two_log_delta_std;
};

class EnsembleModel {
 public:
  EnsembleModel() = default;
  EnsembleModel(int state_dim, int action_dim, std::vector<MemberParams> members,
                Normalizer normalizer, FitConfig config);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  std::size_t size() const { return members_.size(); }
  const MemberParams& member(std::size_t i) const { return members_.at(i); }
  std::vector<MemberParams>& members() { return members_; }
  const Normalizer& normalizer() const { return normalizer_; }
  const FitConfig& config() const { return config_; }

  Prediction predict(std::size_t member, const Eigen::VectorXd& s,
                     const Eigen::VectorXd& a) const;
  BatchPrediction predict_batch(std::size_t member, const diff::Array& states,
                                const diff::Array& actions) const;
  // s' = mean + sqrt(variance) * xi with xi ~ N(0, I) from `rng`.
  Eigen::VectorXd sample_next(std::size_t member, const Eigen::VectorXd& s,
                              const Eigen::VectorXd& a,
                              std::mt19937_64& rng) const;
  // Same draw with caller-provided standard normal noise.
  Eigen::VectorXd sample_next(std::size_t member, const Eigen::VectorXd& s,
                              const Eigen::VectorXd& a,
                              const Eigen::VectorXd& xi) const;

  NormalizerNodes add_normalizer(diff::Tape& tape) const;
  // Appends a member's prediction for (states, actions) to `tape`.
  MemberGraph add_member(diff::Tape& tape, const diff::MlpNodes& net,
                         const NormalizerNodes& norm, diff::NodeId states,
                         diff::NodeId actions) const;

  Json to_json() const;
  static EnsembleModel from_json(const Json& j);

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  std::vector<MemberParams> members_;
  Normalizer normalizer_;
  FitConfig config_;
};

struct FitReport {
  // loss[member][epoch]: mean minibatch loss of that pass.
  std::vector<std::vector<double>> loss;
  std::size_t steps = 0;
  double first_epoch_loss() const;
  double final_epoch_loss() const;
};

struct FitResult {
  EnsembleModel model;
  FitReport report;
};

// Trains every member on the buffer. With `warm_start`, members continue
// from its parameters (same architecture required); otherwise they are
// freshly initialized. Throws TrainingError on insufficient data or a
// non-finite loss.
FitResult fit(const ReplayBuffer& buffer, const FitConfig& config,
              const EnsembleModel* warm_start = nullptr);

void save_checkpoint(const EnsembleModel& model, const std::string& path);
EnsembleModel load_checkpoint(const std::string& path);

}  // namespace safemb::ensemble
