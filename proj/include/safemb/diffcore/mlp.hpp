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

// Fully connected tanh network with a linear output layer. The same
// parameters can be evaluated directly with Eigen or spliced into a Tape,
// either as differentiable inputs or as frozen constants.

#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "safemb/diffcore/tape.hpp"
#include "safemb/json_util.hpp"

namespace safemb::diff {

struct MlpNodes {
  std::vector<NodeId> weights;
  std::vector<NodeId> biases;
};

class Mlp {
 public:
  Mlp() = default;
  // sizes = {in, hidden..., out}. Weights ~ U(-1/sqrt(fan_in), +) with the
  // last layer additionally scaled by `output_scale`; biases start at zero.
  Mlp(const std::vector<int>& sizes, std::mt19937_64& rng,
      double output_scale = 1.0);

  Array forward(const Array& x) const;

  int input_dim() const;
  int output_dim() const;
  std::size_t layer_count() const { return weights_.size(); }
  std::size_t parameter_count() const;

  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);

  std::vector<Array>& weights() { return weights_; }
  std::vector<Array>& biases() { return biases_; }
  const std::vector<Array>& weights() const { return weights_; }
  const std::vector<Array>& biases() const { return biases_; }

  // Registers inputs "<prefix>w<i>" / "<prefix>b<i>".
  MlpNodes add_inputs(Tape& tape, const std::string& prefix) const;
  MlpNodes add_constants(Tape& tape) const;
  void bind(Tape& tape, const std::string& prefix) const;
  // Collects gradients of the named inputs into flatten() order.
  Eigen::VectorXd flatten_gradients(const Gradients& grads,
                                    const std::string& prefix) const;
  static NodeId apply(Tape& tape, const MlpNodes& nodes, NodeId x);

  Json to_json() const;
  static Mlp from_json(const Json& j);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<Array> weights_;
  std::vector<Array> biases_;
};

Json array_to_json(const Array& a);
Array array_from_json(const Json& j);

}  // namespace safemb::diff
