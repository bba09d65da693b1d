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

#include "safemb/diffcore/mlp.hpp"

#include <cmath>

#include "safemb/errors.hpp"

namespace safemb::diff {

Mlp::Mlp(const std::vector<int>& sizes, std::mt19937_64& rng,
         double output_scale) {
  if (sizes.size() < 2) throw ConfigError("mlp: need at least in and out");
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    if (fan_in < 1 || fan_out < 1) throw ConfigError("mlp: empty layer");
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    if (l + 2 == sizes.size()) bound *= output_scale;
    std::uniform_real_distribution<double> u(-bound, bound);
    Array w(fan_in, fan_out);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(Array::Zero(1, fan_out));
  }
}

Array Mlp::forward(const Array& x) const {
  Array h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Array z(h.rows(), weights_[l].cols());
    z.noalias() = h * weights_[l];
    z.rowwise() += biases_[l].row(0);
    if (l + 1 < weights_.size()) z = z.array().tanh().matrix();
    h = std::move(z);
  }
  return h;
}

int Mlp::input_dim() const {
  return weights_.empty() ? 0 : static_cast<int>(weights_.front().rows());
}

int Mlp::output_dim() const {
  return weights_.empty() ? 0 : static_cast<int>(weights_.back().cols());
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::VectorXd flat(static_cast<Index>(parameter_count()));
  Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (const Array* a : {&weights_[l], &biases_[l]}) {
      flat.segment(k, a->size()) =
          Eigen::Map<const Eigen::VectorXd>(a->data(), a->size());
      k += a->size();
    }
  }
  return flat;
}

void Mlp::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Index>(parameter_count())) {
    throw ShapeError("mlp: flat parameter vector has " +
                     std::to_string(flat.size()) + " entries, expected " +
                     std::to_string(parameter_count()));
  }
  Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (Array* a : {&weights_[l], &biases_[l]}) {
      Eigen::Map<Eigen::VectorXd>(a->data(), a->size()) =
          flat.segment(k, a->size());
      k += a->size();
    }
  }
}

MlpNodes Mlp::add_inputs(Tape& tape, const std::string& prefix) const {
  MlpNodes nodes;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const std::string i = std::to_string(l);
    nodes.weights.push_back(tape.input(prefix + "w" + i, weights_[l].rows(),
                                       weights_[l].cols()));
    nodes.biases.push_back(tape.input(prefix + "b" + i, 1,
                                      biases_[l].cols()));
  }
  return nodes;
}

MlpNodes Mlp::add_constants(Tape& tape) const {
  MlpNodes nodes;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    nodes.weights.push_back(tape.constant(weights_[l]));
    nodes.biases.push_back(tape.constant(biases_[l]));
  }
  return nodes;
}

void Mlp::bind(Tape& tape, const std::string& prefix) const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const std::string i = std::to_string(l);
    tape.bind(prefix + "w" + i, weights_[l]);
    tape.bind(prefix + "b" + i, biases_[l]);
  }
}

Eigen::VectorXd Mlp::flatten_gradients(const Gradients& grads,
                                       const std::string& prefix) const {
  Eigen::VectorXd flat(static_cast<Index>(parameter_count()));
  Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const std::string i = std::to_string(l);
    for (const std::string& name : {prefix + "w" + i, prefix + "b" + i}) {
      const Array& g = grads.at(name);
      flat.segment(k, g.size()) =
          Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
      k += g.size();
    }
  }
  return flat;
}

NodeId Mlp::apply(Tape& tape, const MlpNodes& nodes, NodeId x) {
  NodeId h = x;
  for (std::size_t l = 0; l < nodes.weights.size(); ++l) {
    h = tape.affine(h, nodes.weights[l], nodes.biases[l]);
    if (l + 1 < nodes.weights.size()) h = tape.tanh(h);
  }
  return h;
}

Json array_to_json(const Array& a) {
  Json rows = Json::array();
  for (Index r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Array array_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError("array: expected a non-empty list of rows");
  }
  Array a(static_cast<Index>(j.size()), static_cast<Index>(j[0].size()));
  for (Index r = 0; r < a.rows(); ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != a.cols()) {
      throw ConfigError("array: ragged rows");
    }
    for (Index c = 0; c < a.cols(); ++c) {
      a(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return a;
}

Json Mlp::to_json() const {
  Json layers = Json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    layers.push_back({{"w", array_to_json(weights_[l])},
                      {"b", array_to_json(biases_[l])}});
  }
  return layers;
}

Mlp Mlp::from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("mlp: expected layers");
  Mlp m;
  for (const Json& layer : j) {
    require_keys(layer, {"w", "b"}, "mlp layer");
    m.weights_.push_back(array_from_json(layer.at("w")));
    m.biases_.push_back(array_from_json(layer.at("b")));
    if (m.biases_.back().rows() != 1 ||
        m.biases_.back().cols() != m.weights_.back().cols()) {
      throw ConfigError("mlp: bias shape does not match weights");
    }
  }
  for (std::size_t l = 1; l < m.weights_.size(); ++l) {
    if (m.weights_[l].rows() != m.weights_[l - 1].cols()) {
      throw ConfigError("mlp: layer sizes do not chain");
    }
  }
  return m;
}

bool operator==(const Mlp& a, const Mlp& b) {
  return a.weights_ == b.weights_ && a.biases_ == b.biases_;
}

}  // namespace safemb::diff
