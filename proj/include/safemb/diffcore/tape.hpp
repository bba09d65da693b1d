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

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape is built once (define-then-run), then evaluated with
// forward() for any binding of its named inputs and differentiated with
// backward(). Nodes are appended in construction order, which is a valid
// topological order by construction.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace safemb::diff {

using Array =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

using Bindings = std::map<std::string, Array>;
using Gradients = std::map<std::string, Array>;

enum class OpKind : std::uint8_t {
  kInput,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kScale,
  kMatMul,
  kAffine,
  kTanh,
  kExp,
  kLog,
  kSum,
  kMax,
  kSoftplus,
  kGaussianLogPdf,
  kClamp,
  kConcat,
  kSlice,
};

const char* to_string(OpKind kind);

struct Shape {
  Index rows = 0;
  Index cols = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(Shape shape);

// Handle to a node of one particular tape.
struct NodeId {
  std::int32_t index = -1;
  bool valid() const { return index >= 0; }
  friend bool operator==(const NodeId&, const NodeId&) = default;
};

class Tape {
 public:
  Tape() = default;

  // Leaves. Inputs are differentiable and must be bound before forward().
  NodeId input(const std::string& name, Index rows, Index cols);
  NodeId constant(Array value);
  NodeId constant(double value);

  // Elementwise binary ops. `b` may have the shape of `a`, be a 1 x cols row
  // (bias-style broadcast over rows) or a 1 x 1 scalar.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);

  NodeId matmul(NodeId a, NodeId b);
  // x * w + b, with b a 1 x cols row broadcast over the rows of x * w.
  NodeId affine(NodeId x, NodeId w, NodeId b);

  NodeId tanh(NodeId a);
  NodeId exp(NodeId a);
  // Throws DomainError during forward() if any entry is <= 0.
  NodeId log(NodeId a);
  NodeId softplus(NodeId a);
  NodeId clamp(NodeId a, double lo, double hi);

  // Sum of all entries, 1 x 1.
  NodeId sum(NodeId a);
  // Elementwise max of equal-shape operands. Ties route the adjoint to `a`.
  NodeId max(NodeId a, NodeId b);
  // Elementwise log N(x; mean, exp(log_var)), all operands of equal shape.
  NodeId gaussian_logpdf(NodeId x, NodeId mean, NodeId log_var);

  NodeId concat_cols(NodeId a, NodeId b);
  NodeId slice_cols(NodeId a, Index begin, Index count);

  void set_output(NodeId node);
  NodeId output() const { return output_; }

  // Binding invalidates any previous forward/backward results.
  void bind(const std::string& name, Array value);
  void bind(const Bindings& inputs);

  const Array& forward();
  const Array& forward(const Bindings& inputs);

  // Gradient of the (scalar) output with respect to every registered input.
  Gradients backward();
  Gradients backward(NodeId scalar_output);

  const Array& value(NodeId node) const;
  // Only valid after a backward pass.
  const Array& adjoint(NodeId node) const;
  Shape shape(NodeId node) const;
  OpKind kind(NodeId node) const;
  std::vector<NodeId> operands(NodeId node) const;
  std::size_t size() const { return nodes_.size(); }

  std::vector<std::string> input_names() const;
  NodeId input_node(const std::string& name) const;
  bool has_input(const std::string& name) const;
  bool evaluated() const { return evaluated_; }

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::int32_t c = -1;
    Shape shape;
    double p0 = 0.0;
    double p1 = 0.0;
    Index i0 = 0;
    Index i1 = 0;
    bool bound = false;
    Array value;
    Array adjoint;
  };

  NodeId push(Node node);
  const Node& at(NodeId id) const;
  Shape broadcast_shape(const char* op, NodeId a, NodeId b) const;
  void invalidate();
  void eval(Node& node);
  void accumulate(Node& node);

  std::vector<Node> nodes_;
  std::map<std::string, std::int32_t> inputs_;
  NodeId output_;
  bool evaluated_ = false;
  bool differentiated_ = false;
};

}  // namespace safemb::diff
