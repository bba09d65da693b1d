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

#include "safemb/diffcore/tape.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "safemb/errors.hpp"

namespace safemb::diff {
namespace {

enum class Broadcast { kNone, kRow, kScalar };

Broadcast broadcast_kind(Shape a, Shape b) {
  if (a == b) return Broadcast::kNone;
  if (b.rows == 1 && b.cols == a.cols) return Broadcast::kRow;
  return Broadcast::kScalar;
}

// Expands `b` to the shape of `a` according to the broadcast rule.
Array expand(const Array& b, Shape a) {
  switch (broadcast_kind(a, {b.rows(), b.cols()})) {
    case Broadcast::kNone:
      return b;
    case Broadcast::kRow:
      return b.replicate(a.rows, 1);
    case Broadcast::kScalar:
      return Array::Constant(a.rows, a.cols, b(0, 0));
  }
  return b;
}

// Folds an adjoint of shape `full` back onto a broadcast operand of shape
// `target`.
Array reduce(const Array& adj, Shape target) {
  switch (broadcast_kind({adj.rows(), adj.cols()}, target)) {
    case Broadcast::kNone:
      return adj;
    case Broadcast::kRow:
      return adj.colwise().sum();
    case Broadcast::kScalar:
      return Array::Constant(1, 1, adj.sum());
  }
  return adj;
}

double softplus_scalar(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAffine: return "affine";
    case OpKind::kTanh: return "tanh";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSum: return "sum";
    case OpKind::kMax: return "max";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kGaussianLogPdf: return "gaussian-logpdf";
    case OpKind::kClamp: return "clamp";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
  }
  return "unknown";
}

std::string to_string(Shape shape) {
  std::ostringstream os;
  os << shape.rows << "x" << shape.cols;
  return os.str();
}

NodeId Tape::push(Node node) {
  invalidate();
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::at(NodeId id) const {
  if (id.index < 0 || static_cast<std::size_t>(id.index) >= nodes_.size()) {
    throw ShapeError("tape: node id " + std::to_string(id.index) +
                     " does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(id.index)];
}

void Tape::invalidate() {
  evaluated_ = false;
  differentiated_ = false;
}

NodeId Tape::input(const std::string& name, Index rows, Index cols) {
  if (rows <= 0 || cols <= 0) {
    throw ShapeError("tape: input '" + name + "' needs a positive shape");
  }
  if (inputs_.contains(name)) {
    throw BindingError("tape: input '" + name + "' registered twice");
  }
  Node n;
  n.kind = OpKind::kInput;
  n.shape = {rows, cols};
  NodeId id = push(std::move(n));
  inputs_[name] = id.index;
  return id;
}

NodeId Tape::constant(Array value) {
  Node n;
  n.kind = OpKind::kConstant;
  n.shape = {value.rows(), value.cols()};
  n.value = std::move(value);
  n.bound = true;
  return push(std::move(n));
}

NodeId Tape::constant(double value) {
  return constant(Array::Constant(1, 1, value));
}

Shape Tape::broadcast_shape(const char* op, NodeId a, NodeId b) const {
  const Shape sa = at(a).shape;
  const Shape sb = at(b).shape;
  const bool ok = sa == sb || (sb.rows == 1 && sb.cols == sa.cols) ||
                  (sb.rows == 1 && sb.cols == 1);
  if (!ok) {
    throw ShapeError(std::string("tape: ") + op + " of " + to_string(sa) +
                     " and " + to_string(sb));
  }
  return sa;
}

NodeId Tape::add(NodeId a, NodeId b) {
  Node n;
  n.kind = OpKind::kAdd;
  n.shape = broadcast_shape("add", a, b);
  n.a = a.index;
  n.b = b.index;
  return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
  Node n;
  n.kind = OpKind::kSub;
  n.shape = broadcast_shape("sub", a, b);
  n.a = a.index;
  n.b = b.index;
  return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  Node n;
  n.kind = OpKind::kMul;
  n.shape = broadcast_shape("mul", a, b);
  n.a = a.index;
  n.b = b.index;
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
  Node n;
  n.kind = OpKind::kScale;
  n.shape = at(a).shape;
  n.a = a.index;
  n.p0 = factor;
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Shape sa = at(a).shape;
  const Shape sb = at(b).shape;
  if (sa.cols != sb.rows) {
    throw ShapeError("tape: matmul of " + to_string(sa) + " and " +
                     to_string(sb));
  }
  Node n;
  n.kind = OpKind::kMatMul;
  n.shape = {sa.rows, sb.cols};
  n.a = a.index;
  n.b = b.index;
  return push(std::move(n));
}

NodeId Tape::affine(NodeId x, NodeId w, NodeId b) {
  const Shape sx = at(x).shape;
  const Shape sw = at(w).shape;
  const Shape sb = at(b).shape;
  if (sx.cols != sw.rows || sb.rows != 1 || sb.cols != sw.cols) {
    throw ShapeError("tape: affine of x " + to_string(sx) + ", w " +
                     to_string(sw) + ", b " + to_string(sb));
  }
  Node n;
  n.kind = OpKind::kAffine;
  n.shape = {sx.rows, sw.cols};
  n.a = x.index;
  n.b = w.index;
  n.c = b.index;
  return push(std::move(n));
}

#define SAFEMB_UNARY(method, op_kind)   \
  NodeId Tape::method(NodeId a) {       \
    Node n;                             \
    n.kind = op_kind;                   \
    n.shape = at(a).shape;              \
    n.a = a.index;                      \
    return push(std::move(n));          \
  }

SAFEMB_UNARY(tanh, OpKind::kTanh)
SAFEMB_UNARY(exp, OpKind::kExp)
SAFEMB_UNARY(log, OpKind::kLog)
SAFEMB_UNARY(softplus, OpKind::kSoftplus)

#undef SAFEMB_UNARY

NodeId Tape::clamp(NodeId a, double lo, double hi) {
  if (!(lo < hi)) throw ShapeError("tape: clamp needs lo < hi");
  Node n;
  n.kind = OpKind::kClamp;
  n.shape = at(a).shape;
  n.a = a.index;
  n.p0 = lo;
  n.p1 = hi;
  return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
  Node n;
  n.kind = OpKind::kSum;
  n.shape = {1, 1};
  n.a = a.index;
  return push(std::move(n));
}

NodeId Tape::max(NodeId a, NodeId b) {
  if (!(at(a).shape == at(b).shape)) {
    throw ShapeError("tape: max of " + to_string(at(a).shape) + " and " +
                     to_string(at(b).shape));
  }
  Node n;
  n.kind = OpKind::kMax;
  n.shape = at(a).shape;
  n.a = a.index;
  n.b = b.index;
  return push(std::move(n));
}

NodeId Tape::gaussian_logpdf(NodeId x, NodeId mean, NodeId log_var) {
  const Shape s = at(x).shape;
  if (!(at(mean).shape == s) || !(at(log_var).shape == s)) {
    throw ShapeError("tape: gaussian-logpdf operands must share shape " +
                     to_string(s));
  }
  Node n;
  n.kind = OpKind::kGaussianLogPdf;
  n.shape = s;
  n.a = x.index;
  n.b = mean.index;
  n.c = log_var.index;
  return push(std::move(n));
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
  const Shape sa = at(a).shape;
  const Shape sb = at(b).shape;
  if (sa.rows != sb.rows) {
    throw ShapeError("tape: concat of " + to_string(sa) + " and " +
                     to_string(sb));
  }
  Node n;
  n.kind = OpKind::kConcat;
  n.shape = {sa.rows, sa.cols + sb.cols};
  n.a = a.index;
  n.b = b.index;
  return push(std::move(n));
}

NodeId Tape::slice_cols(NodeId a, Index begin, Index count) {
  const Shape sa = at(a).shape;
  if (begin < 0 || count <= 0 || begin + count > sa.cols) {
    throw ShapeError("tape: slice [" + std::to_string(begin) + ", +" +
                     std::to_string(count) + ") of " + to_string(sa));
  }
  Node n;
  n.kind = OpKind::kSlice;
  n.shape = {sa.rows, count};
  n.a = a.index;
  n.i0 = begin;
  n.i1 = count;
  return push(std::move(n));
}

void Tape::set_output(NodeId node) {
  at(node);
  output_ = node;
  differentiated_ = false;
}

void Tape::bind(const std::string& name, Array value) {
  auto it = inputs_.find(name);
  if (it == inputs_.end()) {
    throw BindingError("tape: no input named '" + name + "'");
  }
  Node& n = nodes_[static_cast<std::size_t>(it->second)];
  if (value.rows() != n.shape.rows || value.cols() != n.shape.cols) {
    throw ShapeError("tape: input '" + name + "' registered as " +
                     to_string(n.shape) + " but bound to " +
                     to_string({value.rows(), value.cols()}));
  }
  n.value = std::move(value);
  n.bound = true;
  invalidate();
}

void Tape::bind(const Bindings& inputs) {
  for (const auto& [name, value] : inputs) bind(name, value);
}

void Tape::eval(Node& n) {
  auto v = [this](std::int32_t i) -> const Array& {
    return nodes_[static_cast<std::size_t>(i)].value;
  };
  const Shape shape = n.shape;
  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kConstant:
      return;
    case OpKind::kAdd:
      if (broadcast_kind(shape, {v(n.b).rows(), v(n.b).cols()}) ==
          Broadcast::kRow) {
        n.value = v(n.a);
        n.value.rowwise() += v(n.b).row(0);
      } else {
        n.value = v(n.a) + expand(v(n.b), shape);
      }
      return;
    case OpKind::kSub:
      if (broadcast_kind(shape, {v(n.b).rows(), v(n.b).cols()}) ==
          Broadcast::kRow) {
        n.value = v(n.a);
        n.value.rowwise() -= v(n.b).row(0);
      } else {
        n.value = v(n.a) - expand(v(n.b), shape);
      }
      return;
    case OpKind::kMul:
      n.value = v(n.a).cwiseProduct(expand(v(n.b), shape));
      return;
    case OpKind::kScale:
      n.value = n.p0 * v(n.a);
      return;
    case OpKind::kMatMul:
      n.value.resize(shape.rows, shape.cols);
      n.value.noalias() = v(n.a) * v(n.b);
      return;
    case OpKind::kAffine:
      n.value.resize(shape.rows, shape.cols);
      n.value.noalias() = v(n.a) * v(n.b);
      n.value.rowwise() += v(n.c).row(0);
      return;
    case OpKind::kTanh:
      n.value = v(n.a).array().tanh().matrix();
      return;
    case OpKind::kExp:
      n.value = v(n.a).array().exp().matrix();
      return;
    case OpKind::kLog: {
      const Array& x = v(n.a);
      for (Index i = 0; i < x.size(); ++i) {
        if (!(x.data()[i] > 0.0)) {
          std::ostringstream os;
          os << "tape: log of non-positive value " << x.data()[i]
             << " at flat index " << i;
          throw DomainError(os.str());
        }
      }
      n.value = x.array().log().matrix();
      return;
    }
    case OpKind::kSoftplus:
      n.value = v(n.a).unaryExpr([](double x) { return softplus_scalar(x); });
      return;
    case OpKind::kClamp:
      n.value = v(n.a).cwiseMax(n.p0).cwiseMin(n.p1);
      return;
    case OpKind::kSum:
      n.value = Array::Constant(1, 1, v(n.a).sum());
      return;
    case OpKind::kMax:
      n.value = v(n.a).cwiseMax(v(n.b));
      return;
    case OpKind::kGaussianLogPdf: {
      const auto x = v(n.a).array();
      const auto m = v(n.b).array();
      const auto lv = v(n.c).array();
      n.value = (-0.5 * (kLog2Pi + lv + (x - m).square() * (-lv).exp()))
                    .matrix();
      return;
    }
    case OpKind::kConcat:
      n.value.resize(shape.rows, shape.cols);
      n.value << v(n.a), v(n.b);
      return;
    case OpKind::kSlice:
      n.value = v(n.a).middleCols(n.i0, n.i1);
      return;
  }
}

const Array& Tape::forward() {
  if (!output_.valid()) throw BindingError("tape: no output node set");
  for (const auto& [name, index] : inputs_) {
    if (!nodes_[static_cast<std::size_t>(index)].bound) {
      throw BindingError("tape: input '" + name + "' is not bound");
    }
  }
  for (Node& n : nodes_) eval(n);
  evaluated_ = true;
  differentiated_ = false;
  return nodes_[static_cast<std::size_t>(output_.index)].value;
}

const Array& Tape::forward(const Bindings& inputs) {
  bind(inputs);
  return forward();
}

void Tape::accumulate(Node& n) {
  auto node = [this](std::int32_t i) -> Node& {
    return nodes_[static_cast<std::size_t>(i)];
  };
  auto add_to = [&](std::int32_t i, const auto& contribution) {
    Node& target = node(i);
    if (target.kind == OpKind::kConstant) return;
    target.adjoint += contribution;
  };
  const Array& g = n.adjoint;
  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kConstant:
      return;
    case OpKind::kAdd:
      add_to(n.a, g);
      add_to(n.b, reduce(g, node(n.b).shape));
      return;
    case OpKind::kSub:
      add_to(n.a, g);
      add_to(n.b, -reduce(g, node(n.b).shape));
      return;
    case OpKind::kMul: {
      const Array& a = node(n.a).value;
      const Array& b = node(n.b).value;
      add_to(n.a, g.cwiseProduct(expand(b, n.shape)));
      add_to(n.b, reduce(g.cwiseProduct(a), node(n.b).shape));
      return;
    }
    case OpKind::kScale:
      add_to(n.a, n.p0 * g);
      return;
    case OpKind::kMatMul: {
      const Array& a = node(n.a).value;
      const Array& b = node(n.b).value;
      if (node(n.a).kind != OpKind::kConstant)
        node(n.a).adjoint.noalias() += g * b.transpose();
      if (node(n.b).kind != OpKind::kConstant)
        node(n.b).adjoint.noalias() += a.transpose() * g;
      return;
    }
    case OpKind::kAffine: {
      const Array& x = node(n.a).value;
      const Array& w = node(n.b).value;
      if (node(n.a).kind != OpKind::kConstant)
        node(n.a).adjoint.noalias() += g * w.transpose();
      if (node(n.b).kind != OpKind::kConstant)
        node(n.b).adjoint.noalias() += x.transpose() * g;
      add_to(n.c, g.colwise().sum());
      return;
    }
    case OpKind::kTanh:
      add_to(n.a, (g.array() * (1.0 - n.value.array().square())).matrix());
      return;
    case OpKind::kExp:
      add_to(n.a, g.cwiseProduct(n.value));
      return;
    case OpKind::kLog:
      add_to(n.a, g.cwiseQuotient(node(n.a).value));
      return;
    case OpKind::kSoftplus:
      add_to(n.a, g.cwiseProduct(node(n.a).value.unaryExpr(
                      [](double x) { return sigmoid(x); })));
      return;
    case OpKind::kClamp: {
      const double lo = n.p0;
      const double hi = n.p1;
      add_to(n.a, g.cwiseProduct(node(n.a).value.unaryExpr([=](double x) {
        return (x >= lo && x <= hi) ? 1.0 : 0.0;
      })));
      return;
    }
    case OpKind::kSum:
      add_to(n.a, Array::Constant(node(n.a).shape.rows,
                                  node(n.a).shape.cols, g(0, 0)));
      return;
    case OpKind::kMax: {
      const Array& a = node(n.a).value;
      const Array& b = node(n.b).value;
      // a >= b routes to a, so exact ties go to the first operand.
      const Array pick_a =
          (a.array() >= b.array()).cast<double>().matrix();
      add_to(n.a, g.cwiseProduct(pick_a));
      add_to(n.b, g.cwiseProduct(
                      (1.0 - pick_a.array()).matrix()));
      return;
    }
    case OpKind::kGaussianLogPdf: {
      const auto x = node(n.a).value.array();
      const auto m = node(n.b).value.array();
      const auto lv = node(n.c).value.array();
      const Array inv_var = (-lv).exp().matrix();
      const Array r = (x - m).matrix();
      const Array dx =
          (-g.array() * r.array() * inv_var.array()).matrix();
      add_to(n.a, dx);
      add_to(n.b, -dx);
      add_to(n.c, (-0.5 * g.array() *
                   (1.0 - r.array().square() * inv_var.array()))
                      .matrix());
      return;
    }
    case OpKind::kConcat: {
      const Index ca = node(n.a).shape.cols;
      add_to(n.a, g.leftCols(ca));
      add_to(n.b, g.rightCols(n.shape.cols - ca));
      return;
    }
    case OpKind::kSlice: {
      Node& src = node(n.a);
      if (src.kind != OpKind::kConstant)
        src.adjoint.middleCols(n.i0, n.i1) += g;
      return;
    }
  }
}

Gradients Tape::backward() {
  if (!output_.valid()) throw BindingError("tape: no output node set");
  return backward(output_);
}

Gradients Tape::backward(NodeId scalar_output) {
  const Node& out = at(scalar_output);
  if (!evaluated_) {
    throw BindingError("tape: backward() called before forward()");
  }
  if (out.shape.rows != 1 || out.shape.cols != 1) {
    throw ShapeError("tape: backward needs a scalar output, got " +
                     to_string(out.shape));
  }
  const auto last = static_cast<std::size_t>(scalar_output.index);
  for (std::size_t i = 0; i <= last; ++i) {
    Node& n = nodes_[i];
    if (n.kind == OpKind::kConstant) continue;
    n.adjoint.setZero(n.shape.rows, n.shape.cols);
  }
  for (std::size_t i = last + 1; i < nodes_.size(); ++i) {
    nodes_[i].adjoint.resize(0, 0);
  }
  nodes_[last].adjoint(0, 0) = 1.0;
  for (std::size_t i = last + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.kind == OpKind::kConstant) continue;
    accumulate(n);
  }
  differentiated_ = true;

  Gradients grads;
  for (const auto& [name, index] : inputs_) {
    const Node& n = nodes_[static_cast<std::size_t>(index)];
    grads[name] = (static_cast<std::size_t>(index) <= last)
                      ? n.adjoint
                      : Array::Zero(n.shape.rows, n.shape.cols);
  }
  return grads;
}

const Array& Tape::value(NodeId node) const {
  const Node& n = at(node);
  if (n.kind != OpKind::kConstant && !evaluated_ &&
      !(n.kind == OpKind::kInput && n.bound)) {
    throw BindingError("tape: value requested before forward()");
  }
  return n.value;
}

const Array& Tape::adjoint(NodeId node) const {
  const Node& n = at(node);
  if (!differentiated_) {
    throw BindingError("tape: adjoint requested before backward()");
  }
  return n.adjoint;
}

Shape Tape::shape(NodeId node) const { return at(node).shape; }

OpKind Tape::kind(NodeId node) const { return at(node).kind; }

std::vector<NodeId> Tape::operands(NodeId node) const {
  const Node& n = at(node);
  std::vector<NodeId> out;
  for (std::int32_t i : {n.a, n.b, n.c}) {
    if (i >= 0) out.push_back(NodeId{i});
  }
  return out;
}

std::vector<std::string> Tape::input_names() const {
  std::vector<std::string> names;
  names.reserve(inputs_.size());
  for (const auto& [name, index] : inputs_) names.push_back(name);
  return names;
}

NodeId Tape::input_node(const std::string& name) const {
  auto it = inputs_.find(name);
  if (it == inputs_.end()) {
    throw BindingError("tape: no input named '" + name + "'");
  }
  return NodeId{it->second};
}

bool Tape::has_input(const std::string& name) const {
  return inputs_.contains(name);
}

}  // namespace safemb::diff
