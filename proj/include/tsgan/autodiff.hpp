#pragma once

// Reverse-mode automatic differentiation over dense float64 tensors.
//
// A Graph records every primitive operation as it is evaluated
// (define-by-run). Backward passes are themselves expressed with the same
// primitives, so a gradient obtained with create_graph = true is an ordinary
// graph value and can be differentiated again. Broadcasting is limited to
// scalar-with-tensor, plus the row-bias add used by affine layers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tsgan/error.hpp"

namespace tsgan::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string to_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

/// Dense row-major value, detached from any graph.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != numel(shape))
      throw ShapeError("tensor of shape " + to_string(shape) + " given " +
                       std::to_string(values.size()) + " values");
  }

  static Tensor filled(Shape s, double v) {
    const auto n = numel(s);
    return Tensor(std::move(s), std::vector<double>(n, v));
  }
  static Tensor zeros(Shape s) { return filled(std::move(s), 0.0); }
  static Tensor scalar(double v) { return Tensor({}, {v}); }

  std::size_t size() const noexcept { return values.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }
  double item() const {
    if (values.size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape));
    return values[0];
  }

  bool operator==(const Tensor&) const = default;
};

enum class Op {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Scale,      // x * c
  AddScalar,  // x + c
  MatMul,
  Transpose,
  AddRow,     // [m,n] + [n] broadcast over rows
  Relu,
  LeakyRelu,
  Tanh,
  Square,
  Sqrt,
  Sum,        // -> scalar
  SumAxis,    // 2-D reduce over axis
  Broadcast,  // inverse of SumAxis
  Expand,     // scalar -> shape
  Reshape,
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  struct Node {
    Op op = Op::Leaf;
    std::size_t in0 = 0;
    std::size_t in1 = 0;
    int arity = 0;
    double attr = 0.0;
    Tensor value;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf node holding `t`. Leaves are the usual targets of grad().
  Var leaf(Tensor t) { return push(Op::Leaf, {}, std::move(t)); }
  Var scalar(double v) { return leaf(Tensor::scalar(v)); }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

  Var push(Op op, std::initializer_list<Var> inputs, Tensor value, double attr = 0.0) {
    for (double v : value.values)
      if (!std::isfinite(v)) {
        non_finite_ = true;
        break;
      }
    Node n;
    n.op = op;
    n.attr = attr;
    n.value = std::move(value);
    for (const Var& v : inputs) {
      if (&v.graph() != this) throw ParameterError("operands belong to different graphs");
      (n.arity == 0 ? n.in0 : n.in1) = v.id();
      ++n.arity;
    }
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  /// True once any recorded value was NaN or infinite.
  bool saw_non_finite() const noexcept { return non_finite_; }

  /// Gradients of scalar `output` with respect to each of `wrt`.
  ///
  /// With create_graph the returned values are graph nodes that can be
  /// differentiated again; otherwise the nodes built by the backward pass are
  /// discarded and detached leaves are returned. A `wrt` entry that `output`
  /// does not depend on yields zeros and, when `connected` is given, a false
  /// entry there.
  std::vector<Var> grad(Var output, std::span<const Var> wrt, bool create_graph = false,
                        std::vector<bool>* connected = nullptr);

  /// Drops every node with id >= `mark`. Handles to them become invalid.
  void truncate(std::size_t mark) {
    if (mark < nodes_.size()) nodes_.resize(mark);
  }

 private:
  void backward_node(std::size_t id, Var g, const std::vector<char>& need,
                     std::vector<std::optional<Var>>& grads);

  std::vector<Node> nodes_;
  bool non_finite_ = false;
};

inline const Tensor& Var::value() const { return graph_->node(id_).value; }

// ---------------------------------------------------------------------------
// Kernels on plain tensors

namespace kernel {

inline bool is_scalar(const Shape& s) { return numel(s) == 1; }

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, const char* name, F f) {
  if (a.shape == b.shape || a.size() == b.size()) {
    if (a.shape != b.shape && !(is_scalar(a.shape) && is_scalar(b.shape)))
      throw ShapeError(std::string(name) + ": shape mismatch " + to_string(a.shape) + " vs " +
                       to_string(b.shape));
    Tensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r.values[i] = f(a.values[i], b.values[i]);
    if (a.shape.size() < b.shape.size()) r.shape = b.shape;
    return r;
  }
  if (is_scalar(b.shape)) {
    Tensor r = a;
    const double s = b.values[0];
    for (double& v : r.values) v = f(v, s);
    return r;
  }
  if (is_scalar(a.shape)) {
    Tensor r = b;
    const double s = a.values[0];
    for (double& v : r.values) v = f(s, v);
    return r;
  }
  throw ShapeError(std::string(name) + ": shape mismatch " + to_string(a.shape) + " vs " +
                   to_string(b.shape));
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor r = a;
  for (double& v : r.values) v = f(v);
  return r;
}

inline void require_matrix(const Tensor& t, const char* name) {
  if (t.shape.size() != 2) throw ShapeError(std::string(name) + ": expected 2-D, got " + to_string(t.shape));
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw ShapeError("matmul: shape mismatch " + to_string(a.shape) + " vs " + to_string(b.shape));
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Tensor c = Tensor::zeros({m, n});
  Eigen::Map<RowMajor>(c.values.data(), m, n).noalias() =
      Eigen::Map<const RowMajor>(a.values.data(), m, k) * Eigen::Map<const RowMajor>(b.values.data(), k, n);
  return c;
}

inline Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor t = Tensor::zeros({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t.values[j * m + i] = a.values[i * n + j];
  return t;
}

inline Tensor sum_axis(const Tensor& a, std::size_t axis) {
  require_matrix(a, "sum_axis");
  const std::size_t m = a.rows(), n = a.cols();
  if (axis == 0) {
    Tensor r = Tensor::zeros({n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) r.values[j] += a.values[i * n + j];
    return r;
  }
  if (axis == 1) {
    Tensor r = Tensor::zeros({m});
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a.values[i * n + j];
      r.values[i] = s;
    }
    return r;
  }
  throw ShapeError("sum_axis: axis must be 0 or 1");
}

// Inverse of sum_axis: replicates a vector along `axis` to `shape`.
inline Tensor broadcast(const Tensor& v, std::size_t axis, const Shape& shape) {
  const std::size_t m = shape.at(0), n = shape.at(1);
  const std::size_t expect = axis == 0 ? n : m;
  if (v.size() != expect)
    throw ShapeError("broadcast: " + to_string(v.shape) + " cannot fill " + to_string(shape));
  Tensor r = Tensor::zeros(shape);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) r.values[i * n + j] = v.values[axis == 0 ? j : i];
  return r;
}

}  // namespace kernel

// ---------------------------------------------------------------------------
// Primitive operations

namespace detail {
inline Graph& same_graph(const Var& a, const Var& b) {
  if (&a.graph() != &b.graph()) throw ParameterError("operands belong to different graphs");
  return a.graph();
}
}  // namespace detail

inline Var add(const Var& a, const Var& b) {
  return detail::same_graph(a, b).push(
      Op::Add, {a, b}, kernel::zip(a.value(), b.value(), "add", std::plus<>{}));
}

inline Var sub(const Var& a, const Var& b) {
  return detail::same_graph(a, b).push(
      Op::Sub, {a, b}, kernel::zip(a.value(), b.value(), "sub", std::minus<>{}));
}

inline Var mul(const Var& a, const Var& b) {
  return detail::same_graph(a, b).push(
      Op::Mul, {a, b}, kernel::zip(a.value(), b.value(), "mul", std::multiplies<>{}));
}

inline Var div(const Var& a, const Var& b) {
  return detail::same_graph(a, b).push(
      Op::Div, {a, b}, kernel::zip(a.value(), b.value(), "div", std::divides<>{}));
}

inline Var scale(const Var& a, double c) {
  return a.graph().push(Op::Scale, {a}, kernel::map(a.value(), [c](double v) { return v * c; }), c);
}

inline Var add_scalar(const Var& a, double c) {
  return a.graph().push(Op::AddScalar, {a}, kernel::map(a.value(), [c](double v) { return v + c; }), c);
}

inline Var neg(const Var& a) { return scale(a, -1.0); }

inline Var matmul(const Var& a, const Var& b) {
  return detail::same_graph(a, b).push(Op::MatMul, {a, b}, kernel::matmul(a.value(), b.value()));
}

inline Var transpose(const Var& a) {
  return a.graph().push(Op::Transpose, {a}, kernel::transpose(a.value()));
}

/// x[m,n] + bias[n], bias added to every row.
inline Var add_row(const Var& x, const Var& bias) {
  const Tensor& xv = x.value();
  kernel::require_matrix(xv, "add_row");
  if (bias.size() != xv.cols())
    throw ShapeError("add_row: shape mismatch " + to_string(xv.shape) + " vs " + to_string(bias.shape()));
  Tensor r = xv;
  const std::size_t n = xv.cols();
  for (std::size_t i = 0; i < r.size(); ++i) r.values[i] += bias.value().values[i % n];
  return detail::same_graph(x, bias).push(Op::AddRow, {x, bias}, std::move(r));
}

/// x*W + b for x [batch, in], W [in, out], b [out].
inline Var affine(const Var& x, const Var& weight, const Var& bias) {
  return add_row(matmul(x, weight), bias);
}

inline Var relu(const Var& a) {
  return a.graph().push(Op::Relu, {a}, kernel::map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }));
}

inline Var leaky_relu(const Var& a, double slope) {
  return a.graph().push(Op::LeakyRelu, {a},
                        kernel::map(a.value(), [slope](double v) { return v > 0.0 ? v : slope * v; }),
                        slope);
}

inline Var tanh(const Var& a) {
  return a.graph().push(Op::Tanh, {a}, kernel::map(a.value(), [](double v) { return std::tanh(v); }));
}

inline Var square(const Var& a) {
  return a.graph().push(Op::Square, {a}, kernel::map(a.value(), [](double v) { return v * v; }));
}

inline Var sqrt(const Var& a) {
  return a.graph().push(Op::Sqrt, {a}, kernel::map(a.value(), [](double v) { return std::sqrt(v); }));
}

inline Var sum(const Var& a) {
  const auto& v = a.value().values;
  return a.graph().push(Op::Sum, {a}, Tensor::scalar(std::accumulate(v.begin(), v.end(), 0.0)));
}

inline Var sum_axis(const Var& a, std::size_t axis) {
  return a.graph().push(Op::SumAxis, {a}, kernel::sum_axis(a.value(), axis), static_cast<double>(axis));
}

inline Var broadcast(const Var& v, std::size_t axis, const Shape& shape) {
  return v.graph().push(Op::Broadcast, {v}, kernel::broadcast(v.value(), axis, shape),
                        static_cast<double>(axis));
}

/// Scalar -> tensor of `shape` filled with that scalar.
inline Var expand(const Var& s, const Shape& shape) {
  return s.graph().push(Op::Expand, {s}, Tensor::filled(shape, s.item()));
}

inline Var reshape(const Var& a, const Shape& shape) {
  if (numel(shape) != a.size())
    throw ShapeError("reshape: " + to_string(a.shape()) + " to " + to_string(shape));
  return a.graph().push(Op::Reshape, {a}, Tensor(shape, a.value().values));
}

inline Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

/// Floor added under the square root of every norm.
inline constexpr double kNormFloor = 1e-12;

/// Euclidean norm of all entries, sqrt(sum x^2 + floor).
inline Var l2_norm(const Var& a) { return sqrt(add_scalar(sum(square(a)), kNormFloor)); }

/// Row norms (axis 1) or column norms (axis 0) of a matrix.
inline Var l2_norm(const Var& a, std::size_t axis) {
  return sqrt(add_scalar(sum_axis(square(a), axis), kNormFloor));
}

// ---------------------------------------------------------------------------
// Backward pass

namespace detail {

// Reduces an upstream gradient onto an operand that was scalar-broadcast.
inline Var unbroadcast(const Var& g, const Shape& target) {
  if (g.shape() == target) return g;
  if (g.size() == numel(target)) return reshape(g, target);
  return reshape(sum(g), target);
}

}  // namespace detail

inline void Graph::backward_node(std::size_t id, Var g, const std::vector<char>& need,
                                 std::vector<std::optional<Var>>& grads) {
  // Copy what is needed: pushes below may reallocate nodes_.
  const Op op = nodes_[id].op;
  const std::size_t i0 = nodes_[id].in0, i1 = nodes_[id].in1;
  const double attr = nodes_[id].attr;
  const Var self(this, id), a(this, i0), b(this, i1);

  auto accumulate = [&](std::size_t target, auto&& make) {
    if (!need[target]) return;
    Var contrib = make();
    grads[target] = grads[target] ? add(*grads[target], contrib) : contrib;
  };
  auto shape_of = [&](std::size_t k) { return nodes_[k].value.shape; };

  switch (op) {
    case Op::Leaf:
      break;
    case Op::Add:
      accumulate(i0, [&] { return detail::unbroadcast(g, shape_of(i0)); });
      accumulate(i1, [&] { return detail::unbroadcast(g, shape_of(i1)); });
      break;
    case Op::Sub:
      accumulate(i0, [&] { return detail::unbroadcast(g, shape_of(i0)); });
      accumulate(i1, [&] { return detail::unbroadcast(neg(g), shape_of(i1)); });
      break;
    case Op::Mul:
      accumulate(i0, [&] { return detail::unbroadcast(mul(g, b), shape_of(i0)); });
      accumulate(i1, [&] { return detail::unbroadcast(mul(g, a), shape_of(i1)); });
      break;
    case Op::Div:
      accumulate(i0, [&] { return detail::unbroadcast(div(g, b), shape_of(i0)); });
      accumulate(i1, [&] { return detail::unbroadcast(neg(mul(g, div(self, b))), shape_of(i1)); });
      break;
    case Op::Scale:
      accumulate(i0, [&] { return scale(g, attr); });
      break;
    case Op::AddScalar:
      accumulate(i0, [&] { return g; });
      break;
    case Op::MatMul:
      accumulate(i0, [&] { return matmul(g, transpose(b)); });
      accumulate(i1, [&] { return matmul(transpose(a), g); });
      break;
    case Op::Transpose:
      accumulate(i0, [&] { return transpose(g); });
      break;
    case Op::AddRow:
      accumulate(i0, [&] { return g; });
      accumulate(i1, [&] { return reshape(sum_axis(g, 0), shape_of(i1)); });
      break;
    case Op::Relu:
      accumulate(i0, [&] {
        Var mask = leaf(kernel::map(nodes_[i0].value, [](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        return mul(g, mask);
      });
      break;
    case Op::LeakyRelu:
      accumulate(i0, [&] {
        Var mask = leaf(kernel::map(nodes_[i0].value, [attr](double v) { return v > 0.0 ? 1.0 : attr; }));
        return mul(g, mask);
      });
      break;
    case Op::Tanh:
      // d tanh = 1 - tanh^2, written in terms of this node's output.
      accumulate(i0, [&] { return mul(g, add_scalar(neg(square(self)), 1.0)); });
      break;
    case Op::Square:
      accumulate(i0, [&] { return mul(g, scale(a, 2.0)); });
      break;
    case Op::Sqrt:
      accumulate(i0, [&] { return div(scale(g, 0.5), self); });
      break;
    case Op::Sum:
      accumulate(i0, [&] { return expand(g, shape_of(i0)); });
      break;
    case Op::SumAxis:
      accumulate(i0, [&] { return broadcast(g, static_cast<std::size_t>(attr), shape_of(i0)); });
      break;
    case Op::Broadcast:
      accumulate(i0, [&] { return reshape(sum_axis(g, static_cast<std::size_t>(attr)), shape_of(i0)); });
      break;
    case Op::Expand:
      accumulate(i0, [&] { return reshape(sum(g), shape_of(i0)); });
      break;
    case Op::Reshape:
      accumulate(i0, [&] { return reshape(g, shape_of(i0)); });
      break;
  }
}

inline std::vector<Var> Graph::grad(Var output, std::span<const Var> wrt, bool create_graph,
                                    std::vector<bool>* connected) {
  if (&output.graph() != this) throw ParameterError("grad: output belongs to another graph");
  if (output.size() != 1)
    throw ParameterError("grad: output must be scalar, got shape " + to_string(output.shape()));

  const std::size_t mark = nodes_.size();
  const std::size_t end = output.id() + 1;

  // need[i]: node i is a wrt target or depends on one.
  std::vector<char> need(end, 0);
  for (const Var& w : wrt) {
    if (&w.graph() != this) throw ParameterError("grad: wrt tensor belongs to another graph");
    if (w.id() < end) need[w.id()] = 1;
  }
  for (std::size_t i = 0; i < end; ++i) {
    const Node& n = nodes_[i];
    if ((n.arity > 0 && need[n.in0]) || (n.arity > 1 && need[n.in1])) need[i] = 1;
  }

  std::vector<std::optional<Var>> grads(end);
  if (need[output.id()]) grads[output.id()] = leaf(Tensor::filled(output.shape(), 1.0));
  for (std::size_t i = end; i-- > 0;) {
    if (!need[i] || !grads[i]) continue;
    backward_node(i, *grads[i], need, grads);
  }

  if (connected) connected->assign(wrt.size(), false);
  std::vector<Tensor> values;
  std::vector<Var> result;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    const std::size_t id = wrt[k].id();
    const bool linked = id < end && grads[id].has_value();
    if (connected) (*connected)[k] = linked;
    if (create_graph) {
      result.push_back(linked ? *grads[id] : leaf(Tensor::zeros(wrt[k].shape())));
    } else {
      values.push_back(linked ? grads[id]->value() : Tensor::zeros(wrt[k].shape()));
    }
  }
  if (!create_graph) {
    truncate(mark);
    for (auto& v : values) result.push_back(leaf(std::move(v)));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Finite-difference validation

/// Scalar function built on a fresh graph from an input leaf.
using ScalarFn = std::function<Var(Graph&, const Var&)>;

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
inline double finite_diff_check(const ScalarFn& f, const Tensor& x, double eps = 1e-4) {
  std::vector<double> analytic;
  {
    Graph g;
    Var xv = g.leaf(x);
    Var y = f(g, xv);
    if (!std::isfinite(y.item())) throw NumericError("finite_diff_check: non-finite f(x)");
    const Var wrt[] = {xv};
    analytic = g.grad(y, wrt)[0].value().values;
  }
  auto eval = [&](const Tensor& at) {
    Graph g;
    const double v = f(g, g.leaf(at)).item();
    if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite f(x +/- eps)");
    return v;
  };

  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe.values[i] = x.values[i] + eps;
    const double up = eval(probe);
    probe.values[i] = x.values[i] - eps;
    const double down = eval(probe);
    probe.values[i] = x.values[i];
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

}  // namespace tsgan::ad
