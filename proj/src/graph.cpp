/* Copyright 2026 The vaealign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "vaealign/graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "vaealign/errors.hpp"

namespace vaealign {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}
MutMap as_matrix(Tensor& t) {
  return MutMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " +
                   shape_string(a.shape()) + " and " + shape_string(b.shape()));
}
[[noreturn]] void shape_fail(Op op, const Tensor& a, const std::string& why) {
  throw ShapeError(std::string(op_name(op)) + ": " + why + " (shape " +
                   shape_string(a.shape()) + ")");
}

void require_matrix(Op op, const Tensor& a) {
  if (a.rank() > 2 || a.rank() == 0) shape_fail(op, a, "expected rank 1 or 2");
}

std::size_t broadcast_dim(Op op, const Tensor& a, const Tensor& b, std::size_t x,
                          std::size_t y) {
  if (x == y || y == 1) return x;
  if (x == 1) return y;
  shape_fail(op, a, b);
}

// Sum `g` (shaped like the broadcast result) down to `target`'s shape.
void reduce_into(const Tensor& g, Tensor& target, double sign) {
  const std::size_t rows = g.rows(), cols = g.cols();
  const std::size_t tr = target.rows(), tc = target.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t rr = tr == 1 ? 0 : r;
    for (std::size_t c = 0; c < cols; ++c) {
      target(rr, tc == 1 ? 0 : c) += sign * g(r, c);
    }
  }
}

double stable_softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Log-softmax of a strided line of n values.
void log_softmax_line(const double* in, double* out, std::size_t n, std::size_t stride) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) m = std::max(m, in[k * stride]);
  if (!std::isfinite(m)) {
    for (std::size_t k = 0; k < n; ++k) out[k * stride] = in[k * stride] - m;
    return;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(in[k * stride] - m);
  const double lse = m + std::log(s);
  for (std::size_t k = 0; k < n; ++k) out[k * stride] = in[k * stride] - lse;
}

double logsumexp_line(const double* in, std::size_t n, std::size_t stride) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) m = std::max(m, in[k * stride]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(in[k * stride] - m);
  return m + std::log(s);
}

// Visits each line along `axis`: calls f(offset, count, stride).
template <typename F>
void for_each_line(std::size_t rows, std::size_t cols, int axis, F&& f) {
  if (axis == 1) {
    for (std::size_t r = 0; r < rows; ++r) f(r * cols, cols, std::size_t{1});
  } else {
    for (std::size_t c = 0; c < cols; ++c) f(c, rows, cols);
  }
}

void check_axis(Op op, const Tensor& a, int axis) {
  if (axis != 0 && axis != 1) shape_fail(op, a, "axis must be 0 or 1");
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParam: return "param";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kMatmul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kEmbedding: return "embedding_lookup";
    case Op::kGatherCols: return "gather_cols";
    case Op::kSoftmax: return "softmax";
    case Op::kLogSoftmax: return "log_softmax";
    case Op::kLogSumExp: return "logsumexp";
    case Op::kSum: return "sum";
    case Op::kSoftplus: return "softplus";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kAbs: return "abs";
    case Op::kGaussianSample: return "gaussian_sample";
    case Op::kCustom: return "custom";
  }
  return "?";
}

// ---------------------------------------------------------------- parameters

ParamId ParameterSet::add(std::string name, Tensor init) {
  if (index_.contains(name)) {
    throw ConfigError("duplicate parameter name: " + name);
  }
  const ParamId id = values_.size();
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return id;
}

std::optional<ParamId> ParameterSet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamId ParameterSet::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw ConfigError("unknown parameter: " + std::string(name));
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Gradients zero_gradients(const ParameterSet& params) {
  Gradients g;
  g.reserve(params.size());
  for (ParamId i = 0; i < params.size(); ++i) g.emplace_back(params.value(i).shape());
  return g;
}

void add_into(Gradients& into, const Gradients& from) {
  for (std::size_t p = 0; p < into.size(); ++p) {
    auto dst = into[p].values();
    auto src = from[p].values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

double global_norm(const Gradients& grads) {
  double s = 0.0;
  for (const auto& g : grads)
    for (double v : g.values()) s += v * v;
  return std::sqrt(s);
}

// -------------------------------------------------------------------- forward

Graph::Node Graph::make_node(Op op, std::vector<std::uint32_t> inputs) {
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  return n;
}

Var Graph::push(Node node) {
#ifndef NDEBUG
  if (node.op != Op::kParam && node.op != Op::kConstant && !node.value.all_finite()) {
    bool inputs_finite = true;
    for (auto in : node.inputs) inputs_finite = inputs_finite && val(in).all_finite();
    if (inputs_finite) {
      throw DivergenceError(std::string(op_name(node.op)) +
                            ": non-finite output from finite inputs");
    }
  }
#endif
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Graph::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.op == Op::kParam ? params_->value(n.param) : n.value;
}

const Tensor& Graph::value(Var v) const { return val(v.id); }

Var Graph::constant(Tensor value) {
  Node n = make_node(Op::kConstant);
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::param(ParamId id) {
  if (auto it = param_nodes_.find(id); it != param_nodes_.end()) return Var{it->second};
  if (id >= params_->size()) throw ConfigError("param id out of range");
  Node n = make_node(Op::kParam);
  n.param = id;
  Var v = push(std::move(n));
  param_nodes_.emplace(id, v.id);
  return v;
}

namespace {
template <typename F>
Tensor broadcast_apply(Op op, const Tensor& a, const Tensor& b, F f) {
  require_matrix(op, a);
  require_matrix(op, b);
  const std::size_t rows = broadcast_dim(op, a, b, a.rows(), b.rows());
  const std::size_t cols = broadcast_dim(op, a, b, a.cols(), b.cols());
  Tensor out = Tensor::matrix(rows, cols);
  const bool ar = a.rows() == 1, ac = a.cols() == 1;
  const bool br = b.rows() == 1, bc = b.cols() == 1;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out(r, c) = f(a(ar ? 0 : r, ac ? 0 : c), b(br ? 0 : r, bc ? 0 : c));
    }
  }
  return out;
}
}  // namespace

Var Graph::add(Var a, Var b) {
  Node n = make_node(Op::kAdd, {a.id, b.id});
  n.value = broadcast_apply(Op::kAdd, val(a.id), val(b.id),
                            [](double x, double y) { return x + y; });
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  Node n = make_node(Op::kSub, {a.id, b.id});
  n.value = broadcast_apply(Op::kSub, val(a.id), val(b.id),
                            [](double x, double y) { return x - y; });
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  Node n = make_node(Op::kMul, {a.id, b.id});
  n.value = broadcast_apply(Op::kMul, val(a.id), val(b.id),
                            [](double x, double y) { return x * y; });
  return push(std::move(n));
}

Var Graph::scale(Var a, double c) {
  Node n = make_node(Op::kScale, {a.id});
  n.scalar = c;
  n.value = val(a.id);
  for (double& v : n.value.values()) v *= c;
  return push(std::move(n));
}

Var Graph::add_scalar(Var a, double c) {
  Node n = make_node(Op::kAddScalar, {a.id});
  n.scalar = c;
  n.value = val(a.id);
  for (double& v : n.value.values()) v += c;
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  require_matrix(Op::kMatmul, x);
  require_matrix(Op::kMatmul, y);
  if (x.cols() != y.rows()) shape_fail(Op::kMatmul, x, y);
  Node n = make_node(Op::kMatmul, {a.id, b.id});
  n.value = Tensor::matrix(x.rows(), y.cols());
  as_matrix(n.value).noalias() = as_matrix(x) * as_matrix(y);
  return push(std::move(n));
}

Var Graph::transpose(Var a) {
  const Tensor& x = val(a.id);
  require_matrix(Op::kTranspose, x);
  Node n = make_node(Op::kTranspose, {a.id});
  n.value = Tensor::matrix(x.cols(), x.rows());
  as_matrix(n.value) = as_matrix(x).transpose();
  return push(std::move(n));
}

Var Graph::concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Tensor& first = val(parts[0].id);
  check_axis(Op::kConcat, first, axis);
  std::size_t rows = 0, cols = 0;
  Node n = make_node(Op::kConcat);
  n.axis = axis;
  for (Var p : parts) {
    const Tensor& t = val(p.id);
    require_matrix(Op::kConcat, t);
    if (axis == 0) {
      if (t.cols() != first.cols()) shape_fail(Op::kConcat, first, t);
      rows += t.rows();
      cols = t.cols();
    } else {
      if (t.rows() != first.rows()) shape_fail(Op::kConcat, first, t);
      cols += t.cols();
      rows = t.rows();
    }
    n.inputs.push_back(p.id);
  }
  n.value = Tensor::matrix(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& t = val(p.id);
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t c = 0; c < t.cols(); ++c) {
        if (axis == 0) n.value(offset + r, c) = t(r, c);
        else n.value(r, offset + c) = t(r, c);
      }
    offset += axis == 0 ? t.rows() : t.cols();
  }
  return push(std::move(n));
}

Var Graph::slice(Var a, int axis, std::size_t begin, std::size_t length) {
  const Tensor& x = val(a.id);
  require_matrix(Op::kSlice, x);
  check_axis(Op::kSlice, x, axis);
  const std::size_t extent = axis == 0 ? x.rows() : x.cols();
  if (begin + length > extent || length == 0) {
    shape_fail(Op::kSlice, x, "range [" + std::to_string(begin) + ", " +
                                  std::to_string(begin + length) + ") out of bounds");
  }
  Node n = make_node(Op::kSlice, {a.id});
  n.axis = axis;
  n.begin = begin;
  const std::size_t rows = axis == 0 ? length : x.rows();
  const std::size_t cols = axis == 1 ? length : x.cols();
  n.value = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      n.value(r, c) = axis == 0 ? x(begin + r, c) : x(r, begin + c);
  return push(std::move(n));
}

Var Graph::embedding_lookup(Var table, const std::vector<std::size_t>& ids) {
  const Tensor& t = val(table.id);
  require_matrix(Op::kEmbedding, t);
  if (ids.empty()) shape_fail(Op::kEmbedding, t, "empty id list");
  Node n = make_node(Op::kEmbedding, {table.id});
  n.value = Tensor::matrix(ids.size(), t.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= t.rows()) {
      shape_fail(Op::kEmbedding, t, "id " + std::to_string(ids[r]) + " out of range");
    }
    std::copy_n(t.values().data() + ids[r] * t.cols(), t.cols(), &n.value(r, 0));
  }
  n.index = ids;
  return push(std::move(n));
}

Var Graph::gather_cols(Var a, std::vector<std::size_t> index, std::size_t width) {
  const Tensor& x = val(a.id);
  require_matrix(Op::kGatherCols, x);
  if (width == 0 || index.size() != x.rows() * width) {
    shape_fail(Op::kGatherCols, x, "index size " + std::to_string(index.size()) +
                                       " != rows * width");
  }
  Node n = make_node(Op::kGatherCols, {a.id});
  n.value = Tensor::matrix(x.rows(), width);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t c = index[r * width + k];
      if (c >= x.cols()) shape_fail(Op::kGatherCols, x, "column index out of range");
      n.value(r, k) = x(r, c);
    }
  n.index = std::move(index);
  return push(std::move(n));
}

Var Graph::pick(Var a, const std::vector<std::size_t>& col_per_row) {
  return gather_cols(a, col_per_row, 1);
}

Var Graph::softmax(Var a, int axis) {
  const Tensor& x = val(a.id);
  require_matrix(Op::kSoftmax, x);
  check_axis(Op::kSoftmax, x, axis);
  Node n = make_node(Op::kSoftmax, {a.id});
  n.axis = axis;
  n.value = Tensor(Shape{x.rows(), x.cols()});
  for_each_line(x.rows(), x.cols(), axis, [&](std::size_t off, std::size_t cnt, std::size_t st) {
    log_softmax_line(x.values().data() + off, n.value.values().data() + off, cnt, st);
    for (std::size_t k = 0; k < cnt; ++k) n.value[off + k * st] = std::exp(n.value[off + k * st]);
  });
  return push(std::move(n));
}

Var Graph::log_softmax(Var a, int axis) {
  const Tensor& x = val(a.id);
  require_matrix(Op::kLogSoftmax, x);
  check_axis(Op::kLogSoftmax, x, axis);
  Node n = make_node(Op::kLogSoftmax, {a.id});
  n.axis = axis;
  n.value = Tensor(Shape{x.rows(), x.cols()});
  for_each_line(x.rows(), x.cols(), axis, [&](std::size_t off, std::size_t cnt, std::size_t st) {
    log_softmax_line(x.values().data() + off, n.value.values().data() + off, cnt, st);
  });
  return push(std::move(n));
}

Var Graph::logsumexp(Var a, int axis) {
  const Tensor& x = val(a.id);
  require_matrix(Op::kLogSumExp, x);
  check_axis(Op::kLogSumExp, x, axis);
  Node n = make_node(Op::kLogSumExp, {a.id});
  n.axis = axis;
  n.value = axis == 1 ? Tensor::matrix(x.rows(), 1) : Tensor::matrix(1, x.cols());
  std::size_t line = 0;
  for_each_line(x.rows(), x.cols(), axis, [&](std::size_t off, std::size_t cnt, std::size_t st) {
    n.value[line++] = logsumexp_line(x.values().data() + off, cnt, st);
  });
  return push(std::move(n));
}

Var Graph::sum(Var a) {
  const Tensor& x = val(a.id);
  Node n = make_node(Op::kSum, {a.id});
  double s = 0.0;
  for (double v : x.values()) s += v;
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

namespace {
template <typename F>
Tensor map_values(const Tensor& x, F f) {
  Tensor out = x;
  for (double& v : out.values()) v = f(v);
  return out;
}
}  // namespace

Var Graph::softplus(Var a) {
  Node n = make_node(Op::kSoftplus, {a.id});
  n.value = map_values(val(a.id), stable_softplus);
  return push(std::move(n));
}

Var Graph::tanh(Var a) {
  Node n = make_node(Op::kTanh, {a.id});
  n.value = map_values(val(a.id), [](double v) { return std::tanh(v); });
  return push(std::move(n));
}

Var Graph::sigmoid(Var a) {
  Node n = make_node(Op::kSigmoid, {a.id});
  n.value = map_values(val(a.id), logistic);
  return push(std::move(n));
}

Var Graph::exp(Var a) {
  Node n = make_node(Op::kExp, {a.id});
  n.value = map_values(val(a.id), [](double v) { return std::exp(v); });
  return push(std::move(n));
}

Var Graph::log(Var a) {
  Node n = make_node(Op::kLog, {a.id});
  n.value = map_values(val(a.id), [](double v) { return std::log(v); });
  return push(std::move(n));
}

Var Graph::abs(Var a) {
  Node n = make_node(Op::kAbs, {a.id});
  n.value = map_values(val(a.id), [](double v) { return std::fabs(v); });
  return push(std::move(n));
}

Var Graph::gaussian_sample(Var u, Var s, Tensor eps) {
  const Tensor& mean = val(u.id);
  const Tensor& scale = val(s.id);
  if (!mean.same_shape(scale)) shape_fail(Op::kGaussianSample, mean, scale);
  if (!mean.same_shape(eps)) shape_fail(Op::kGaussianSample, mean, eps);
  for (double v : scale.values()) {
    if (!(v > 0.0)) shape_fail(Op::kGaussianSample, scale, "scale must be positive");
  }
  Node n = make_node(Op::kGaussianSample, {u.id, s.id});
  n.value = mean;
  for (std::size_t k = 0; k < mean.size(); ++k) n.value[k] += scale[k] * eps[k];
  n.aux = std::move(eps);
  return push(std::move(n));
}

Var Graph::custom(std::vector<Var> inputs, Tensor value, CustomBackward backward) {
  Node n = make_node(Op::kCustom);
  for (Var v : inputs) n.inputs.push_back(v.id);
  n.value = std::move(value);
  n.custom = std::move(backward);
  return push(std::move(n));
}

// ------------------------------------------------------------------- backward

Tensor& Graph::ensure_grad(std::uint32_t id) {
  Tensor& g = grads_[id];
  if (g.size() == 0) {
    const Tensor& v = val(id);
    g = Tensor(Shape{v.rows(), v.cols()});
  }
  return g;
}

void Graph::backward(Var loss) {
  const Tensor& l = val(loss.id);
  if (l.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_string(l.shape()));
  }
  grads_.assign(nodes_.size(), Tensor());
  ensure_grad(loss.id)[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    if (grads_[id].size() == 0) continue;
    backprop(id);
  }
}

void Graph::backprop(std::uint32_t id) {
  const Node& n = nodes_[id];
  const Tensor& g = grads_[id];
  const Tensor& y = n.value;
  switch (n.op) {
    case Op::kConstant:
    case Op::kParam:
      return;
    case Op::kAdd:
    case Op::kSub: {
      reduce_into(g, ensure_grad(n.inputs[0]), 1.0);
      reduce_into(g, ensure_grad(n.inputs[1]), n.op == Op::kAdd ? 1.0 : -1.0);
      return;
    }
    case Op::kMul: {
      const Tensor& a = val(n.inputs[0]);
      const Tensor& b = val(n.inputs[1]);
      Tensor ga = Tensor(Shape{g.rows(), g.cols()});
      Tensor gb = ga;
      const bool ar = a.rows() == 1, ac = a.cols() == 1;
      const bool br = b.rows() == 1, bc = b.cols() == 1;
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) {
          ga(r, c) = g(r, c) * b(br ? 0 : r, bc ? 0 : c);
          gb(r, c) = g(r, c) * a(ar ? 0 : r, ac ? 0 : c);
        }
      reduce_into(ga, ensure_grad(n.inputs[0]), 1.0);
      reduce_into(gb, ensure_grad(n.inputs[1]), 1.0);
      return;
    }
    case Op::kScale: {
      Tensor& ga = ensure_grad(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += n.scalar * g[k];
      return;
    }
    case Op::kAddScalar: {
      Tensor& ga = ensure_grad(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
      return;
    }
    case Op::kMatmul: {
      const Tensor& a = val(n.inputs[0]);
      const Tensor& b = val(n.inputs[1]);
      as_matrix(ensure_grad(n.inputs[0])).noalias() += as_matrix(g) * as_matrix(b).transpose();
      as_matrix(ensure_grad(n.inputs[1])).noalias() += as_matrix(a).transpose() * as_matrix(g);
      return;
    }
    case Op::kTranspose: {
      as_matrix(ensure_grad(n.inputs[0])) += as_matrix(g).transpose();
      return;
    }
    case Op::kConcat: {
      std::size_t offset = 0;
      for (std::uint32_t in : n.inputs) {
        Tensor& gi = ensure_grad(in);
        for (std::size_t r = 0; r < gi.rows(); ++r)
          for (std::size_t c = 0; c < gi.cols(); ++c)
            gi(r, c) += n.axis == 0 ? g(offset + r, c) : g(r, offset + c);
        offset += n.axis == 0 ? gi.rows() : gi.cols();
      }
      return;
    }
    case Op::kSlice: {
      Tensor& gi = ensure_grad(n.inputs[0]);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) {
          if (n.axis == 0) gi(n.begin + r, c) += g(r, c);
          else gi(r, n.begin + c) += g(r, c);
        }
      return;
    }
    case Op::kEmbedding: {
      Tensor& gt = ensure_grad(n.inputs[0]);
      for (std::size_t r = 0; r < n.index.size(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gt(n.index[r], c) += g(r, c);
      return;
    }
    case Op::kGatherCols: {
      Tensor& gi = ensure_grad(n.inputs[0]);
      const std::size_t width = g.cols();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t k = 0; k < width; ++k) gi(r, n.index[r * width + k]) += g(r, k);
      return;
    }
    case Op::kSoftmax: {
      Tensor& gi = ensure_grad(n.inputs[0]);
      for_each_line(y.rows(), y.cols(), n.axis, [&](std::size_t off, std::size_t cnt, std::size_t st) {
        double dot = 0.0;
        for (std::size_t k = 0; k < cnt; ++k) dot += g[off + k * st] * y[off + k * st];
        for (std::size_t k = 0; k < cnt; ++k)
          gi[off + k * st] += y[off + k * st] * (g[off + k * st] - dot);
      });
      return;
    }
    case Op::kLogSoftmax: {
      Tensor& gi = ensure_grad(n.inputs[0]);
      for_each_line(y.rows(), y.cols(), n.axis, [&](std::size_t off, std::size_t cnt, std::size_t st) {
        double total = 0.0;
        for (std::size_t k = 0; k < cnt; ++k) total += g[off + k * st];
        for (std::size_t k = 0; k < cnt; ++k)
          gi[off + k * st] += g[off + k * st] - std::exp(y[off + k * st]) * total;
      });
      return;
    }
    case Op::kLogSumExp: {
      const Tensor& x = val(n.inputs[0]);
      Tensor& gi = ensure_grad(n.inputs[0]);
      std::size_t line = 0;
      for_each_line(x.rows(), x.cols(), n.axis, [&](std::size_t off, std::size_t cnt, std::size_t st) {
        const double lse = y[line], gl = g[line];
        ++line;
        if (!std::isfinite(lse)) return;
        for (std::size_t k = 0; k < cnt; ++k)
          gi[off + k * st] += gl * std::exp(x[off + k * st] - lse);
      });
      return;
    }
    case Op::kSum: {
      Tensor& gi = ensure_grad(n.inputs[0]);
      for (double& v : gi.values()) v += g[0];
      return;
    }
    case Op::kSoftplus: {
      const Tensor& x = val(n.inputs[0]);
      Tensor& gi = ensure_grad(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gi[k] += g[k] * logistic(x[k]);
      return;
    }
    case Op::kTanh: {
      Tensor& gi = ensure_grad(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gi[k] += g[k] * (1.0 - y[k] * y[k]);
      return;
    }
    case Op::kSigmoid: {
      Tensor& gi = ensure_grad(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gi[k] += g[k] * y[k] * (1.0 - y[k]);
      return;
    }
    case Op::kExp: {
      Tensor& gi = ensure_grad(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gi[k] += g[k] * y[k];
      return;
    }
    case Op::kLog: {
      const Tensor& x = val(n.inputs[0]);
      Tensor& gi = ensure_grad(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gi[k] += g[k] / x[k];
      return;
    }
    case Op::kAbs: {
      const Tensor& x = val(n.inputs[0]);
      Tensor& gi = ensure_grad(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k)
        gi[k] += g[k] * (x[k] > 0 ? 1.0 : (x[k] < 0 ? -1.0 : 0.0));
      return;
    }
    case Op::kGaussianSample: {
      Tensor& gu = ensure_grad(n.inputs[0]);
      Tensor& gs = ensure_grad(n.inputs[1]);
      for (std::size_t k = 0; k < g.size(); ++k) {
        gu[k] += g[k];
        gs[k] += g[k] * n.aux[k];
      }
      return;
    }
    case Op::kCustom: {
      std::vector<Tensor> input_grads;
      input_grads.reserve(n.inputs.size());
      for (std::uint32_t in : n.inputs) {
        const Tensor& v = val(in);
        input_grads.emplace_back(Shape{v.rows(), v.cols()});
      }
      n.custom(g, input_grads);
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        Tensor& gi = ensure_grad(n.inputs[k]);
        for (std::size_t e = 0; e < gi.size(); ++e) gi[e] += input_grads[k][e];
      }
      return;
    }
  }
}

const Tensor& Graph::grad(Var v) const {
  static const Tensor kEmpty;
  if (v.id >= grads_.size()) return kEmpty;
  return grads_[v.id];
}

Gradients Graph::param_gradients() const {
  Gradients out = zero_gradients(*params_);
  accumulate_param_gradients(out);
  return out;
}

void Graph::accumulate_param_gradients(Gradients& into, double weight) const {
  for (const auto& [param, node] : param_nodes_) {
    if (node >= grads_.size() || grads_[node].size() == 0) continue;
    auto dst = into[param].values();
    auto src = grads_[node].values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += weight * src[k];
  }
}

}  // namespace vaealign
