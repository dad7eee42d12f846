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

#ifndef VAEALIGN_GRAPH_HPP_
#define VAEALIGN_GRAPH_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vaealign/tensor.hpp"

namespace vaealign {

using ParamId = std::size_t;

// Named trainable tensors. Ids are dense and stable in insertion order.
class ParameterSet {
 public:
  ParamId add(std::string name, Tensor init);
  ParamId id(std::string_view name) const;
  std::optional<ParamId> find(std::string_view name) const;

  Tensor& value(ParamId id) { return values_.at(id); }
  const Tensor& value(ParamId id) const { return values_.at(id); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  std::size_t size() const { return values_.size(); }
  std::size_t scalar_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, ParamId> index_;
};

// One gradient tensor per parameter, shaped like it.
using Gradients = std::vector<Tensor>;
Gradients zero_gradients(const ParameterSet& params);
void add_into(Gradients& into, const Gradients& from);
double global_norm(const Gradients& grads);

struct Var {
  std::uint32_t id = 0;
};

enum class Op : std::uint8_t {
  kConstant,
  kParam,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kMatmul,
  kTranspose,
  kConcat,
  kSlice,
  kEmbedding,
  kGatherCols,
  kSoftmax,
  kLogSoftmax,
  kLogSumExp,
  kSum,
  kSoftplus,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kAbs,
  kGaussianSample,
  kCustom,
};

const char* op_name(Op op);

// Backward rule for a custom op: given the output adjoint, add the input
// adjoints into `input_grads` (pre-sized and zeroed like the inputs).
using CustomBackward =
    std::function<void(const Tensor& out_grad, std::vector<Tensor>& input_grads)>;

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order, so backward is a single reverse sweep.
class Graph {
 public:
  explicit Graph(const ParameterSet& params) : params_(&params) {}

  Var constant(Tensor value);
  Var param(ParamId id);
  Var param(std::string_view name) { return param(params_->id(name)); }

  // Elementwise with row/column broadcasting (a dimension of 1 stretches).
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var concat(const std::vector<Var>& parts, int axis);
  Var slice(Var a, int axis, std::size_t begin, std::size_t length);
  Var embedding_lookup(Var table, const std::vector<std::size_t>& ids);
  // out(r, k) = a(r, index[r * width + k]).
  Var gather_cols(Var a, std::vector<std::size_t> index, std::size_t width);
  Var pick(Var a, const std::vector<std::size_t>& col_per_row);

  Var softmax(Var a, int axis);
  Var log_softmax(Var a, int axis);
  Var logsumexp(Var a, int axis);
  Var sum(Var a);

  Var softplus(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var abs(Var a);

  // u + s * eps with eps held constant; requires s > 0.
  Var gaussian_sample(Var u, Var s, Tensor eps);

  Var custom(std::vector<Var> inputs, Tensor value, CustomBackward backward);

  const Tensor& value(Var v) const;
  Op op(Var v) const { return nodes_.at(v.id).op; }
  std::size_t node_count() const { return nodes_.size(); }

  // Fills adjoints of every node reachable from `loss`. Repeatable: each call
  // starts from zero adjoints.
  void backward(Var loss);
  const Tensor& grad(Var v) const;
  Gradients param_gradients() const;
  void accumulate_param_gradients(Gradients& into, double weight = 1.0) const;

 private:
  struct Node {
    Op op = Op::kConstant;
    std::vector<std::uint32_t> inputs;
    Tensor value;
    ParamId param = 0;
    double scalar = 0.0;
    int axis = 0;
    std::size_t begin = 0;
    std::vector<std::size_t> index;
    Tensor aux;
    CustomBackward custom;
  };

  static Node make_node(Op op, std::vector<std::uint32_t> inputs = {});
  Var push(Node node);
  const Tensor& val(std::uint32_t id) const;
  Tensor& ensure_grad(std::uint32_t id);
  void backprop(std::uint32_t id);

  const ParameterSet* params_;
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::unordered_map<ParamId, std::uint32_t> param_nodes_;
};

}  // namespace vaealign

#endif  // VAEALIGN_GRAPH_HPP_
