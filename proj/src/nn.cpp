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

#include "vaealign/nn.hpp"

#include <cmath>

#include "vaealign/errors.hpp"

namespace vaealign {

Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Tensor standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Linear add_linear(ParameterSet& params, const std::string& prefix, std::size_t in,
                  std::size_t out, bool bias, Rng& rng) {
  Linear layer;
  layer.weight = params.add(prefix + ".W", uniform_init(in, out, in, rng));
  layer.has_bias = bias;
  if (bias) layer.bias = params.add(prefix + ".b", uniform_init(1, out, in, rng));
  return layer;
}

Var apply_linear(Graph& g, const Linear& layer, Var x) {
  Var y = g.matmul(x, g.param(layer.weight));
  return layer.has_bias ? g.add(y, g.param(layer.bias)) : y;
}

LstmParams add_lstm(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                    std::size_t hidden_dim, Rng& rng) {
  LstmParams lstm;
  lstm.input_dim = input_dim;
  lstm.hidden_dim = hidden_dim;
  const std::size_t fan_in = input_dim + hidden_dim;
  lstm.weight = params.add(prefix + ".W", uniform_init(fan_in, 4 * hidden_dim, fan_in, rng));
  lstm.bias = params.add(prefix + ".b", uniform_init(1, 4 * hidden_dim, fan_in, rng));
  return lstm;
}

LstmState zero_state(Graph& g, const LstmParams& lstm) {
  return {g.constant(Tensor::matrix(1, lstm.hidden_dim)),
          g.constant(Tensor::matrix(1, lstm.hidden_dim))};
}

LstmState lstm_cell(Graph& g, const LstmParams& lstm, Var x, LstmState prev) {
  const Tensor& xv = g.value(x);
  if (xv.rows() != 1 || xv.cols() != lstm.input_dim) {
    throw ShapeError("lstm_cell: input shape " + shape_string(xv.shape()) +
                     " does not match input_dim " + std::to_string(lstm.input_dim));
  }
  const std::size_t h = lstm.hidden_dim;
  Var z = g.add(g.matmul(g.concat({x, prev.h}, 1), g.param(lstm.weight)), g.param(lstm.bias));
  Var input_gate = g.sigmoid(g.slice(z, 1, 0, h));
  Var forget_gate = g.sigmoid(g.slice(z, 1, h, h));
  Var candidate = g.tanh(g.slice(z, 1, 2 * h, h));
  Var output_gate = g.sigmoid(g.slice(z, 1, 3 * h, h));
  Var c = g.add(g.mul(forget_gate, prev.c), g.mul(input_gate, candidate));
  Var hidden = g.mul(output_gate, g.tanh(c));
  return {hidden, c};
}

Var lstm_sequence(Graph& g, const LstmParams& lstm, Var inputs, bool reverse) {
  const std::size_t steps = g.value(inputs).rows();
  std::vector<Var> outputs(steps);
  LstmState state = zero_state(g, lstm);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    state = lstm_cell(g, lstm, g.slice(inputs, 0, t, 1), state);
    outputs[t] = state.h;
  }
  return steps == 1 ? outputs[0] : g.concat(outputs, 0);
}

BiLstmParams add_bilstm(ParameterSet& params, const std::string& prefix,
                        std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  BiLstmParams layer;
  layer.forward = add_lstm(params, prefix + ".fwd", input_dim, hidden_dim, rng);
  layer.backward = add_lstm(params, prefix + ".bwd", input_dim, hidden_dim, rng);
  return layer;
}

Var bilstm_layer(Graph& g, const BiLstmParams& layer, Var inputs) {
  Var fwd = lstm_sequence(g, layer.forward, inputs, false);
  Var bwd = lstm_sequence(g, layer.backward, inputs, true);
  return g.concat({fwd, bwd}, 1);
}

}  // namespace vaealign
