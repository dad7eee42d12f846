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

#ifndef VAEALIGN_NN_HPP_
#define VAEALIGN_NN_HPP_

#include <random>
#include <string>

#include "vaealign/graph.hpp"

namespace vaealign {

// Every random draw of a run comes from one of these, seeded once.
using Rng = std::mt19937_64;

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);
Tensor standard_normal(std::size_t rows, std::size_t cols, Rng& rng);

struct Linear {
  ParamId weight = 0;
  ParamId bias = 0;
  bool has_bias = true;
};

Linear add_linear(ParameterSet& params, const std::string& prefix, std::size_t in,
                  std::size_t out, bool bias, Rng& rng);
Var apply_linear(Graph& g, const Linear& layer, Var x);

// LSTM weights: W is [(input + hidden) x 4*hidden] acting on concat(x, h),
// gate blocks ordered input, forget, candidate, output.
struct LstmParams {
  ParamId weight = 0;
  ParamId bias = 0;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
};

struct LstmState {
  Var h;
  Var c;
};

LstmParams add_lstm(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                    std::size_t hidden_dim, Rng& rng);
LstmState zero_state(Graph& g, const LstmParams& lstm);
LstmState lstm_cell(Graph& g, const LstmParams& lstm, Var x, LstmState prev);

// Runs the cell over the rows of `inputs` ([T x input]); returns [T x hidden]
// with row t holding the state after reading row t (in reading order when
// `reverse` is set, row t still corresponds to input t).
Var lstm_sequence(Graph& g, const LstmParams& lstm, Var inputs, bool reverse);

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;
};

BiLstmParams add_bilstm(ParameterSet& params, const std::string& prefix,
                        std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
// [T x 2*hidden]: per position concat(forward state, backward state).
Var bilstm_layer(Graph& g, const BiLstmParams& layer, Var inputs);

}  // namespace vaealign

#endif  // VAEALIGN_NN_HPP_
