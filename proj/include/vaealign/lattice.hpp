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

#ifndef VAEALIGN_LATTICE_HPP_
#define VAEALIGN_LATTICE_HPP_

#include <cstddef>
#include <vector>

#include "vaealign/tensor.hpp"

namespace vaealign {

// Log-space alignment lattice for one sentence pair. States are target
// positions 0..I (0 is NULL), observations are source positions 1..J.
//   log_emission   [J x S]  log p(f_j | state i)
//   log_initial    [1 x S]  log p(a_1 = i)
//   log_transition [S x S]  log p(a_j = i | a_{j-1} = k), row k
struct Lattice {
  Tensor log_emission;
  Tensor log_initial;
  Tensor log_transition;

  std::size_t length() const { return log_emission.rows(); }
  std::size_t states() const { return log_emission.cols(); }
};

// Uniform initial and transition log-probabilities, so the lattice scores
// like IBM model 1 on `log_emission`.
Lattice uniform_lattice(Tensor log_emission);

struct ForwardBackward {
  Tensor alpha;  // [J x S]
  Tensor beta;   // [J x S]
  double log_likelihood = 0.0;
};

ForwardBackward forward_backward(const Lattice& lattice);
double lattice_forward(const Lattice& lattice);
// Total log-likelihood recovered from the backward pass alone.
double lattice_backward_log_likelihood(const Lattice& lattice);

// gamma[j][i] = p(a_j = i | f, e). Rows sum to one.
Tensor lattice_posteriors(const Lattice& lattice);
Tensor lattice_posteriors(const Lattice& lattice, const ForwardBackward& fb);
// xi[k][i] = sum over j >= 2 of p(a_{j-1} = k, a_j = i | f, e).
Tensor lattice_transition_posteriors(const Lattice& lattice, const ForwardBackward& fb);

// Max-product path. Ties go to the smaller state index, both for the final
// state and for every back-pointer.
std::vector<std::size_t> lattice_viterbi(const Lattice& lattice);
double lattice_path_score(const Lattice& lattice, const std::vector<std::size_t>& path);

}  // namespace vaealign

#endif  // VAEALIGN_LATTICE_HPP_
