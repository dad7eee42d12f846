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

#ifndef VAEALIGN_TESTS_SUPPORT_GRAD_CASES_HPP_
#define VAEALIGN_TESTS_SUPPORT_GRAD_CASES_HPP_

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "support/gradcheck.hpp"
#include "vaealign/graph.hpp"
#include "vaealign/nn.hpp"

namespace vaealign::testing {

// A randomly drawn differentiable scalar with the parameters it depends on.
struct GradCase {
  std::shared_ptr<void> owner;  // keeps `params` alive
  ParameterSet* params = nullptr;
  std::function<Var(Graph&)> loss;
  std::size_t per_param = std::numeric_limits<std::size_t>::max();
};

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                     double hi = 1.0);

// One name per graph op (plus broadcasting variants).
const std::vector<std::string>& op_case_names();
GradCase make_op_case(const std::string& name, Rng& rng);

GradCase make_lstm_cell_case(Rng& rng);
GradCase make_encoder_case(Rng& rng);
// Joint +SP objective with agreement (nine terms) on a two-pair toy batch,
// random family (IBM-1 or HMM) per draw.
GradCase make_full_objective_case(Rng& rng);

GradCheck run_case(GradCase& c, Rng& rng);

}  // namespace vaealign::testing

#endif  // VAEALIGN_TESTS_SUPPORT_GRAD_CASES_HPP_
