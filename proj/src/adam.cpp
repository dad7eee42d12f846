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

#include "vaealign/adam.hpp"

#include <cmath>

#include "vaealign/errors.hpp"

namespace vaealign {

Adam::Adam(const ParameterSet& params, AdamConfig config) : config_(config) {
  first_ = zero_gradients(params);
  second_ = zero_gradients(params);
}

void Adam::step(ParameterSet& params, const Gradients& grads) {
  if (grads.size() != params.size() || first_.size() != params.size()) {
    throw ShapeError("adam_step: gradient count does not match parameter count");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (grads[p].size() != params.value(p).size() || first_[p].size() != grads[p].size()) {
      throw ShapeError("adam_step: shape mismatch for " + params.name(p) + ": " +
                       shape_string(params.value(p).shape()) + " vs " +
                       shape_string(grads[p].shape()));
    }
  }
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params.value(p).values();
    auto g = grads[p].values();
    auto m = first_[p].values();
    auto v = second_[p].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      w[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& g : grads)
      for (double& v : g.values()) v *= factor;
  }
  return norm;
}

}  // namespace vaealign
