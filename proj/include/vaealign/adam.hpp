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

#ifndef VAEALIGN_ADAM_HPP_
#define VAEALIGN_ADAM_HPP_

#include <cstddef>

#include "vaealign/graph.hpp"

namespace vaealign {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moments are shaped like the parameters they
// track; the optimizer is bound to one ParameterSet layout.
class Adam {
 public:
  Adam(const ParameterSet& params, AdamConfig config = {});

  void step(ParameterSet& params, const Gradients& grads);
  std::size_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
  std::size_t step_ = 0;
};

// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

}  // namespace vaealign

#endif  // VAEALIGN_ADAM_HPP_
