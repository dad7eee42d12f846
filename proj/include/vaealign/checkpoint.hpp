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

#ifndef VAEALIGN_CHECKPOINT_HPP_
#define VAEALIGN_CHECKPOINT_HPP_

#include <filesystem>

#include "vaealign/graph.hpp"

namespace vaealign {

// Binary checkpoint layout (all integers and floats little-endian):
//   "VAEALIGN-CKPT\n", u32 version (=1), u64 parameter count, then per
//   parameter: u32 name length, name bytes, u32 rank, u64 dims[rank],
//   f64 values[prod(dims)] in row-major order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& path);

// Copies values from `source` into same-named, same-shaped parameters of
// `target`. Every parameter of `target` must be present.
void restore_parameters(ParameterSet& target, const ParameterSet& source);

}  // namespace vaealign

#endif  // VAEALIGN_CHECKPOINT_HPP_
