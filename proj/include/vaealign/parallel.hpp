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

#ifndef VAEALIGN_PARALLEL_HPP_
#define VAEALIGN_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vaealign {

// Serial loops are the reference implementations. Parallel kernels compute
// per-item results across OpenMP threads, then reduce them serially in item
// order, so both paths give bit-identical results for any thread count.
enum class Execution { kSerial, kParallel };

inline void set_thread_count(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Items are processed in chunks so buffered per-item results stay bounded.
inline constexpr std::size_t kReductionChunk = 4096;

// Computes produce(k) for k in [0, n) (concurrently when parallel) and feeds
// the results to consume(k, result) strictly in index order.
template <typename Result, typename Produce, typename Consume>
void ordered_map_reduce(std::size_t n, Execution exec, Produce&& produce, Consume&& consume) {
  if (exec == Execution::kSerial) {
    for (std::size_t k = 0; k < n; ++k) consume(k, produce(k));
    return;
  }
  std::vector<Result> buffer;
  for (std::size_t begin = 0; begin < n; begin += kReductionChunk) {
    const std::size_t end = std::min(n, begin + kReductionChunk);
    buffer.assign(end - begin, Result{});
    const auto count = static_cast<long long>(end - begin);
#pragma omp parallel for schedule(dynamic, 4)
    for (long long k = 0; k < count; ++k) {
      buffer[static_cast<std::size_t>(k)] = produce(begin + static_cast<std::size_t>(k));
    }
    for (std::size_t k = begin; k < end; ++k) consume(k, std::move(buffer[k - begin]));
  }
}

}  // namespace vaealign

#endif  // VAEALIGN_PARALLEL_HPP_
