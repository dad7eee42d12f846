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

#ifndef VAEALIGN_VAE_TRAIN_HPP_
#define VAEALIGN_VAE_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "vaealign/adam.hpp"
#include "vaealign/corpus.hpp"
#include "vaealign/parallel.hpp"
#include "vaealign/vae.hpp"

namespace vaealign {

struct VaeTrainConfig {
  ObjectiveWeights weights;
  AdamConfig adam;
  std::size_t batch_size = 100;
  std::size_t epochs = 10;
  double clip_norm = 5.0;
  bool agreement = false;  // +AC, joint shared models only
  bool noise = false;      // +Noise on the monolingual batches
  NoiseConfig noise_config;
  std::uint64_t seed = 1;
  Execution exec = Execution::kParallel;
};

// Monolingual sentences per language; `target` is encoded by the forward
// direction, `source` by the reverse one (joint models only).
struct MonoCorpus {
  std::vector<Sentence> target;
  std::vector<Sentence> source;
  bool empty() const { return target.empty() && source.empty(); }
};

// Raw (unweighted) loss sums per observed token for one epoch; `total` is the
// weighted objective per token. Monolingual terms are per monolingual token.
struct EpochLog {
  std::size_t epoch = 0;
  double recon = 0.0;
  double align = 0.0;
  double kl = 0.0;
  double agree = 0.0;
  double mono = 0.0;
  double total = 0.0;
};

void write_epoch_header(std::ostream& out);
void write_epoch_row(std::ostream& out, const EpochLog& row);

// Sentences per gradient work item; fixed so the reduction order (and thus
// every bit of the result) does not depend on the thread count.
inline constexpr std::size_t kMicroGroup = 10;

using EpochCallback = std::function<void(const EpochLog&)>;

// Adam on mean-per-sentence losses. Parallel batches and (when present)
// monolingual batches alternate one to one. Throws DivergenceError naming the
// first non-finite term.
std::vector<EpochLog> vae_train(VaeAligner& model, const ParallelCorpus& corpus,
                                const MonoCorpus& mono, const VaeTrainConfig& config,
                                const EpochCallback& on_epoch = {});

// One optimizer step on the given pairs, exposed for tests of the sharing
// contract. Returns the batch objective before the update.
double vae_train_step(VaeAligner& model, Adam& adam, const std::vector<SentencePair>& batch,
                      const VaeTrainConfig& config, Rng& rng);

// Aligns every pair, forward direction (source positions first in links).
std::vector<AlignmentSet> vae_align_corpus(const VaeAligner& model, const ParallelCorpus& corpus,
                                           Direction dir = Direction::kForward,
                                           Execution exec = Execution::kParallel);

// Fraction of observed tokens whose reconstruction argmax is the token itself.
double reconstruction_accuracy(const VaeAligner& model, const std::vector<Sentence>& sentences,
                               Direction dir = Direction::kForward,
                               Execution exec = Execution::kParallel);

}  // namespace vaealign

#endif  // VAEALIGN_VAE_TRAIN_HPP_
