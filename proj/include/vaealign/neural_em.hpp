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

#ifndef VAEALIGN_NEURAL_EM_HPP_
#define VAEALIGN_NEURAL_EM_HPP_

#include <cstdint>
#include <vector>

#include "vaealign/adam.hpp"
#include "vaealign/alignment.hpp"
#include "vaealign/corpus.hpp"
#include "vaealign/count_aligners.hpp"
#include "vaealign/lattice.hpp"
#include "vaealign/nn.hpp"
#include "vaealign/parallel.hpp"
#include "vaealign/vae.hpp"

namespace vaealign {

struct NeuralEmConfig {
  std::size_t embed_dim = 128;
  std::size_t hidden_dim = 64;
  AdamConfig adam;
  std::size_t batch_size = 100;
  std::size_t iterations = 10;
  std::size_t m_steps = 1;  // Adam steps per batch at frozen posteriors
  std::uint64_t seed = 1;
  Execution exec = Execution::kParallel;
};

// Emission network p(f | e) = softmax(W2 (W1 E[e] + b1) + b2) over source
// types; the HMM variant adds jump logits W_delta (W1 E[e] + b1).
class NeuralAligner {
 public:
  NeuralAligner(AlignFamily family, std::size_t source_vocab, std::size_t target_vocab,
                const NeuralEmConfig& config, Rng& rng);

  AlignFamily family() const { return family_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  std::size_t source_vocab() const { return source_vocab_; }
  std::size_t target_vocab() const { return target_vocab_; }

  // [V_tgt x V_src] log-emission table for every target type.
  Tensor log_emission_table() const;
  // [V_tgt x kJumpCount] jump logits (HMM only).
  Tensor jump_logit_table() const;

  // Graph pieces for the given target types (rows in the order given).
  Var hidden(Graph& g, const std::vector<std::size_t>& types) const;
  Var log_emission(Graph& g, Var hidden_rows) const;
  Var jump_logits(Graph& g, Var hidden_rows) const;

 private:
  AlignFamily family_;
  std::size_t source_vocab_;
  std::size_t target_vocab_;
  ParameterSet params_;
  ParamId embedding_ = 0;
  Linear first_;
  Linear second_;
  ParamId jump_ = 0;
};

// Row k: log p(a_j = i | a_{j-1} = k) over landings 0..I from jump logits of
// the target word at position k, masked to feasible jumps and renormalized.
Tensor masked_transition(const Tensor& jump_logits, const Sentence& target);

// Per-pair lattice under the current network, states 0..I.
Lattice neural_lattice(const NeuralAligner& model, const Tensor& log_table,
                       const Tensor& jump_table, const SentencePair& pair);

struct NeuralEStep {
  std::vector<Tensor> gamma;  // per pair [J x (I+1)]
  std::vector<Tensor> xi;     // per pair [(I+1) x (I+1)], HMM only
  double log_likelihood = 0.0;
};

NeuralEStep neural_e_step(const NeuralAligner& model, const std::vector<const SentencePair*>& pairs,
                          Execution exec = Execution::kParallel);

// Expected complete-data log-likelihood of `pairs` under frozen posteriors
// (emission part plus, for HMM, transition part), as a graph scalar.
Var expected_complete_ll(Graph& g, const NeuralAligner& model,
                         const std::vector<const SentencePair*>& pairs, const NeuralEStep& estep);

struct NeuralEmLog {
  std::size_t iteration = 0;
  double log_likelihood = 0.0;  // sum of per-batch E-step log-likelihoods
};

std::vector<NeuralEmLog> neural_em_train(NeuralAligner& model, const ParallelCorpus& corpus,
                                         const NeuralEmConfig& config);

AlignmentSet neural_align(const NeuralAligner& model, const Tensor& log_table,
                          const Tensor& jump_table, const SentencePair& pair,
                          DecodeRule rule = DecodeRule::kViterbi);
std::vector<AlignmentSet> neural_align_corpus(const NeuralAligner& model,
                                              const ParallelCorpus& corpus,
                                              DecodeRule rule = DecodeRule::kViterbi,
                                              Execution exec = Execution::kParallel);

}  // namespace vaealign

#endif  // VAEALIGN_NEURAL_EM_HPP_
