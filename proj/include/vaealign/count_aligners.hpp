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

#ifndef VAEALIGN_COUNT_ALIGNERS_HPP_
#define VAEALIGN_COUNT_ALIGNERS_HPP_

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "vaealign/alignment.hpp"
#include "vaealign/corpus.hpp"
#include "vaealign/lattice.hpp"
#include "vaealign/parallel.hpp"

namespace vaealign {

// t(f | e) stored sparsely over the (e, f) pairs that co-occur in the
// training corpus, with e ranging over target ids including NULL.
class LexicalTable {
 public:
  // Probability returned for pairs outside the stored support.
  static constexpr double kFloor = 1e-12;

  LexicalTable() = default;
  // Each row uniform over its co-occurrence support.
  static LexicalTable uniform_over_support(const ParallelCorpus& corpus);

  std::optional<std::size_t> slot(TokenId e, TokenId f) const;
  double prob(TokenId e, TokenId f) const;
  std::size_t target_types() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t nonzeros() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  std::span<double> probs() { return probs_; }
  // Row entries for target id e: (source ids, probabilities).
  std::span<const TokenId> row_sources(TokenId e) const;
  std::span<const double> row_probs(TokenId e) const;

  // M-step: each row set to (count + smoothing) / (row total + smoothing * row size).
  void renormalize(std::span<const double> counts, double smoothing);

  // [nnz x 3] rows of (e, f, t(f|e)).
  Tensor to_tensor() const;
  static LexicalTable from_tensor(const Tensor& table, std::size_t target_types);

 private:
  std::vector<std::size_t> offsets_;
  std::vector<TokenId> sources_;
  std::vector<double> probs_;
};

inline constexpr double kEmSmoothing = 1e-12;

struct Ibm1EmResult {
  LexicalTable table;
  double log_likelihood = 0.0;  // under the input table
};

// Expected lexical counts, laid out like table.probs(), plus corpus log-likelihood.
struct LexicalCounts {
  std::vector<double> counts;
  double log_likelihood = 0.0;
};

LexicalCounts ibm1_expected_counts(const ParallelCorpus& corpus, const LexicalTable& table,
                                   Execution exec = Execution::kParallel);
Ibm1EmResult ibm1_em_step(const ParallelCorpus& corpus, const LexicalTable& table,
                          Execution exec = Execution::kParallel);
// p(a_j = i | f, e) under IBM-1 for one pair: [J x (I+1)].
Tensor ibm1_posteriors(const LexicalTable& table, const SentencePair& pair);

// Jump distances d = a_j - a_{j-1} in [-kMaxJump, kMaxJump], including
// moves to and from the NULL position 0.
inline constexpr int kMaxJump = 150;
inline constexpr std::size_t kJumpCount = 2 * kMaxJump + 1;

struct JumpDistribution {
  std::array<double, kJumpCount> probs{};

  static JumpDistribution uniform();
  double& at(int jump) { return probs[static_cast<std::size_t>(jump + kMaxJump)]; }
  double at(int jump) const { return probs[static_cast<std::size_t>(jump + kMaxJump)]; }
};

struct HmmParams {
  LexicalTable emission;
  JumpDistribution jumps;
};

// Transition from k to i is jump(i - k) renormalized over landings 0..I.
// Initial distribution is uniform.
Lattice hmm_lattice(const HmmParams& params, const SentencePair& pair);

struct HmmCounts {
  std::vector<double> emission;
  std::array<double, kJumpCount> jumps{};
  // context_mass[S][k]: expected transitions leaving state k in sentences with S states.
  std::vector<std::vector<double>> context_mass;
  double log_likelihood = 0.0;
};

HmmCounts hmm_expected_counts(const ParallelCorpus& corpus, const HmmParams& params,
                              Execution exec = Execution::kParallel);

struct HmmEmResult {
  HmmParams params;
  double log_likelihood = 0.0;  // under the input params
};

// Baum-Welch. Jump counts are pooled over positions; since transitions are
// renormalized per context, the jump update runs a few minorize-maximize
// rounds on the expected log-likelihood so it never decreases.
HmmEmResult hmm_em_step(const ParallelCorpus& corpus, const HmmParams& params,
                        Execution exec = Execution::kParallel);
JumpDistribution maximize_jumps(const HmmCounts& counts, const JumpDistribution& start,
                                int rounds = 10);

// Emission from `ibm1_iterations` IBM-1 rounds, uniform jumps.
HmmParams init_hmm(const ParallelCorpus& corpus, int ibm1_iterations = 3);

enum class DecodeRule { kViterbi, kPosterior };

// Links with a_j = 0 are left out. Parallel decoding is order-preserving.
AlignmentSet decode_ibm1(const LexicalTable& table, const SentencePair& pair);
AlignmentSet decode_hmm(const HmmParams& params, const SentencePair& pair,
                        DecodeRule rule = DecodeRule::kViterbi);
AlignmentSet alignment_from_path(const std::vector<std::size_t>& path, std::size_t source_len,
                                 std::size_t target_len);
// Row-wise argmax of a posterior (or log-posterior) matrix, ties to the
// smaller state.
std::vector<std::size_t> posterior_argmax(const Tensor& posteriors);

std::vector<AlignmentSet> decode_corpus_ibm1(const LexicalTable& table,
                                             const ParallelCorpus& corpus,
                                             Execution exec = Execution::kParallel);
std::vector<AlignmentSet> decode_corpus_hmm(const HmmParams& params,
                                            const ParallelCorpus& corpus,
                                            DecodeRule rule = DecodeRule::kViterbi,
                                            Execution exec = Execution::kParallel);

}  // namespace vaealign

#endif  // VAEALIGN_COUNT_ALIGNERS_HPP_
