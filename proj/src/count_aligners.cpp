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

#include "vaealign/count_aligners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vaealign/errors.hpp"

namespace vaealign {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

// ------------------------------------------------------------- lexical table

LexicalTable LexicalTable::uniform_over_support(const ParallelCorpus& corpus) {
  const std::size_t rows = corpus.target_vocab.size();
  std::vector<std::vector<TokenId>> support(rows);
  for (const auto& pair : corpus.pairs) {
    for (TokenId f : pair.source.ids) {
      support[Vocabulary::kNull].push_back(f);
      for (TokenId e : pair.target.ids) support[e].push_back(f);
    }
  }
  LexicalTable table;
  table.offsets_.assign(rows + 1, 0);
  for (std::size_t e = 0; e < rows; ++e) {
    auto& row = support[e];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    table.offsets_[e + 1] = table.offsets_[e] + row.size();
    const double p = row.empty() ? 0.0 : 1.0 / static_cast<double>(row.size());
    table.sources_.insert(table.sources_.end(), row.begin(), row.end());
    table.probs_.insert(table.probs_.end(), row.size(), p);
  }
  return table;
}

std::optional<std::size_t> LexicalTable::slot(TokenId e, TokenId f) const {
  if (e + 1 >= offsets_.size()) return std::nullopt;
  const auto begin = sources_.begin() + static_cast<std::ptrdiff_t>(offsets_[e]);
  const auto end = sources_.begin() + static_cast<std::ptrdiff_t>(offsets_[e + 1]);
  auto it = std::lower_bound(begin, end, f);
  if (it == end || *it != f) return std::nullopt;
  return static_cast<std::size_t>(it - sources_.begin());
}

double LexicalTable::prob(TokenId e, TokenId f) const {
  const auto s = slot(e, f);
  return s ? std::max(probs_[*s], kFloor) : kFloor;
}

std::span<const TokenId> LexicalTable::row_sources(TokenId e) const {
  return std::span<const TokenId>(sources_).subspan(offsets_[e], offsets_[e + 1] - offsets_[e]);
}

std::span<const double> LexicalTable::row_probs(TokenId e) const {
  return std::span<const double>(probs_).subspan(offsets_[e], offsets_[e + 1] - offsets_[e]);
}

void LexicalTable::renormalize(std::span<const double> counts, double smoothing) {
  if (counts.size() != probs_.size()) {
    throw ShapeError("LexicalTable::renormalize: count vector size mismatch");
  }
  for (std::size_t e = 0; e + 1 < offsets_.size(); ++e) {
    const std::size_t begin = offsets_[e], end = offsets_[e + 1];
    if (begin == end) continue;
    double total = 0.0;
    for (std::size_t k = begin; k < end; ++k) total += counts[k];
    const double denom = total + smoothing * static_cast<double>(end - begin);
    for (std::size_t k = begin; k < end; ++k) probs_[k] = (counts[k] + smoothing) / denom;
  }
}

Tensor LexicalTable::to_tensor() const {
  Tensor t = Tensor::matrix(std::max<std::size_t>(probs_.size(), 1), 3);
  for (std::size_t e = 0; e + 1 < offsets_.size(); ++e)
    for (std::size_t k = offsets_[e]; k < offsets_[e + 1]; ++k) {
      t(k, 0) = static_cast<double>(e);
      t(k, 1) = static_cast<double>(sources_[k]);
      t(k, 2) = probs_[k];
    }
  if (probs_.empty()) t(0, 0) = -1.0;
  return t;
}

LexicalTable LexicalTable::from_tensor(const Tensor& t, std::size_t target_types) {
  if (t.cols() != 3) throw FormatError("lexical table tensor must have 3 columns");
  LexicalTable table;
  table.offsets_.assign(target_types + 1, 0);
  if (t.rows() == 1 && t(0, 0) < 0) return table;
  std::size_t prev_e = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const double e = t(r, 0), f = t(r, 1);
    if (e < 0 || e >= static_cast<double>(target_types) || f < 0 || e < static_cast<double>(prev_e)) {
      throw FormatError("lexical table tensor row " + std::to_string(r) + " is out of order");
    }
    prev_e = static_cast<std::size_t>(e);
    ++table.offsets_[prev_e + 1];
    table.sources_.push_back(static_cast<TokenId>(f));
    table.probs_.push_back(t(r, 2));
  }
  for (std::size_t e = 0; e < target_types; ++e) table.offsets_[e + 1] += table.offsets_[e];
  return table;
}

// --------------------------------------------------------------------- IBM-1

namespace {

// Per-pair E-step output: (slot, posterior) contributions in (j, i) order.
struct PairContribution {
  std::vector<std::pair<std::size_t, double>> lexical;
  double log_likelihood = 0.0;
};

template <typename Emit>
double ibm1_pair_estep(const LexicalTable& table, const SentencePair& pair, Emit&& emit) {
  const auto& src = pair.source.ids;
  const auto& tgt = pair.target.ids;
  const std::size_t states = tgt.size() + 1;
  std::vector<double> probs(states);
  std::vector<std::optional<std::size_t>> slots(states);
  double ll = 0.0;
  for (TokenId f : src) {
    double denom = 0.0;
    for (std::size_t i = 0; i < states; ++i) {
      const TokenId e = i == 0 ? Vocabulary::kNull : tgt[i - 1];
      slots[i] = table.slot(e, f);
      probs[i] = slots[i] ? std::max(table.probs()[*slots[i]], LexicalTable::kFloor)
                          : LexicalTable::kFloor;
      denom += probs[i];
    }
    ll += std::log(denom / static_cast<double>(states));
    for (std::size_t i = 0; i < states; ++i) {
      if (slots[i]) emit(*slots[i], probs[i] / denom);
    }
  }
  return ll;
}

}  // namespace

LexicalCounts ibm1_expected_counts(const ParallelCorpus& corpus, const LexicalTable& table,
                                   Execution exec) {
  LexicalCounts out;
  out.counts.assign(table.nonzeros(), 0.0);
  if (exec == Execution::kSerial) {
    for (const auto& pair : corpus.pairs) {
      out.log_likelihood += ibm1_pair_estep(
          table, pair, [&](std::size_t slot, double post) { out.counts[slot] += post; });
    }
    return out;
  }
  ordered_map_reduce<PairContribution>(
      corpus.size(), exec,
      [&](std::size_t k) {
        PairContribution c;
        c.log_likelihood = ibm1_pair_estep(table, corpus.pairs[k], [&](std::size_t slot, double post) {
          c.lexical.emplace_back(slot, post);
        });
        return c;
      },
      [&](std::size_t, PairContribution c) {
        for (const auto& [slot, post] : c.lexical) out.counts[slot] += post;
        out.log_likelihood += c.log_likelihood;
      });
  return out;
}

Ibm1EmResult ibm1_em_step(const ParallelCorpus& corpus, const LexicalTable& table,
                          Execution exec) {
  LexicalCounts counts = ibm1_expected_counts(corpus, table, exec);
  Ibm1EmResult result{table, counts.log_likelihood};
  result.table.renormalize(counts.counts, kEmSmoothing);
  return result;
}

Tensor ibm1_posteriors(const LexicalTable& table, const SentencePair& pair) {
  const std::size_t states = pair.target.size() + 1;
  Tensor post = Tensor::matrix(pair.source.size(), states);
  for (std::size_t j = 0; j < pair.source.size(); ++j) {
    double denom = 0.0;
    for (std::size_t i = 0; i < states; ++i) {
      const TokenId e = i == 0 ? Vocabulary::kNull : pair.target.ids[i - 1];
      post(j, i) = table.prob(e, pair.source.ids[j]);
      denom += post(j, i);
    }
    for (std::size_t i = 0; i < states; ++i) post(j, i) /= denom;
  }
  return post;
}

// ----------------------------------------------------------------------- HMM

JumpDistribution JumpDistribution::uniform() {
  JumpDistribution d;
  d.probs.fill(1.0 / static_cast<double>(kJumpCount));
  return d;
}

Lattice hmm_lattice(const HmmParams& params, const SentencePair& pair) {
  const std::size_t n = pair.source.size(), s = pair.target.size() + 1;
  Lattice lat{Tensor::matrix(n, s), Tensor::matrix(1, s, -std::log(static_cast<double>(s))),
              Tensor::matrix(s, s, kNegInf)};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < s; ++i) {
      const TokenId e = i == 0 ? Vocabulary::kNull : pair.target.ids[i - 1];
      lat.log_emission(j, i) = std::log(params.emission.prob(e, pair.source.ids[j]));
    }
  for (std::size_t k = 0; k < s; ++k) {
    double z = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      const int d = static_cast<int>(i) - static_cast<int>(k);
      if (std::abs(d) <= kMaxJump) z += params.jumps.at(d);
    }
    for (std::size_t i = 0; i < s; ++i) {
      const int d = static_cast<int>(i) - static_cast<int>(k);
      if (std::abs(d) <= kMaxJump && z > 0.0) {
        lat.log_transition(k, i) = std::log(params.jumps.at(d) / z);
      }
    }
  }
  return lat;
}

namespace {

struct HmmPairContribution {
  std::vector<std::pair<std::size_t, double>> lexical;
  Tensor xi;
  double log_likelihood = 0.0;
};

template <typename Emit>
HmmPairContribution hmm_pair_estep(const HmmParams& params, const SentencePair& pair, Emit&& emit) {
  const Lattice lat = hmm_lattice(params, pair);
  const ForwardBackward fb = forward_backward(lat);
  const Tensor gamma = lattice_posteriors(lat, fb);
  for (std::size_t j = 0; j < lat.length(); ++j)
    for (std::size_t i = 0; i < lat.states(); ++i) {
      const TokenId e = i == 0 ? Vocabulary::kNull : pair.target.ids[i - 1];
      if (auto slot = params.emission.slot(e, pair.source.ids[j])) emit(*slot, gamma(j, i));
    }
  HmmPairContribution c;
  c.xi = lattice_transition_posteriors(lat, fb);
  c.log_likelihood = fb.log_likelihood;
  return c;
}

void add_transitions(HmmCounts& out, const Tensor& xi) {
  const std::size_t s = xi.rows();
  if (out.context_mass.size() <= s) out.context_mass.resize(s + 1);
  auto& mass = out.context_mass[s];
  mass.resize(s, 0.0);
  for (std::size_t k = 0; k < s; ++k)
    for (std::size_t i = 0; i < s; ++i) {
      const int d = static_cast<int>(i) - static_cast<int>(k);
      if (std::abs(d) > kMaxJump) continue;
      out.jumps[static_cast<std::size_t>(d + kMaxJump)] += xi(k, i);
      mass[k] += xi(k, i);
    }
}

}  // namespace

HmmCounts hmm_expected_counts(const ParallelCorpus& corpus, const HmmParams& params,
                              Execution exec) {
  HmmCounts out;
  out.emission.assign(params.emission.nonzeros(), 0.0);
  if (exec == Execution::kSerial) {
    for (const auto& pair : corpus.pairs) {
      auto c = hmm_pair_estep(params, pair,
                              [&](std::size_t slot, double post) { out.emission[slot] += post; });
      add_transitions(out, c.xi);
      out.log_likelihood += c.log_likelihood;
    }
    return out;
  }
  ordered_map_reduce<HmmPairContribution>(
      corpus.size(), exec,
      [&](std::size_t k) {
        std::vector<std::pair<std::size_t, double>> lexical;
        auto c = hmm_pair_estep(params, corpus.pairs[k], [&](std::size_t slot, double post) {
          lexical.emplace_back(slot, post);
        });
        c.lexical = std::move(lexical);
        return c;
      },
      [&](std::size_t, HmmPairContribution c) {
        for (const auto& [slot, post] : c.lexical) out.emission[slot] += post;
        add_transitions(out, c.xi);
        out.log_likelihood += c.log_likelihood;
      });
  return out;
}

JumpDistribution maximize_jumps(const HmmCounts& counts, const JumpDistribution& start,
                                int rounds) {
  JumpDistribution jumps = start;
  for (int round = 0; round < rounds; ++round) {
    std::array<double, kJumpCount> denom{};
    for (std::size_t s = 1; s < counts.context_mass.size(); ++s) {
      const auto& mass = counts.context_mass[s];
      for (std::size_t k = 0; k < mass.size(); ++k) {
        if (mass[k] <= 0.0) continue;
        const int lo = std::max(-static_cast<int>(k), -kMaxJump);
        const int hi = std::min(static_cast<int>(s - 1 - k), kMaxJump);
        double z = 0.0;
        for (int d = lo; d <= hi; ++d) z += jumps.at(d);
        for (int d = lo; d <= hi; ++d) denom[static_cast<std::size_t>(d + kMaxJump)] += mass[k] / z;
      }
    }
    JumpDistribution next = jumps;
    for (std::size_t d = 0; d < kJumpCount; ++d) {
      if (denom[d] > 0.0) next.probs[d] = (counts.jumps[d] + kEmSmoothing) / denom[d];
    }
    double total = 0.0;
    for (double p : next.probs) total += p;
    for (double& p : next.probs) p /= total;
    jumps = next;
  }
  return jumps;
}

HmmEmResult hmm_em_step(const ParallelCorpus& corpus, const HmmParams& params, Execution exec) {
  const HmmCounts counts = hmm_expected_counts(corpus, params, exec);
  HmmEmResult result{params, counts.log_likelihood};
  result.params.emission.renormalize(counts.emission, kEmSmoothing);
  result.params.jumps = maximize_jumps(counts, params.jumps);
  return result;
}

HmmParams init_hmm(const ParallelCorpus& corpus, int ibm1_iterations) {
  HmmParams params{LexicalTable::uniform_over_support(corpus), JumpDistribution::uniform()};
  for (int it = 0; it < ibm1_iterations; ++it) {
    params.emission = ibm1_em_step(corpus, params.emission).table;
  }
  return params;
}

// ------------------------------------------------------------------ decoding

AlignmentSet alignment_from_path(const std::vector<std::size_t>& path, std::size_t source_len,
                                 std::size_t target_len) {
  AlignmentSet links(source_len, target_len);
  for (std::size_t j = 0; j < path.size(); ++j) {
    if (path[j] != 0) links.add(j + 1, path[j]);
  }
  return links;
}

std::vector<std::size_t> posterior_argmax(const Tensor& posteriors) {
  std::vector<std::size_t> path(posteriors.rows(), 0);
  for (std::size_t j = 0; j < posteriors.rows(); ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < posteriors.cols(); ++i) {
      if (posteriors(j, i) > best) {
        best = posteriors(j, i);
        path[j] = i;
      }
    }
  }
  return path;
}

AlignmentSet decode_ibm1(const LexicalTable& table, const SentencePair& pair) {
  std::vector<std::size_t> path(pair.source.size(), 0);
  for (std::size_t j = 0; j < pair.source.size(); ++j) {
    double best = -1.0;
    for (std::size_t i = 0; i <= pair.target.size(); ++i) {
      const TokenId e = i == 0 ? Vocabulary::kNull : pair.target.ids[i - 1];
      const double p = table.prob(e, pair.source.ids[j]);
      if (p > best) {
        best = p;
        path[j] = i;
      }
    }
  }
  return alignment_from_path(path, pair.source.size(), pair.target.size());
}

AlignmentSet decode_hmm(const HmmParams& params, const SentencePair& pair, DecodeRule rule) {
  const Lattice lat = hmm_lattice(params, pair);
  const auto path = rule == DecodeRule::kViterbi ? lattice_viterbi(lat)
                                                 : posterior_argmax(lattice_posteriors(lat));
  return alignment_from_path(path, pair.source.size(), pair.target.size());
}

std::vector<AlignmentSet> decode_corpus_ibm1(const LexicalTable& table,
                                             const ParallelCorpus& corpus, Execution exec) {
  std::vector<AlignmentSet> out(corpus.size());
  ordered_map_reduce<AlignmentSet>(
      corpus.size(), exec, [&](std::size_t k) { return decode_ibm1(table, corpus.pairs[k]); },
      [&](std::size_t k, AlignmentSet a) { out[k] = std::move(a); });
  return out;
}

std::vector<AlignmentSet> decode_corpus_hmm(const HmmParams& params,
                                            const ParallelCorpus& corpus, DecodeRule rule,
                                            Execution exec) {
  std::vector<AlignmentSet> out(corpus.size());
  ordered_map_reduce<AlignmentSet>(
      corpus.size(), exec,
      [&](std::size_t k) { return decode_hmm(params, corpus.pairs[k], rule); },
      [&](std::size_t k, AlignmentSet a) { out[k] = std::move(a); });
  return out;
}

}  // namespace vaealign
