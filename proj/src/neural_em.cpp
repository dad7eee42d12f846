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

#include "vaealign/neural_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "vaealign/errors.hpp"

namespace vaealign {

NeuralAligner::NeuralAligner(AlignFamily family, std::size_t source_vocab,
                             std::size_t target_vocab, const NeuralEmConfig& config, Rng& rng)
    : family_(family), source_vocab_(source_vocab), target_vocab_(target_vocab) {
  embedding_ = params_.add("nn.E", uniform_init(target_vocab, config.embed_dim,
                                                config.embed_dim, rng));
  first_ = add_linear(params_, "nn.h", config.embed_dim, config.hidden_dim, true, rng);
  second_ = add_linear(params_, "nn.out", config.hidden_dim, source_vocab, true, rng);
  if (family == AlignFamily::kHmm) {
    jump_ = params_.add("nn.W_delta",
                        uniform_init(config.hidden_dim, kJumpCount, config.hidden_dim, rng));
  }
}

Var NeuralAligner::hidden(Graph& g, const std::vector<std::size_t>& types) const {
  return apply_linear(g, first_, g.embedding_lookup(g.param(embedding_), types));
}

Var NeuralAligner::log_emission(Graph& g, Var hidden_rows) const {
  return g.log_softmax(apply_linear(g, second_, hidden_rows), 1);
}

Var NeuralAligner::jump_logits(Graph& g, Var hidden_rows) const {
  if (family_ != AlignFamily::kHmm) throw ConfigError("jump logits need the HMM family");
  return g.matmul(hidden_rows, g.param(jump_));
}

namespace {
std::vector<std::size_t> all_types(std::size_t n) {
  std::vector<std::size_t> types(n);
  std::iota(types.begin(), types.end(), 0);
  return types;
}
}  // namespace

Tensor NeuralAligner::log_emission_table() const {
  Graph g(params_);
  return g.value(log_emission(g, hidden(g, all_types(target_vocab_))));
}

Tensor NeuralAligner::jump_logit_table() const {
  if (family_ != AlignFamily::kHmm) return Tensor{};
  Graph g(params_);
  return g.value(jump_logits(g, hidden(g, all_types(target_vocab_))));
}

namespace {

// (index into the jump logit row, feasible) for a move from k to i.
std::pair<std::size_t, bool> jump_slot(std::size_t k, std::size_t i) {
  const int d = static_cast<int>(i) - static_cast<int>(k);
  if (std::abs(d) > kMaxJump) return {static_cast<std::size_t>(kMaxJump), false};
  return {static_cast<std::size_t>(d + kMaxJump), true};
}

TokenId state_type(const Sentence& target, std::size_t state) {
  return state == 0 ? Vocabulary::kNull : target.ids[state - 1];
}

}  // namespace

Tensor masked_transition(const Tensor& jump_logits, const Sentence& target) {
  const std::size_t states = target.size() + 1;
  Tensor out = Tensor::matrix(states, states);
  for (std::size_t k = 0; k < states; ++k) {
    const std::size_t row = state_type(target, k);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < states; ++i) {
      auto [slot, ok] = jump_slot(k, i);
      out(k, i) = ok ? jump_logits(row, slot) : -std::numeric_limits<double>::infinity();
      peak = std::max(peak, out(k, i));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < states; ++i) total += std::exp(out(k, i) - peak);
    const double log_z = peak + std::log(total);
    for (std::size_t i = 0; i < states; ++i) out(k, i) -= log_z;
  }
  return out;
}

Lattice neural_lattice(const NeuralAligner& model, const Tensor& log_table,
                       const Tensor& jump_table, const SentencePair& pair) {
  const std::size_t states = pair.target.size() + 1;
  Tensor log_e = Tensor::matrix(pair.source.size(), states);
  for (std::size_t j = 0; j < pair.source.size(); ++j)
    for (std::size_t i = 0; i < states; ++i)
      log_e(j, i) = log_table(state_type(pair.target, i), pair.source.ids[j]);
  if (model.family() == AlignFamily::kIbm1) return uniform_lattice(std::move(log_e));
  return Lattice{std::move(log_e),
                 Tensor::matrix(1, states, -std::log(static_cast<double>(states))),
                 masked_transition(jump_table, pair.target)};
}

NeuralEStep neural_e_step(const NeuralAligner& model, const std::vector<const SentencePair*>& pairs,
                          Execution exec) {
  const Tensor log_table = model.log_emission_table();
  const Tensor jump_table = model.jump_logit_table();
  const bool hmm = model.family() == AlignFamily::kHmm;
  struct Item {
    Tensor gamma, xi;
    double ll = 0.0;
  };
  NeuralEStep out;
  out.gamma.resize(pairs.size());
  if (hmm) out.xi.resize(pairs.size());
  ordered_map_reduce<Item>(
      pairs.size(), exec,
      [&](std::size_t k) {
        const Lattice lat = neural_lattice(model, log_table, jump_table, *pairs[k]);
        const ForwardBackward fb = forward_backward(lat);
        Item item;
        item.gamma = lattice_posteriors(lat, fb);
        if (hmm) item.xi = lattice_transition_posteriors(lat, fb);
        item.ll = fb.log_likelihood;
        return item;
      },
      [&](std::size_t k, Item item) {
        out.gamma[k] = std::move(item.gamma);
        if (hmm) out.xi[k] = std::move(item.xi);
        out.log_likelihood += item.ll;
      });
  return out;
}

Var expected_complete_ll(Graph& g, const NeuralAligner& model,
                         const std::vector<const SentencePair*>& pairs, const NeuralEStep& estep) {
  std::map<std::size_t, std::size_t> row_of;
  row_of[Vocabulary::kNull] = 0;
  for (const SentencePair* p : pairs)
    for (TokenId e : p->target.ids) row_of.emplace(e, 0);
  std::vector<std::size_t> types;
  for (auto& [type, row] : row_of) {
    row = types.size();
    types.push_back(type);
  }
  Tensor counts = Tensor::matrix(types.size(), model.source_vocab());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const SentencePair& p = *pairs[k];
    const Tensor& gamma = estep.gamma[k];
    for (std::size_t j = 0; j < p.source.size(); ++j)
      for (std::size_t i = 0; i < gamma.cols(); ++i)
        counts(row_of.at(state_type(p.target, i)), p.source.ids[j]) += gamma(j, i);
  }
  Var h = model.hidden(g, types);
  Var ll = g.sum(g.mul(g.constant(std::move(counts)), model.log_emission(g, h)));
  if (model.family() != AlignFamily::kHmm) return ll;

  Var jumps = model.jump_logits(g, h);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Sentence& target = pairs[k]->target;
    const std::size_t states = target.size() + 1;
    std::vector<std::size_t> rows(states), index(states * states);
    Tensor mask = Tensor::matrix(states, states);
    bool masked = false;
    for (std::size_t s = 0; s < states; ++s) {
      rows[s] = row_of.at(state_type(target, s));
      for (std::size_t i = 0; i < states; ++i) {
        auto [slot, ok] = jump_slot(s, i);
        index[s * states + i] = slot;
        if (!ok) {
          mask(s, i) = -std::numeric_limits<double>::infinity();
          masked = true;
        }
      }
    }
    Var logits = g.gather_cols(g.embedding_lookup(jumps, rows), std::move(index), states);
    if (masked) logits = g.add(logits, g.constant(std::move(mask)));
    Var trans = g.log_softmax(logits, 1);
    ll = g.add(ll, g.sum(g.mul(g.constant(estep.xi[k]), trans)));
  }
  return ll;
}

std::vector<NeuralEmLog> neural_em_train(NeuralAligner& model, const ParallelCorpus& corpus,
                                         const NeuralEmConfig& config) {
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (config.m_steps == 0) throw ConfigError("m_steps must be positive");
  Rng rng(config.seed);
  Adam adam(model.params(), config.adam);
  std::vector<std::size_t> order(corpus.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<NeuralEmLog> logs;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    std::shuffle(order.begin(), order.end(), rng);
    NeuralEmLog log;
    log.iteration = it;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<const SentencePair*> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(&corpus.pairs[order[k]]);
      const NeuralEStep estep = neural_e_step(model, batch, config.exec);
      if (!std::isfinite(estep.log_likelihood)) {
        throw DivergenceError("non-finite E-step log-likelihood");
      }
      log.log_likelihood += estep.log_likelihood;
      for (std::size_t step = 0; step < config.m_steps; ++step) {
        Graph g(model.params());
        Var loss = g.scale(expected_complete_ll(g, model, batch, estep),
                           -1.0 / static_cast<double>(batch.size()));
        if (!std::isfinite(g.value(loss).item())) {
          throw DivergenceError("non-finite expected complete-data log-likelihood");
        }
        g.backward(loss);
        Gradients grads = g.param_gradients();
        adam.step(model.params(), grads);
      }
    }
    logs.push_back(log);
  }
  return logs;
}

AlignmentSet neural_align(const NeuralAligner& model, const Tensor& log_table,
                          const Tensor& jump_table, const SentencePair& pair, DecodeRule rule) {
  const Lattice lat = neural_lattice(model, log_table, jump_table, pair);
  std::vector<std::size_t> path;
  if (model.family() == AlignFamily::kIbm1) {
    path = posterior_argmax(lat.log_emission);
  } else if (rule == DecodeRule::kViterbi) {
    path = lattice_viterbi(lat);
  } else {
    path = posterior_argmax(lattice_posteriors(lat));
  }
  return alignment_from_path(path, pair.source.size(), pair.target.size());
}

std::vector<AlignmentSet> neural_align_corpus(const NeuralAligner& model,
                                              const ParallelCorpus& corpus, DecodeRule rule,
                                              Execution exec) {
  const Tensor log_table = model.log_emission_table();
  const Tensor jump_table = model.jump_logit_table();
  std::vector<AlignmentSet> out(corpus.pairs.size());
  ordered_map_reduce<AlignmentSet>(
      corpus.pairs.size(), exec,
      [&](std::size_t k) { return neural_align(model, log_table, jump_table, corpus.pairs[k], rule); },
      [&](std::size_t k, AlignmentSet a) { out[k] = std::move(a); });
  return out;
}

}  // namespace vaealign
