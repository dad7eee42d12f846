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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "support/brute.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/grad_cases.hpp"
#include "vaealign/errors.hpp"
#include "vaealign/neural_em.hpp"

namespace vaealign {
namespace {

NeuralEmConfig small_config() {
  NeuralEmConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden_dim = 5;
  cfg.batch_size = 20;
  cfg.iterations = 3;
  cfg.adam.learning_rate = 0.02;
  return cfg;
}

std::vector<const SentencePair*> pointers(const ParallelCorpus& corpus, std::size_t n) {
  std::vector<const SentencePair*> out;
  for (std::size_t k = 0; k < n && k < corpus.pairs.size(); ++k) out.push_back(&corpus.pairs[k]);
  return out;
}

// Sets the network so its emission table is exactly `log_t`: one-hot
// embeddings, identity first layer, second layer holding the log table.
void set_to_table(NeuralAligner& model, const Tensor& log_t) {
  ParameterSet& p = model.params();
  const std::size_t vt = log_t.rows();
  Tensor& e = p.value(p.id("nn.E"));
  Tensor& w1 = p.value(p.id("nn.h.W"));
  e.fill(0.0);
  w1.fill(0.0);
  for (std::size_t k = 0; k < vt; ++k) {
    e(k, k) = 1.0;
    w1(k, k) = 1.0;
  }
  p.value(p.id("nn.h.b")).fill(0.0);
  p.value(p.id("nn.out.W")) = log_t;
  p.value(p.id("nn.out.b")).fill(0.0);
}

TEST(NeuralEm, EStepMatchesClassicModelOneOnAnEquivalentNetwork) {
  const auto data = testing::synthetic_corpus(15, 12, 61, 5);
  const std::size_t vs = data.corpus.source_vocab.size(), vt = data.corpus.target_vocab.size();
  NeuralEmConfig cfg = small_config();
  cfg.embed_dim = vt;
  cfg.hidden_dim = vt;
  Rng rng(61);
  NeuralAligner model(AlignFamily::kIbm1, vs, vt, cfg, rng);
  Tensor log_t = testing::random_matrix(vt, vs, rng, 0.05, 1.0);
  for (std::size_t e = 0; e < vt; ++e) {
    double z = 0.0;
    for (std::size_t f = 0; f < vs; ++f) z += log_t(e, f);
    for (std::size_t f = 0; f < vs; ++f) log_t(e, f) = std::log(log_t(e, f) / z);
  }
  set_to_table(model, log_t);

  const auto pairs = pointers(data.corpus, 15);
  const NeuralEStep estep = neural_e_step(model, pairs, Execution::kSerial);
  double ll = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const SentencePair& p = *pairs[k];
    const std::size_t states = p.target.size() + 1;
    Tensor log_e = Tensor::matrix(p.source.size(), states);
    for (std::size_t j = 0; j < p.source.size(); ++j)
      for (std::size_t i = 0; i < states; ++i)
        log_e(j, i) = log_t(i == 0 ? Vocabulary::kNull : p.target.ids[i - 1], p.source.ids[j]);
    for (std::size_t j = 0; j < p.source.size(); ++j) {
      double mix = 0.0;
      for (std::size_t i = 0; i < states; ++i) mix += std::exp(log_e(j, i));
      ll += std::log(mix / static_cast<double>(states));
      for (std::size_t i = 0; i < states; ++i)
        EXPECT_NEAR(estep.gamma[k](j, i), std::exp(log_e(j, i)) / mix, 1e-12);
    }
  }
  EXPECT_NEAR(estep.log_likelihood, ll, 1e-9);
}

TEST(NeuralEm, EStepMatchesEnumerationForHmm) {
  const auto data = testing::synthetic_corpus(8, 12, 62, 4);
  Rng rng(62);
  NeuralAligner model(AlignFamily::kHmm, data.corpus.source_vocab.size(),
                      data.corpus.target_vocab.size(), small_config(), rng);
  const auto pairs = pointers(data.corpus, 8);
  const NeuralEStep estep = neural_e_step(model, pairs, Execution::kSerial);
  const Tensor log_table = model.log_emission_table(), jumps = model.jump_logit_table();
  double ll = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Lattice lat = neural_lattice(model, log_table, jumps, *pairs[k]);
    ll += testing::brute_log_likelihood(lat);
    const Tensor xi = testing::brute_transition_posteriors(lat);
    for (std::size_t n = 0; n < xi.size(); ++n) EXPECT_NEAR(estep.xi[k][n], xi[n], 1e-10);
  }
  EXPECT_NEAR(estep.log_likelihood, ll, 1e-9);
}

TEST(NeuralEm, MaskedTransitionRowsAreDistributions) {
  Rng rng(63);
  const Tensor logits = testing::random_matrix(5, kJumpCount, rng, -2, 2);
  std::vector<TokenId> ids(170);
  for (auto& id : ids) id = static_cast<TokenId>(2 + rng() % 3);
  const Tensor t = masked_transition(logits, make_word_sentence(ids));
  for (std::size_t k = 0; k < t.rows(); ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < t.cols(); ++i) total += std::exp(t(k, i));
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_EQ(t(0, 151), -std::numeric_limits<double>::infinity());
  // Relative order of two feasible landings follows the logits of the
  // conditioning word.
  const TokenId w = ids[2];
  EXPECT_NEAR(t(3, 4) - t(3, 5), logits(w, kMaxJump + 1) - logits(w, kMaxJump + 2), 1e-12);
}

TEST(NeuralEm, ExpectedCompleteLikelihoodGradients) {
  const auto data = testing::synthetic_corpus(6, 12, 64, 4);
  Rng rng(64);
  for (AlignFamily family : {AlignFamily::kIbm1, AlignFamily::kHmm}) {
    for (int trial = 0; trial < 5; ++trial) {
      NeuralAligner model(family, data.corpus.source_vocab.size(),
                          data.corpus.target_vocab.size(), small_config(), rng);
      const auto pairs = pointers(data.corpus, 6);
      const NeuralEStep estep = neural_e_step(model, pairs, Execution::kSerial);
      const auto r = testing::check_gradients(
          model.params(), [&](Graph& g) { return expected_complete_ll(g, model, pairs, estep); },
          rng, 12);
      EXPECT_LE(r.max_error, 1e-4) << r.worst;
    }
  }
}

// Generalized EM: any M-step that raises the expected complete-data
// log-likelihood cannot lower the data log-likelihood.
TEST(NeuralEm, ImprovingTheMStepObjectiveImprovesLikelihood) {
  const auto data = testing::synthetic_corpus(40, 12, 65, 6);
  Rng rng(65);
  for (AlignFamily family : {AlignFamily::kIbm1, AlignFamily::kHmm}) {
    NeuralAligner model(family, data.corpus.source_vocab.size(), data.corpus.target_vocab.size(),
                        small_config(), rng);
    Adam adam(model.params(), {.learning_rate = 0.01});
    const auto pairs = pointers(data.corpus, 40);
    std::size_t improved = 0;
    for (int round = 0; round < 10; ++round) {
      const NeuralEStep estep = neural_e_step(model, pairs);
      auto ecll = [&]() {
        Graph g(model.params());
        return g.value(expected_complete_ll(g, model, pairs, estep)).item();
      };
      const double before = ecll();
      Graph g(model.params());
      g.backward(g.neg(expected_complete_ll(g, model, pairs, estep)));
      adam.step(model.params(), g.param_gradients());
      if (ecll() <= before) continue;
      ++improved;
      EXPECT_GE(neural_e_step(model, pairs).log_likelihood, estep.log_likelihood - 1e-9);
    }
    EXPECT_GT(improved, 5u);
  }
}

TEST(NeuralEm, TrainingRaisesLikelihoodAndIsThreadIndependent) {
  set_thread_count(4);
  const auto data = testing::synthetic_corpus(80, 12, 66, 6);
  for (AlignFamily family : {AlignFamily::kIbm1, AlignFamily::kHmm}) {
    std::vector<ParameterSet> finals;
    for (Execution exec : {Execution::kSerial, Execution::kParallel}) {
      Rng rng(66);
      NeuralEmConfig cfg = small_config();
      cfg.exec = exec;
      NeuralAligner model(family, data.corpus.source_vocab.size(),
                          data.corpus.target_vocab.size(), cfg, rng);
      const auto logs = neural_em_train(model, data.corpus, cfg);
      ASSERT_EQ(logs.size(), 3u);
      EXPECT_GT(logs.back().log_likelihood, logs.front().log_likelihood);
      finals.push_back(model.params());
    }
    for (ParamId p = 0; p < finals[0].size(); ++p) EXPECT_EQ(finals[0].value(p), finals[1].value(p));
  }
  set_thread_count(1);
}

TEST(NeuralEm, DecodingFollowsTheLattice) {
  const auto data = testing::synthetic_corpus(20, 12, 67, 6);
  Rng rng(67);
  for (AlignFamily family : {AlignFamily::kIbm1, AlignFamily::kHmm}) {
    NeuralAligner model(family, data.corpus.source_vocab.size(), data.corpus.target_vocab.size(),
                        small_config(), rng);
    const Tensor log_table = model.log_emission_table(), jumps = model.jump_logit_table();
    const auto links = neural_align_corpus(model, data.corpus);
    for (std::size_t k = 0; k < links.size(); ++k) {
      const SentencePair& p = data.corpus.pairs[k];
      const Lattice lat = neural_lattice(model, log_table, jumps, p);
      const auto path = family == AlignFamily::kIbm1 ? posterior_argmax(lattice_posteriors(lat))
                                                     : lattice_viterbi(lat);
      EXPECT_EQ(links[k], alignment_from_path(path, p.source.size(), p.target.size()));
    }
  }
}

TEST(NeuralEm, ConfigErrors) {
  const auto data = testing::synthetic_corpus(5, 12, 68, 4);
  Rng rng(68);
  NeuralEmConfig cfg = small_config();
  NeuralAligner model(AlignFamily::kIbm1, data.corpus.source_vocab.size(),
                      data.corpus.target_vocab.size(), cfg, rng);
  cfg.m_steps = 0;
  EXPECT_THROW(neural_em_train(model, data.corpus, cfg), ConfigError);
  cfg = small_config();
  cfg.batch_size = 0;
  EXPECT_THROW(neural_em_train(model, data.corpus, cfg), ConfigError);
  Graph g(model.params());
  EXPECT_THROW(model.jump_logits(g, model.hidden(g, {0})), ConfigError);
}

}  // namespace
}  // namespace vaealign
