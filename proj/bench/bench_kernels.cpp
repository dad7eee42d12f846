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

// Serial reference vs OpenMP path of every parallel kernel. Each benchmark
// takes the execution mode as its first argument (0 serial, 1 parallel).

#include <benchmark/benchmark.h>

#include "support/fixtures.hpp"
#include "vaealign/count_aligners.hpp"
#include "vaealign/eval.hpp"
#include "vaealign/neural_em.hpp"
#include "vaealign/parallel.hpp"

namespace vaealign {
namespace {

const testing::LabeledCorpus& corpus() {
  static const testing::LabeledCorpus data = testing::synthetic_corpus(4000, 50, 1, 20);
  return data;
}

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(corpus().corpus.pairs.size()));
}

void BM_Ibm1ExpectedCounts(benchmark::State& state) {
  const auto& data = corpus();
  const LexicalTable table = LexicalTable::uniform_over_support(data.corpus);
  for (auto _ : state) benchmark::DoNotOptimize(ibm1_expected_counts(data.corpus, table, mode(state)));
  label(state);
}

void BM_HmmExpectedCounts(benchmark::State& state) {
  const auto& data = corpus();
  static const HmmParams params = init_hmm(data.corpus, 2);
  for (auto _ : state) benchmark::DoNotOptimize(hmm_expected_counts(data.corpus, params, mode(state)));
  label(state);
}

void BM_HmmViterbiDecode(benchmark::State& state) {
  const auto& data = corpus();
  static const HmmParams params = init_hmm(data.corpus, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        decode_corpus_hmm(params, data.corpus, DecodeRule::kViterbi, mode(state)));
  }
  label(state);
}

void BM_NeuralEStep(benchmark::State& state) {
  const auto& data = corpus();
  NeuralEmConfig cfg;
  cfg.embed_dim = 32;
  cfg.hidden_dim = 32;
  Rng rng(1);
  static const NeuralAligner model(AlignFamily::kHmm, data.corpus.source_vocab.size(),
                                   data.corpus.target_vocab.size(), cfg, rng);
  std::vector<const SentencePair*> pairs;
  for (const auto& p : data.corpus.pairs) pairs.push_back(&p);
  for (auto _ : state) benchmark::DoNotOptimize(neural_e_step(model, pairs, mode(state)));
  label(state);
}

void BM_Evaluate(benchmark::State& state) {
  const auto& data = corpus();
  static const std::vector<AlignmentSet> hyp =
      decode_corpus_ibm1(LexicalTable::uniform_over_support(data.corpus), data.corpus);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(hyp, data.gold, {}, mode(state)));
  label(state);
}

BENCHMARK(BM_Ibm1ExpectedCounts)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HmmExpectedCounts)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HmmViterbiDecode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NeuralEStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace vaealign

BENCHMARK_MAIN();
