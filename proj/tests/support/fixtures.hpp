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

#ifndef VAEALIGN_TESTS_SUPPORT_FIXTURES_HPP_
#define VAEALIGN_TESTS_SUPPORT_FIXTURES_HPP_

#include <algorithm>
#include <cstdint>
#include <vector>

#include "vaealign/alignment.hpp"
#include "vaealign/corpus.hpp"
#include "vaealign/synth.hpp"

namespace vaealign::testing {

struct LabeledCorpus {
  ParallelCorpus corpus;
  std::vector<AlignmentSet> gold;
};

// Word-level synthetic corpus with gold links.
inline LabeledCorpus synthetic_corpus(std::size_t pairs, std::size_t vocab, std::uint64_t seed,
                                      std::size_t max_length = 10) {
  SynthConfig cfg;
  cfg.pairs = pairs;
  cfg.vocab_size = vocab;
  cfg.seed = seed;
  cfg.max_length = max_length;
  cfg.min_length = std::min<std::size_t>(cfg.min_length, max_length);
  SynthCorpus s = make_synth_corpus(cfg);
  return {make_corpus(s.source, s.target), std::move(s.gold)};
}

}  // namespace vaealign::testing

#endif  // VAEALIGN_TESTS_SUPPORT_FIXTURES_HPP_
