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

#ifndef VAEALIGN_SYNTH_HPP_
#define VAEALIGN_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vaealign/alignment.hpp"

namespace vaealign {

// Dictionary corpus: every target word has exactly one source translation,
// sentences translate word for word, and the source side is locally
// reordered so that no word moves more than `max_displacement` places.
struct SynthConfig {
  std::size_t vocab_size = 50;  // per side
  std::size_t pairs = 2000;
  std::size_t min_length = 3;
  std::size_t max_length = 10;
  std::size_t max_displacement = 2;
  std::size_t mono_sentences = 0;  // per side, drawn like the parallel ones
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  std::vector<std::string> source_words;  // dictionary: target word k -> source word k
  std::vector<std::string> target_words;
  std::vector<std::vector<std::string>> source;
  std::vector<std::vector<std::string>> target;
  std::vector<AlignmentSet> gold;
  std::vector<std::vector<std::string>> mono_source;
  std::vector<std::vector<std::string>> mono_target;
};

SynthCorpus make_synth_corpus(const SynthConfig& config);

// Writes src.txt, tgt.txt, gold.txt and, with monolingual data, mono.src.txt
// and mono.tgt.txt into `dir`.
void write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace vaealign

#endif  // VAEALIGN_SYNTH_HPP_
