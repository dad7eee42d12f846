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

#ifndef VAEALIGN_BPE_HPP_
#define VAEALIGN_BPE_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vaealign {

using MergePair = std::pair<std::string, std::string>;

// Ordered merge list; earlier merges have priority when segmenting.
struct BpeModel {
  std::vector<MergePair> merges;
  std::string continuation_marker = "@@";
};

// Subword tokens of one line plus the 1-based originating word of each.
struct SubwordLine {
  std::vector<std::string> tokens;
  std::vector<std::size_t> word_index;
};

// Learns merges over the whitespace-delimited words of `lines`, starting
// from UTF-8 characters. Ties on frequency go to the lexicographically
// smallest pair.
BpeModel bpe_train(const std::vector<std::string>& lines, std::size_t num_merges,
                   std::string continuation_marker = "@@");

// Precomputed merge ranks for segmenting many words with one model. The
// model must outlive the segmenter.
class BpeSegmenter {
 public:
  explicit BpeSegmenter(const BpeModel& model);
  std::vector<std::string> segment(std::string_view word) const;
  SubwordLine apply(std::string_view line) const;

 private:
  const BpeModel* model_;
  std::map<MergePair, std::size_t> rank_;
};

// Subwords of a single word, marker appended to all but the last.
std::vector<std::string> bpe_segment_word(const BpeModel& model, std::string_view word);
SubwordLine bpe_apply(const BpeModel& model, std::string_view line);
std::string bpe_decode(const SubwordLine& line, std::string_view continuation_marker);

std::vector<std::string> utf8_characters(std::string_view word);

// "BPE v1 <marker>" then one "left right" merge per line.
void save_bpe(const std::filesystem::path& path, const BpeModel& model);
BpeModel load_bpe(const std::filesystem::path& path);

}  // namespace vaealign

#endif  // VAEALIGN_BPE_HPP_
