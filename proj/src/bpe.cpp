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

#include "vaealign/bpe.hpp"

#include <fstream>
#include <map>
#include <set>

#include "vaealign/corpus.hpp"
#include "vaealign/errors.hpp"

namespace vaealign {

std::vector<std::string> utf8_characters(std::string_view word) {
  std::vector<std::string> chars;
  std::size_t k = 0;
  while (k < word.size()) {
    const auto lead = static_cast<unsigned char>(word[k]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, word.size() - k);
    chars.emplace_back(word.substr(k, len));
    k += len;
  }
  return chars;
}

namespace {

class PairStatistics {
 public:
  void adjust(const MergePair& pair, std::int64_t delta, std::size_t word, bool present) {
    auto& count = counts_[pair];
    if (count > 0) ranking_.erase({-count, pair});
    count += delta;
    if (count > 0) {
      ranking_.insert({-count, pair});
    } else {
      counts_.erase(pair);
    }
    if (present) where_[pair].insert(word);
    else if (auto it = where_.find(pair); it != where_.end()) it->second.erase(word);
  }

  bool empty() const { return ranking_.empty(); }
  const MergePair& best() const { return ranking_.begin()->second; }
  std::set<std::size_t> words_with(const MergePair& pair) const {
    auto it = where_.find(pair);
    return it == where_.end() ? std::set<std::size_t>{} : it->second;
  }

 private:
  std::map<MergePair, std::int64_t> counts_;
  std::set<std::pair<std::int64_t, MergePair>> ranking_;
  std::map<MergePair, std::set<std::size_t>> where_;
};

void merge_symbols(std::vector<std::string>& symbols, const MergePair& pair) {
  std::vector<std::string> merged;
  merged.reserve(symbols.size());
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    if (k + 1 < symbols.size() && symbols[k] == pair.first && symbols[k + 1] == pair.second) {
      merged.push_back(pair.first + pair.second);
      ++k;
    } else {
      merged.push_back(symbols[k]);
    }
  }
  symbols = std::move(merged);
}

}  // namespace

BpeModel bpe_train(const std::vector<std::string>& lines, std::size_t num_merges,
                   std::string continuation_marker) {
  std::map<std::string, std::int64_t> frequency;
  for (const auto& line : lines)
    for (const auto& word : split_tokens(line)) ++frequency[word];
  if (frequency.empty()) throw FormatError("bpe_train: empty corpus");

  std::vector<std::vector<std::string>> words;
  std::vector<std::int64_t> counts;
  for (const auto& [word, freq] : frequency) {
    words.push_back(utf8_characters(word));
    counts.push_back(freq);
  }

  PairStatistics stats;
  auto account = [&](std::size_t w, bool add) {
    const auto& sym = words[w];
    for (std::size_t k = 0; k + 1 < sym.size(); ++k) {
      stats.adjust({sym[k], sym[k + 1]}, add ? counts[w] : -counts[w], w, add);
    }
  };
  for (std::size_t w = 0; w < words.size(); ++w) account(w, true);

  BpeModel model;
  model.continuation_marker = std::move(continuation_marker);
  while (model.merges.size() < num_merges && !stats.empty()) {
    const MergePair pair = stats.best();
    for (std::size_t w : stats.words_with(pair)) {
      account(w, false);
      merge_symbols(words[w], pair);
      account(w, true);
    }
    model.merges.push_back(pair);
  }
  return model;
}

BpeSegmenter::BpeSegmenter(const BpeModel& model) : model_(&model) {
  for (std::size_t k = 0; k < model.merges.size(); ++k) rank_.emplace(model.merges[k], k);
}

std::vector<std::string> BpeSegmenter::segment(std::string_view word) const {
  const auto& merges = model_->merges;
  std::vector<std::string> symbols = utf8_characters(word);
  while (symbols.size() > 1) {
    std::size_t best_rank = merges.size();
    for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
      auto it = rank_.find({symbols[k], symbols[k + 1]});
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == merges.size()) break;
    merge_symbols(symbols, merges[best_rank]);
  }
  for (std::size_t k = 0; k + 1 < symbols.size(); ++k) symbols[k] += model_->continuation_marker;
  return symbols;
}

SubwordLine BpeSegmenter::apply(std::string_view line) const {
  SubwordLine out;
  const auto words = split_tokens(line);
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (auto& piece : segment(words[w])) {
      out.tokens.push_back(std::move(piece));
      out.word_index.push_back(w + 1);
    }
  }
  return out;
}

std::vector<std::string> bpe_segment_word(const BpeModel& model, std::string_view word) {
  return BpeSegmenter(model).segment(word);
}

SubwordLine bpe_apply(const BpeModel& model, std::string_view line) {
  return BpeSegmenter(model).apply(line);
}

std::string bpe_decode(const SubwordLine& line, std::string_view continuation_marker) {
  std::string text;
  for (std::size_t k = 0; k < line.tokens.size(); ++k) {
    const bool last_of_word =
        k + 1 == line.tokens.size() || line.word_index[k + 1] != line.word_index[k];
    std::string_view piece = line.tokens[k];
    if (!last_of_word && piece.ends_with(continuation_marker)) {
      piece.remove_suffix(continuation_marker.size());
    }
    text += piece;
    if (last_of_word && k + 1 < line.tokens.size()) text += ' ';
  }
  return text;
}

void save_bpe(const std::filesystem::path& path, const BpeModel& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write BPE model " + path.string());
  out << "BPE v1 " << model.continuation_marker << '\n';
  for (const auto& [left, right] : model.merges) out << left << ' ' << right << '\n';
}

BpeModel load_bpe(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || !lines[0].starts_with("BPE v1 ") || lines[0].size() <= 7) {
    throw FormatError(path.string() + ":1: expected header \"BPE v1 <marker>\"");
  }
  BpeModel model;
  model.continuation_marker = lines[0].substr(7);
  std::set<MergePair> seen;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto parts = split_tokens(lines[k]);
    if (parts.size() != 2) {
      throw FormatError(path.string() + ":" + std::to_string(k + 1) + ": expected \"left right\"");
    }
    MergePair pair{parts[0], parts[1]};
    if (!seen.insert(pair).second) {
      throw FormatError(path.string() + ":" + std::to_string(k + 1) + ": duplicate merge");
    }
    model.merges.push_back(std::move(pair));
  }
  return model;
}

}  // namespace vaealign
