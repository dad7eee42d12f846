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

#include "vaealign/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "vaealign/errors.hpp"

namespace vaealign {

Vocabulary::Vocabulary() {
  add(kNullToken);
  add(kUnkToken);
}

TokenId Vocabulary::add(std::string_view token) {
  if (auto found = find(token)) return *found;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::lookup(std::string_view token) const {
  return find(token).value_or(kUnk);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2 || lines[0] != kNullToken || lines[1] != kUnkToken) {
    throw FormatError(path.string() + ": vocabulary must start with " +
                      std::string(kNullToken) + " and " + std::string(kUnkToken));
  }
  Vocabulary vocab;
  for (std::size_t k = 2; k < lines.size(); ++k) {
    if (vocab.find(lines[k])) {
      throw FormatError(path.string() + ":" + std::to_string(k + 1) + ": duplicate token");
    }
    vocab.add(lines[k]);
  }
  return vocab;
}

Sentence make_word_sentence(std::vector<TokenId> ids) {
  Sentence s;
  s.word_index.resize(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) s.word_index[k] = k + 1;
  s.ids = std::move(ids);
  return s;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

TokenizedLine split_tokens(std::string_view line) {
  TokenizedLine tokens;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && (line[k] == ' ' || line[k] == '\t')) ++k;
    std::size_t end = k;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    if (end > k) tokens.emplace_back(line.substr(k, end - k));
    k = end;
  }
  return tokens;
}

std::vector<TokenizedLine> read_tokenized(const std::filesystem::path& path, bool lowercase) {
  std::vector<TokenizedLine> out;
  const auto lines = read_lines(path);
  out.reserve(lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) {
    std::string line = lines[k];
    if (lowercase) {
      std::transform(line.begin(), line.end(), line.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    auto tokens = split_tokens(line);
    if (tokens.empty()) {
      throw FormatError(path.string() + ":" + std::to_string(k + 1) + ": empty sentence");
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

Sentence encode(const TokenizedLine& tokens, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.lookup(t));
  return make_word_sentence(std::move(ids));
}

std::vector<Sentence> encode_all(const std::vector<TokenizedLine>& lines,
                                 const Vocabulary& vocab) {
  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(encode(l, vocab));
  return out;
}

namespace {

std::vector<std::size_t> retained_pairs(const std::vector<TokenizedLine>& source,
                                        const std::vector<TokenizedLine>& target,
                                        const LoadOptions& options) {
  if (source.size() != target.size()) {
    throw FormatError("parallel corpus line counts differ: " + std::to_string(source.size()) +
                      " source vs " + std::to_string(target.size()) + " target");
  }
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < source.size(); ++k) {
    if (source[k].empty() || target[k].empty()) {
      throw FormatError("empty sentence in pair " + std::to_string(k + 1));
    }
    if (options.max_len &&
        (source[k].size() >= *options.max_len || target[k].size() >= *options.max_len)) {
      continue;
    }
    keep.push_back(k);
  }
  return keep;
}

}  // namespace

ParallelCorpus make_corpus(const std::vector<TokenizedLine>& source,
                           const std::vector<TokenizedLine>& target,
                           const LoadOptions& options) {
  const auto keep = retained_pairs(source, target, options);
  Vocabulary sv, tv;
  for (std::size_t k : keep) {
    for (const auto& t : source[k]) sv.add(t);
    for (const auto& t : target[k]) tv.add(t);
  }
  return make_corpus(source, target, sv, tv, options);
}

ParallelCorpus make_corpus(const std::vector<TokenizedLine>& source,
                           const std::vector<TokenizedLine>& target,
                           const Vocabulary& source_vocab, const Vocabulary& target_vocab,
                           const LoadOptions& options) {
  const auto keep = retained_pairs(source, target, options);
  ParallelCorpus corpus;
  corpus.source_vocab = source_vocab;
  corpus.target_vocab = target_vocab;
  corpus.pairs.reserve(keep.size());
  for (std::size_t k : keep) {
    corpus.pairs.push_back({encode(source[k], source_vocab), encode(target[k], target_vocab)});
  }
  return corpus;
}

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path,
                             const LoadOptions& options) {
  return make_corpus(read_tokenized(source_path, options.lowercase),
                     read_tokenized(target_path, options.lowercase), options);
}

}  // namespace vaealign
