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

#ifndef VAEALIGN_CORPUS_HPP_
#define VAEALIGN_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vaealign {

using TokenId = std::uint32_t;

// Token <-> id bijection over [0, size). Id 0 is the NULL token, which also
// serves as the encoder's dummy token; id 1 is UNK.
class Vocabulary {
 public:
  static constexpr TokenId kNull = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kNullToken = "<null>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  TokenId add(std::string_view token);
  // UNK when absent.
  TokenId lookup(std::string_view token) const;
  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }

  // One token per line, in id order.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// A tokenized sentence. word_index[k] is the 1-based index of the word that
// token k came from; it is 1, 2, ..., n for word-level sentences.
struct Sentence {
  std::vector<TokenId> ids;
  std::vector<std::size_t> word_index;

  std::size_t size() const { return ids.size(); }
  std::size_t word_count() const { return word_index.empty() ? 0 : word_index.back(); }
};

Sentence make_word_sentence(std::vector<TokenId> ids);

struct SentencePair {
  Sentence source;
  Sentence target;
};

struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  Vocabulary source_vocab;
  Vocabulary target_vocab;

  std::size_t size() const { return pairs.size(); }
};

using TokenizedLine = std::vector<std::string>;

struct LoadOptions {
  // Pairs are kept only when both sides are strictly shorter; nullopt keeps all.
  std::optional<std::size_t> max_len;
  bool lowercase = false;
};

// One sentence per line, space-separated tokens. Empty lines are errors.
std::vector<TokenizedLine> read_tokenized(const std::filesystem::path& path,
                                          bool lowercase = false);
std::vector<std::string> read_lines(const std::filesystem::path& path);
TokenizedLine split_tokens(std::string_view line);

// Builds vocabularies over the retained pairs.
ParallelCorpus make_corpus(const std::vector<TokenizedLine>& source,
                           const std::vector<TokenizedLine>& target,
                           const LoadOptions& options = {});
// Uses fixed vocabularies; unseen tokens map to UNK.
ParallelCorpus make_corpus(const std::vector<TokenizedLine>& source,
                           const std::vector<TokenizedLine>& target,
                           const Vocabulary& source_vocab, const Vocabulary& target_vocab,
                           const LoadOptions& options = {});

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path,
                             const LoadOptions& options = {});

Sentence encode(const TokenizedLine& tokens, const Vocabulary& vocab);
std::vector<Sentence> encode_all(const std::vector<TokenizedLine>& lines,
                                 const Vocabulary& vocab);

}  // namespace vaealign

#endif  // VAEALIGN_CORPUS_HPP_
