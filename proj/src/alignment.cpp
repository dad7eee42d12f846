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

#include "vaealign/alignment.hpp"

#include <charconv>
#include <fstream>

#include "vaealign/corpus.hpp"
#include "vaealign/errors.hpp"

namespace vaealign {

void AlignmentSet::add(std::size_t j, std::size_t i, LinkKind kind) {
  auto [it, inserted] = links_.emplace(LinkPos{j, i}, kind);
  if (!inserted && kind == LinkKind::kSure) it->second = LinkKind::kSure;
}

bool AlignmentSet::is_sure(std::size_t j, std::size_t i) const {
  auto it = links_.find({j, i});
  return it != links_.end() && it->second == LinkKind::kSure;
}

std::size_t AlignmentSet::sure_count() const {
  std::size_t n = 0;
  for (const auto& [pos, kind] : links_) n += kind == LinkKind::kSure;
  return n;
}

void AlignmentSet::set_lengths(std::size_t source_len, std::size_t target_len) {
  source_len_ = source_len;
  target_len_ = target_len;
}

AlignmentSet AlignmentSet::transposed() const {
  AlignmentSet out(target_len_, source_len_);
  for (const auto& [pos, kind] : links_) out.add(pos.second, pos.first, kind);
  return out;
}

namespace {

std::size_t parse_index(std::string_view text, std::string_view token, std::size_t line_number) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw FormatError("alignment line " + std::to_string(line_number) + ": malformed token '" +
                      std::string(token) + "'");
  }
  if (value == 0) {
    throw FormatError("alignment line " + std::to_string(line_number) + ": index 0 in '" +
                      std::string(token) + "' (positions are 1-based)");
  }
  return value;
}

}  // namespace

AlignmentSet parse_alignment_line(std::string_view line, std::size_t line_number) {
  AlignmentSet set;
  for (const auto& token : split_tokens(line)) {
    const auto sep = token.find_first_of("-?");
    if (sep == std::string::npos) {
      throw FormatError("alignment line " + std::to_string(line_number) +
                        ": malformed token '" + token + "'");
    }
    const std::string_view view(token);
    const std::size_t j = parse_index(view.substr(0, sep), token, line_number);
    const std::size_t i = parse_index(view.substr(sep + 1), token, line_number);
    set.add(j, i, token[sep] == '-' ? LinkKind::kSure : LinkKind::kPossible);
  }
  return set;
}

std::string format_alignment_line(const AlignmentSet& links) {
  std::string out;
  for (const auto& [pos, kind] : links.links()) {
    if (!out.empty()) out += ' ';
    out += std::to_string(pos.first);
    out += kind == LinkKind::kSure ? '-' : '?';
    out += std::to_string(pos.second);
  }
  return out;
}

std::vector<AlignmentSet> read_alignment(const std::filesystem::path& path) {
  std::vector<AlignmentSet> sets;
  const auto lines = read_lines(path);
  sets.reserve(lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) {
    sets.push_back(parse_alignment_line(lines[k], k + 1));
  }
  return sets;
}

void write_alignment(const std::filesystem::path& path, const std::vector<AlignmentSet>& sets) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write alignment file " + path.string());
  for (const auto& s : sets) out << format_alignment_line(s) << '\n';
}

void check_alignment_bounds(const AlignmentSet& links, std::size_t source_len,
                            std::size_t target_len, std::size_t line_number) {
  for (const auto& [pos, kind] : links.links()) {
    if (pos.first > source_len || pos.second > target_len) {
      throw FormatError("alignment line " + std::to_string(line_number) + ": link " +
                        std::to_string(pos.first) + "-" + std::to_string(pos.second) +
                        " outside sentence lengths " + std::to_string(source_len) + "x" +
                        std::to_string(target_len));
    }
  }
}

AlignmentSet project_alignment_to_words(const AlignmentSet& subword_links,
                                        const std::vector<std::size_t>& source_spans,
                                        const std::vector<std::size_t>& target_spans) {
  const std::size_t src_words = source_spans.empty() ? 0 : source_spans.back();
  const std::size_t tgt_words = target_spans.empty() ? 0 : target_spans.back();
  AlignmentSet words(src_words, tgt_words);
  for (const auto& [pos, kind] : subword_links.links()) {
    if (pos.first > source_spans.size() || pos.second > target_spans.size()) {
      throw FormatError("project_alignment_to_words: subword link " + std::to_string(pos.first) +
                        "-" + std::to_string(pos.second) + " outside spans of length " +
                        std::to_string(source_spans.size()) + "x" +
                        std::to_string(target_spans.size()));
    }
    words.add(source_spans[pos.first - 1], target_spans[pos.second - 1], kind);
  }
  return words;
}

}  // namespace vaealign
