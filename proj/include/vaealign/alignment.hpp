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

#ifndef VAEALIGN_ALIGNMENT_HPP_
#define VAEALIGN_ALIGNMENT_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vaealign {

enum class LinkKind : unsigned char { kSure, kPossible };

using LinkPos = std::pair<std::size_t, std::size_t>;  // (source j, target i), 1-based

// Links of one sentence pair. Sure links count as possible too (S within P).
// A word with no link is unaligned; null links are never stored.
class AlignmentSet {
 public:
  AlignmentSet() = default;
  AlignmentSet(std::size_t source_len, std::size_t target_len)
      : source_len_(source_len), target_len_(target_len) {}

  // Re-adding an existing link keeps the stronger (sure) kind.
  void add(std::size_t j, std::size_t i, LinkKind kind = LinkKind::kSure);
  bool contains(std::size_t j, std::size_t i) const { return links_.contains({j, i}); }
  bool is_sure(std::size_t j, std::size_t i) const;
  void erase(std::size_t j, std::size_t i) { links_.erase({j, i}); }

  const std::map<LinkPos, LinkKind>& links() const { return links_; }
  std::size_t size() const { return links_.size(); }
  bool empty() const { return links_.empty(); }
  std::size_t sure_count() const;

  // 0 when unknown.
  std::size_t source_len() const { return source_len_; }
  std::size_t target_len() const { return target_len_; }
  void set_lengths(std::size_t source_len, std::size_t target_len);

  // Swaps source and target roles.
  AlignmentSet transposed() const;

  friend bool operator==(const AlignmentSet& a, const AlignmentSet& b) {
    return a.links_ == b.links_;
  }

 private:
  std::map<LinkPos, LinkKind> links_;
  std::size_t source_len_ = 0;
  std::size_t target_len_ = 0;
};

// "j-i" is sure, "j?i" possible. Throws FormatError naming `line_number`.
AlignmentSet parse_alignment_line(std::string_view line, std::size_t line_number = 1);
std::string format_alignment_line(const AlignmentSet& links);

std::vector<AlignmentSet> read_alignment(const std::filesystem::path& path);
void write_alignment(const std::filesystem::path& path, const std::vector<AlignmentSet>& sets);

// Checks every link fits the lengths; throws FormatError otherwise.
void check_alignment_bounds(const AlignmentSet& links, std::size_t source_len,
                            std::size_t target_len, std::size_t line_number);

// Word link (j, i) exists iff some subword of word j links to some subword of
// word i. Spans give the 1-based word of each subword.
AlignmentSet project_alignment_to_words(const AlignmentSet& subword_links,
                                        const std::vector<std::size_t>& source_spans,
                                        const std::vector<std::size_t>& target_spans);

}  // namespace vaealign

#endif  // VAEALIGN_ALIGNMENT_HPP_
