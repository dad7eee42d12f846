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

#include <algorithm>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "support/temp_dir.hpp"
#include "vaealign/alignment.hpp"
#include "vaealign/bpe.hpp"
#include "vaealign/corpus.hpp"
#include "vaealign/errors.hpp"

namespace vaealign {
namespace {

using testing::TempDir;

TEST(Vocabulary, ReservesNullAndUnk) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.token(Vocabulary::kNull), Vocabulary::kNullToken);
  EXPECT_EQ(v.add("haus"), 2u);
  EXPECT_EQ(v.add("haus"), 2u);
  EXPECT_EQ(v.lookup("haus"), 2u);
  EXPECT_EQ(v.lookup("maus"), Vocabulary::kUnk);
  EXPECT_FALSE(v.find("maus").has_value());
}

TEST(Vocabulary, SaveLoadRoundTripAndBadFiles) {
  TempDir dir("vocab");
  Vocabulary v;
  v.add("a");
  v.add("b");
  v.save(dir / "v.txt");
  EXPECT_EQ(Vocabulary::load(dir / "v.txt"), v);
  EXPECT_THROW(Vocabulary::load(dir.write("bad.txt", "a\nb\n")), FormatError);
  EXPECT_THROW(Vocabulary::load(dir.write("dup.txt", "<null>\n<unk>\nx\nx\n")), FormatError);
}

TEST(Corpus, ReadTokenizedRejectsEmptyLinesAndLowercases) {
  TempDir dir("corpus");
  const auto lines = read_tokenized(dir.write("a.txt", "Das  Haus\nist klein\n"), true);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], (TokenizedLine{"das", "haus"}));
  EXPECT_THROW(read_tokenized(dir.write("b.txt", "a b\n\nc\n")), FormatError);
  EXPECT_THROW(read_tokenized(dir / "missing.txt"), FormatError);
}

TEST(Corpus, MakeCorpusFiltersStrictlyByLength) {
  const std::vector<TokenizedLine> src{{"a", "b"}, {"a", "b", "c"}, {"c"}};
  const std::vector<TokenizedLine> tgt{{"x"}, {"y"}, {"x", "y", "z"}};
  const ParallelCorpus all = make_corpus(src, tgt);
  EXPECT_EQ(all.size(), 3u);
  const ParallelCorpus short_only = make_corpus(src, tgt, {.max_len = 3});
  ASSERT_EQ(short_only.size(), 1u);
  EXPECT_EQ(short_only.pairs[0].source.size(), 2u);
  EXPECT_THROW(make_corpus(src, {{"x"}}), FormatError);
}

TEST(Corpus, FixedVocabularyMapsUnseenToUnk) {
  const ParallelCorpus train = make_corpus({{"a", "b"}}, {{"x"}});
  const ParallelCorpus test =
      make_corpus({{"a", "q"}}, {{"x", "r"}}, train.source_vocab, train.target_vocab);
  EXPECT_EQ(test.pairs[0].source.ids, (std::vector<TokenId>{2, Vocabulary::kUnk}));
  EXPECT_EQ(test.pairs[0].target.ids, (std::vector<TokenId>{2, Vocabulary::kUnk}));
  EXPECT_EQ(test.pairs[0].source.word_index, (std::vector<std::size_t>{1, 2}));
}

TEST(Alignment, ParseFormatRoundTrip) {
  const AlignmentSet a = parse_alignment_line("1-1 2?3  3-2 2-3");
  EXPECT_EQ(a.size(), 3u);
  EXPECT_TRUE(a.is_sure(2, 3));  // sure wins over possible
  EXPECT_EQ(a.sure_count(), 3u);
  EXPECT_EQ(format_alignment_line(a), "1-1 2-3 3-2");
  const AlignmentSet p = parse_alignment_line("2?1 1-2");
  EXPECT_EQ(format_alignment_line(p), "1-2 2?1");
  EXPECT_EQ(parse_alignment_line(format_alignment_line(p)), p);
  EXPECT_TRUE(parse_alignment_line("").empty());
}

TEST(Alignment, MalformedLinesAreFormatErrors) {
  for (const char* bad : {"1-", "-1", "1:2", "a-b", "0-1", "1-0", "1-2-3", "1--2"}) {
    EXPECT_THROW(parse_alignment_line(bad), FormatError) << bad;
  }
  AlignmentSet a;
  a.add(3, 1);
  EXPECT_THROW(check_alignment_bounds(a, 2, 2, 1), FormatError);
  EXPECT_NO_THROW(check_alignment_bounds(a, 3, 1, 1));
}

TEST(Alignment, FileRoundTripAndTranspose) {
  TempDir dir("align");
  std::vector<AlignmentSet> sets(3);
  sets[0].add(1, 2);
  sets[0].add(2, 1, LinkKind::kPossible);
  sets[2].add(4, 4);
  write_alignment(dir / "a.txt", sets);
  EXPECT_EQ(read_alignment(dir / "a.txt"), sets);
  const AlignmentSet t = sets[0].transposed();
  EXPECT_TRUE(t.is_sure(2, 1));
  EXPECT_TRUE(t.contains(1, 2));
  EXPECT_FALSE(t.is_sure(1, 2));
}

TEST(Alignment, ProjectionToWordsMatchesBruteForce) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    auto spans = [&](std::size_t words) {
      std::vector<std::size_t> s;
      for (std::size_t w = 1; w <= words; ++w) {
        const std::size_t pieces = 1 + rng() % 3;
        s.insert(s.end(), pieces, w);
      }
      return s;
    };
    const auto src = spans(1 + rng() % 4), tgt = spans(1 + rng() % 4);
    AlignmentSet sub;
    for (std::size_t j = 1; j <= src.size(); ++j)
      for (std::size_t i = 1; i <= tgt.size(); ++i)
        if (rng() % 4 == 0) sub.add(j, i);
    const AlignmentSet words = project_alignment_to_words(sub, src, tgt);
    for (std::size_t wj = 1; wj <= src.back(); ++wj) {
      for (std::size_t wi = 1; wi <= tgt.back(); ++wi) {
        bool expected = false;
        for (std::size_t j = 1; j <= src.size(); ++j)
          for (std::size_t i = 1; i <= tgt.size(); ++i)
            expected |= src[j - 1] == wj && tgt[i - 1] == wi && sub.contains(j, i);
        EXPECT_EQ(words.contains(wj, wi), expected);
      }
    }
  }
}

TEST(Alignment, ProjectionIsMonotoneInSubwordLinks) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> src, tgt;
    for (std::size_t w = 1; w <= 1 + rng() % 4; ++w) src.insert(src.end(), 1 + rng() % 3, w);
    for (std::size_t w = 1; w <= 1 + rng() % 4; ++w) tgt.insert(tgt.end(), 1 + rng() % 3, w);
    AlignmentSet sub;
    for (std::size_t j = 1; j <= src.size(); ++j)
      for (std::size_t i = 1; i <= tgt.size(); ++i)
        if (rng() % 4 == 0) sub.add(j, i);
    const AlignmentSet before = project_alignment_to_words(sub, src, tgt);
    AlignmentSet more = sub;
    more.add(1 + rng() % src.size(), 1 + rng() % tgt.size());
    const AlignmentSet after = project_alignment_to_words(more, src, tgt);
    for (const auto& [pos, kind] : before.links()) EXPECT_TRUE(after.contains(pos.first, pos.second));
  }
}

TEST(Corpus, VocabularyIdsAreStableAcrossRuns) {
  const std::vector<TokenizedLine> src{{"das", "haus"}, {"ein", "haus", "klein"}};
  const std::vector<TokenizedLine> tgt{{"the", "house"}, {"a", "small", "house"}};
  const ParallelCorpus a = make_corpus(src, tgt), b = make_corpus(src, tgt);
  EXPECT_EQ(a.source_vocab, b.source_vocab);
  EXPECT_EQ(a.target_vocab, b.target_vocab);
  EXPECT_EQ(a.source_vocab.lookup("das"), 2u);
  EXPECT_EQ(a.source_vocab.lookup("haus"), 3u);
  EXPECT_EQ(a.source_vocab.lookup("klein"), 5u);
}

// Recount-everything learner used as a reference for the incremental one.
std::vector<MergePair> reference_bpe(const std::vector<std::string>& lines, std::size_t merges) {
  std::map<std::string, long> freq;
  for (const auto& line : lines)
    for (const auto& w : split_tokens(line)) ++freq[w];
  std::vector<std::pair<std::vector<std::string>, long>> words;
  for (const auto& [w, f] : freq) words.emplace_back(utf8_characters(w), f);
  std::vector<MergePair> out;
  while (out.size() < merges) {
    std::map<MergePair, long> counts;
    for (const auto& [sym, f] : words)
      for (std::size_t k = 0; k + 1 < sym.size(); ++k) counts[{sym[k], sym[k + 1]}] += f;
    if (counts.empty()) break;
    MergePair best;
    long best_count = 0;
    for (const auto& [pair, c] : counts) {
      if (c > best_count) {  // map order makes ties go to the smallest pair
        best = pair;
        best_count = c;
      }
    }
    for (auto& [sym, f] : words) {
      std::vector<std::string> merged;
      for (std::size_t k = 0; k < sym.size(); ++k) {
        if (k + 1 < sym.size() && sym[k] == best.first && sym[k + 1] == best.second) {
          merged.push_back(best.first + best.second);
          ++k;
        } else {
          merged.push_back(sym[k]);
        }
      }
      sym = std::move(merged);
    }
    out.push_back(best);
  }
  return out;
}

TEST(Bpe, LearnerMatchesRecountingReference) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> lines;
    for (int l = 0; l < 6; ++l) {
      std::string line;
      for (int w = 0; w < 5; ++w) {
        const std::size_t len = 1 + rng() % 6;
        for (std::size_t c = 0; c < len; ++c) line += static_cast<char>('a' + rng() % 3);
        line += ' ';
      }
      lines.push_back(line);
    }
    const std::size_t merges = rng() % 30;
    EXPECT_EQ(bpe_train(lines, merges).merges, reference_bpe(lines, merges));
  }
}

TEST(Bpe, ApplyThenDecodeIsIdentityOnTrainingLines) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> lines;
    for (int l = 0; l < 5; ++l) {
      std::string line;
      for (std::size_t w = 0, words = 1 + rng() % 6; w < words; ++w) {
        if (w > 0) line += ' ';
        for (std::size_t c = 0, len = 1 + rng() % 7; c < len; ++c)
          line += static_cast<char>('a' + rng() % 4);
      }
      lines.push_back(line);
    }
    const BpeModel model = bpe_train(lines, rng() % 40);
    for (const auto& line : lines) EXPECT_EQ(bpe_decode(bpe_apply(model, line), "@@"), line);
  }
}

TEST(Bpe, HandExampleSegmentsAndDecodes) {
  const BpeModel model = bpe_train({"low low low lower lowest newer"}, 3);
  ASSERT_EQ(model.merges.size(), 3u);
  EXPECT_EQ(model.merges[0], (MergePair{"l", "o"}));
  EXPECT_EQ(model.merges[1], (MergePair{"lo", "w"}));
  EXPECT_EQ(model.merges[2], (MergePair{"e", "r"}));
  EXPECT_EQ(bpe_segment_word(model, "lower"), (std::vector<std::string>{"low@@", "er"}));
  EXPECT_EQ(bpe_segment_word(model, "newer"), (std::vector<std::string>{"n@@", "e@@", "w@@", "er"}));
  EXPECT_EQ(bpe_segment_word(model, "xyz"), (std::vector<std::string>{"x@@", "y@@", "z"}));
  const SubwordLine line = bpe_apply(model, "lower low");
  EXPECT_EQ(line.tokens, (std::vector<std::string>{"low@@", "er", "low"}));
  EXPECT_EQ(line.word_index, (std::vector<std::size_t>{1, 1, 2}));
  EXPECT_EQ(bpe_decode(line, "@@"), "lower low");
}

TEST(Bpe, MultibyteCharactersStayWhole) {
  EXPECT_EQ(utf8_characters("ñaé"), (std::vector<std::string>{"ñ", "a", "é"}));
  const BpeModel model = bpe_train({"ñañ ñañ"}, 1);
  EXPECT_EQ(model.merges[0], (MergePair{"a", "ñ"}));
}

TEST(Bpe, SaveLoadRoundTripAndErrors) {
  TempDir dir("bpe");
  const BpeModel model = bpe_train({"aab aab abb"}, 4, "##");
  save_bpe(dir / "m.bpe", model);
  const BpeModel loaded = load_bpe(dir / "m.bpe");
  EXPECT_EQ(loaded.merges, model.merges);
  EXPECT_EQ(loaded.continuation_marker, "##");
  EXPECT_THROW(load_bpe(dir.write("bad.bpe", "hello\n")), FormatError);
  EXPECT_THROW(load_bpe(dir.write("bad2.bpe", "BPE v1 @@\na\n")), FormatError);
  EXPECT_THROW(bpe_train({}, 3), FormatError);
}

}  // namespace
}  // namespace vaealign
