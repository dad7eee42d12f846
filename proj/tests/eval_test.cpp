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

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "vaealign/errors.hpp"
#include "vaealign/eval.hpp"

namespace vaealign {
namespace {

AlignmentSet links(std::initializer_list<LinkPos> sure, std::initializer_list<LinkPos> possible = {}) {
  AlignmentSet a;
  for (auto [j, i] : sure) a.add(j, i);
  for (auto [j, i] : possible) a.add(j, i, LinkKind::kPossible);
  return a;
}

AlignmentSet random_links(std::mt19937_64& rng, std::size_t j_len, std::size_t i_len, double p,
                          bool with_possible = false) {
  AlignmentSet a(j_len, i_len);
  std::bernoulli_distribution take(p), sure(0.6);
  for (std::size_t j = 1; j <= j_len; ++j)
    for (std::size_t i = 1; i <= i_len; ++i)
      if (take(rng)) a.add(j, i, !with_possible || sure(rng) ? LinkKind::kSure : LinkKind::kPossible);
  return a;
}

bool subset(const AlignmentSet& a, const AlignmentSet& b) {
  for (const auto& [pos, kind] : a.links())
    if (!b.contains(pos.first, pos.second)) return false;
  return true;
}

TEST(Aer, HandCaseIsExactlyOneThird) {
  const AlignmentSet hyp = links({{1, 1}, {2, 2}});
  const AlignmentSet ref = links({{1, 1}}, {{2, 3}});
  EXPECT_EQ(aer(hyp, ref), 1.0 / 3.0);
  const PrecisionRecall prf = precision_recall_f(hyp, ref);
  EXPECT_EQ(prf.precision, 0.5);
  EXPECT_EQ(prf.recall, 1.0);
  EXPECT_EQ(prf.f, 2.0 / 3.0);
}

TEST(Aer, PerfectEmptyAndDegenerateCases) {
  const AlignmentSet s = links({{1, 2}, {2, 1}});
  EXPECT_EQ(aer(s, s), 0.0);
  const PrecisionRecall perfect = precision_recall_f(s, s);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f, 1.0);
  EXPECT_EQ(aer(AlignmentSet{}, s), 1.0);
  const PrecisionRecall empty_hyp = precision_recall_f(AlignmentSet{}, s);
  EXPECT_TRUE(empty_hyp.precision_undefined);
  EXPECT_EQ(empty_hyp.precision, 0.0);
  const PrecisionRecall empty_ref = precision_recall_f(s, AlignmentSet{});
  EXPECT_TRUE(empty_ref.recall_undefined);
  EXPECT_EQ(empty_ref.recall, 1.0);
  EXPECT_EQ(aer(AlignmentSet{}, AlignmentSet{}), 0.0);
}

TEST(Aer, EqualsOneMinusFForSureOnlyReferences) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t j = 1 + rng() % 8, i = 1 + rng() % 8;
    const AlignmentSet ref = random_links(rng, j, i, 0.3);
    const AlignmentSet hyp = random_links(rng, j, i, 0.3);
    if (ref.empty() && hyp.empty()) continue;  // both rates are conventions here
    EXPECT_NEAR(aer(hyp, ref), 1.0 - precision_recall_f(hyp, ref).f, 1e-15);
  }
}

// Every reference labelling and hypothesis on a 2x3 grid.
TEST(Aer, AddingASureLinkNeverIncreasesAerAndRatesAreConsistent) {
  constexpr std::size_t kJ = 2, kI = 3, kCells = kJ * kI;
  auto cell = [](std::size_t c) { return LinkPos{1 + c / kI, 1 + c % kI}; };
  std::size_t labellings = 1;
  for (std::size_t c = 0; c < kCells; ++c) labellings *= 3;
  for (std::size_t code = 0; code < labellings; ++code) {
    AlignmentSet ref(kJ, kI);
    for (std::size_t c = 0, rest = code; c < kCells; ++c, rest /= 3) {
      const auto [j, i] = cell(c);
      if (rest % 3 == 1) ref.add(j, i);
      if (rest % 3 == 2) ref.add(j, i, LinkKind::kPossible);
    }
    for (std::size_t mask = 0; mask < (1u << kCells); ++mask) {
      AlignmentSet hyp(kJ, kI);
      for (std::size_t c = 0; c < kCells; ++c)
        if (mask >> c & 1) hyp.add(cell(c).first, cell(c).second);
      const double base = aer(hyp, ref);
      const LinkCounts n = link_counts(hyp, ref);
      ASSERT_LE(n.hyp_sure, n.hyp_possible);
      ASSERT_LE(n.hyp_possible, n.hypothesis);
      const PrecisionRecall prf = precision_recall_f(hyp, ref);
      for (double rate : {base, prf.precision, prf.recall, prf.f}) {
        ASSERT_GE(rate, 0.0);
        ASSERT_LE(rate, 1.0);
      }
      for (std::size_t c = 0; c < kCells; ++c) {
        const auto [j, i] = cell(c);
        if (hyp.contains(j, i) || !ref.is_sure(j, i)) continue;
        AlignmentSet more = hyp;
        more.add(j, i);
        ASSERT_LE(aer(more, ref), base);
      }
    }
  }
}

TEST(Aer, LengthMismatchIsAnError) {
  AlignmentSet a(3, 3), b(3, 4);
  EXPECT_THROW(aer(a, b), FormatError);
  EXPECT_NO_THROW(aer(a, AlignmentSet{}));
}

TEST(Aer, CorpusLevelPoolsCounts) {
  // Sentence AERs 0 and 1 but pooled counts weight the larger sentence more.
  const std::vector<AlignmentSet> hyp{links({{1, 1}, {2, 2}, {3, 3}}), links({{1, 2}})};
  const std::vector<AlignmentSet> ref{links({{1, 1}, {2, 2}, {3, 3}}), links({{1, 1}})};
  const EvalReport r = evaluate(hyp, ref);
  EXPECT_EQ(r.counts.hypothesis, 4u);
  EXPECT_EQ(r.counts.hyp_sure, 3u);
  EXPECT_EQ(r.aer, 2.0 / 8.0);
  EXPECT_THROW(evaluate(hyp, {ref[0]}), FormatError);
}

TEST(NullLinks, HandCaseTwoByTwo) {
  const NullReport r = null_link_report(links({{1, 1}}), links({{1, 1}, {2, 2}}), 2, 2);
  EXPECT_EQ(r.counts.words, 4u);
  EXPECT_EQ(r.counts.predicted_unaligned, 2u);
  EXPECT_EQ(r.counts.reference_unaligned, 0u);
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.null_precision, 0.0);
  EXPECT_FALSE(r.precision_undefined);
  EXPECT_TRUE(r.recall_undefined);
  EXPECT_EQ(r.null_recall, 1.0);
}

TEST(NullLinks, FullyAlignedAndSymmetry) {
  const AlignmentSet full = links({{1, 1}, {2, 2}});
  const NullReport r = null_link_report(full, full, 2, 2);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_TRUE(r.recall_undefined);
  EXPECT_TRUE(r.precision_undefined);
  std::mt19937_64 rng(72);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t j = 1 + rng() % 6, i = 1 + rng() % 6;
    const AlignmentSet h = random_links(rng, j, i, 0.2), g = random_links(rng, j, i, 0.2);
    EXPECT_EQ(binary_accuracy(h, g, j, i),
              binary_accuracy(h.transposed(), g.transposed(), i, j));
  }
  EXPECT_THROW(null_counts(links({{3, 1}}), full, 2, 2), FormatError);
}

TEST(Symmetrize, HandCase) {
  const AlignmentSet fwd = links({{1, 1}, {2, 2}}), rev = links({{1, 1}, {3, 2}});
  EXPECT_EQ(intersect(fwd, rev), links({{1, 1}}));
  EXPECT_EQ(union_links(fwd, rev), links({{1, 1}, {2, 2}, {3, 2}}));
  EXPECT_EQ(grow_diag_final(fwd, rev), links({{1, 1}, {2, 2}, {3, 2}}));
  EXPECT_EQ(intersect(fwd, fwd), fwd);
  EXPECT_TRUE(intersect(links({{1, 1}}), links({{2, 2}})).empty());
}

TEST(Symmetrize, GrowStepOnlyUsesNeighbours) {
  // (3,3) is in the union but far from the intersection and both its words
  // get covered by other links before the final pass, so it stays out.
  const AlignmentSet fwd = links({{1, 1}, {2, 2}, {3, 3}});
  const AlignmentSet rev = links({{1, 1}, {2, 2}});
  EXPECT_EQ(grow_diag_final(fwd, rev), fwd);  // final pass: src 3 unaligned
  const AlignmentSet fwd2 = links({{1, 1}, {3, 1}});
  const AlignmentSet rev2 = links({{1, 1}, {3, 3}});
  // Neither extra link touches the 8-neighbourhood of (1,1); the final pass
  // adds (3,1) first (src 3 unaligned), after which (3,3) still has
  // target 3 unaligned and is added too.
  EXPECT_EQ(grow_diag_final(fwd2, rev2), links({{1, 1}, {3, 1}, {3, 3}}));
}

TEST(Symmetrize, InclusionAndFixpointOnRandomPairs) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t j = 1 + rng() % 7, i = 1 + rng() % 7;
    const AlignmentSet fwd = random_links(rng, j, i, 0.25), rev = random_links(rng, j, i, 0.25);
    const AlignmentSet gdf = grow_diag_final(fwd, rev, j, i);
    const AlignmentSet lo = intersect(fwd, rev), hi = union_links(fwd, rev);
    EXPECT_TRUE(subset(lo, gdf));
    EXPECT_TRUE(subset(gdf, hi));
    // After the final pass no union link has an unaligned endpoint.
    std::vector<bool> sa(j + 1), ta(i + 1);
    for (const auto& [pos, kind] : gdf.links()) sa[pos.first] = ta[pos.second] = true;
    for (const auto& [pos, kind] : hi.links())
      EXPECT_TRUE(gdf.contains(pos.first, pos.second) || (sa[pos.first] && ta[pos.second]));
    EXPECT_EQ(grow_diag_final(fwd, fwd, j, i), fwd);
  }
}

TEST(AgreementReport, HandCaseAndExtremes) {
  const std::vector<AlignmentSet> fwd{links({{1, 1}, {2, 2}})}, rev{links({{1, 1}, {3, 2}})};
  const std::vector<AlignmentSet> ref{links({{1, 1}, {2, 2}})};
  const AgreementReport r = agreement_report(fwd, rev, ref);
  EXPECT_EQ(r.agree, 1u);
  EXPECT_EQ(r.ratio_forward, 0.5);
  EXPECT_EQ(r.ratio_reverse, 0.5);
  EXPECT_EQ(r.intersection_aer, 1.0 / 3.0);
  const AgreementReport same = agreement_report(fwd, fwd, ref);
  EXPECT_EQ(same.ratio_forward, 1.0);
  EXPECT_EQ(same.ratio_reverse, 1.0);
  const AgreementReport disjoint = agreement_report(fwd, {links({{3, 3}})}, ref);
  EXPECT_EQ(disjoint.agree, 0u);
  EXPECT_EQ(disjoint.ratio_forward, 0.0);
  EXPECT_THROW(agreement_report(fwd, {}, ref), FormatError);
}

TEST(Report, SerialAndParallelAgreeAndFormatIsStable) {
  std::mt19937_64 rng(74);
  std::vector<AlignmentSet> hyp, ref;
  for (int k = 0; k < 500; ++k) {
    const std::size_t j = 1 + rng() % 9, i = 1 + rng() % 9;
    hyp.push_back(random_links(rng, j, i, 0.2));
    ref.push_back(random_links(rng, j, i, 0.2, true));
  }
  set_thread_count(4);
  const EvalReport a = evaluate(hyp, ref, {}, Execution::kSerial);
  const EvalReport b = evaluate(hyp, ref, {}, Execution::kParallel);
  set_thread_count(1);
  std::ostringstream sa, sb;
  write_report(sa, a);
  write_report(sb, b);
  EXPECT_EQ(sa.str(), sb.str());

  EvalReport hand = evaluate({links({{1, 1}, {2, 2}})}, {links({{1, 1}}, {{2, 3}})});
  std::ostringstream out;
  write_report(out, hand);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "aer\t0.3333333333");
  std::ostringstream rows;
  write_sentence_report(rows, {links({{1, 1}})}, {links({{1, 1}})});
  EXPECT_EQ(rows.str(),
            "index\thyp_links\tsure_links\thyp_and_sure\thyp_and_possible\taer\n1\t1\t1\t1\t1\t0\n");
}

}  // namespace
}  // namespace vaealign
