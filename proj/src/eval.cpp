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

#include "vaealign/eval.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <set>
#include <string>

#include "vaealign/errors.hpp"

namespace vaealign {

LinkCounts& LinkCounts::operator+=(const LinkCounts& o) {
  hypothesis += o.hypothesis;
  sure += o.sure;
  hyp_sure += o.hyp_sure;
  hyp_possible += o.hyp_possible;
  return *this;
}

LinkCounts link_counts(const AlignmentSet& hypothesis, const AlignmentSet& reference) {
  const bool known = hypothesis.source_len() != 0 && reference.source_len() != 0;
  if (known && (hypothesis.source_len() != reference.source_len() ||
                hypothesis.target_len() != reference.target_len())) {
    throw FormatError("hypothesis and reference sentence lengths differ");
  }
  LinkCounts c;
  c.hypothesis = hypothesis.size();
  c.sure = reference.sure_count();
  for (const auto& [pos, kind] : hypothesis.links()) {
    (void)kind;
    if (!reference.contains(pos.first, pos.second)) continue;
    ++c.hyp_possible;
    if (reference.is_sure(pos.first, pos.second)) ++c.hyp_sure;
  }
  return c;
}

double aer(const LinkCounts& c) {
  const std::size_t denominator = c.hypothesis + c.sure;
  if (denominator == 0) return 0.0;
  // Subtracting in integers keeps exact fractions exact (1/3 stays 1/3).
  return static_cast<double>(denominator - c.hyp_sure - c.hyp_possible) /
         static_cast<double>(denominator);
}

double aer(const AlignmentSet& hypothesis, const AlignmentSet& reference) {
  return aer(link_counts(hypothesis, reference));
}

PrecisionRecall precision_recall_f(const LinkCounts& c) {
  PrecisionRecall r;
  if (c.hypothesis == 0) {
    r.precision_undefined = true;
    r.precision = 0.0;
  } else {
    r.precision = static_cast<double>(c.hyp_possible) / static_cast<double>(c.hypothesis);
  }
  if (c.sure == 0) {
    r.recall_undefined = true;
    r.recall = 1.0;
  } else {
    r.recall = static_cast<double>(c.hyp_sure) / static_cast<double>(c.sure);
  }
  // 2pr/(p+r) from the integer counts, so that with S = P the value is the
  // same correctly rounded quotient that AER uses.
  if (!r.precision_undefined && !r.recall_undefined) {
    const std::size_t numerator = 2 * c.hyp_possible * c.hyp_sure;
    const std::size_t denominator = c.hyp_possible * c.sure + c.hyp_sure * c.hypothesis;
    r.f = denominator == 0 ? 0.0
                           : static_cast<double>(numerator) / static_cast<double>(denominator);
  } else if (r.precision + r.recall > 0.0) {
    r.f = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

PrecisionRecall precision_recall_f(const AlignmentSet& hypothesis, const AlignmentSet& reference) {
  return precision_recall_f(link_counts(hypothesis, reference));
}

NullCounts& NullCounts::operator+=(const NullCounts& o) {
  words += o.words;
  correct += o.correct;
  predicted_unaligned += o.predicted_unaligned;
  reference_unaligned += o.reference_unaligned;
  both_unaligned += o.both_unaligned;
  return *this;
}

namespace {

struct Coverage {
  std::vector<bool> source, target;
};

Coverage coverage(const AlignmentSet& links, std::size_t source_len, std::size_t target_len) {
  Coverage c{std::vector<bool>(source_len + 1, false), std::vector<bool>(target_len + 1, false)};
  for (const auto& [pos, kind] : links.links()) {
    (void)kind;
    if (pos.first > source_len || pos.second > target_len) {
      throw FormatError("link " + std::to_string(pos.first) + "-" + std::to_string(pos.second) +
                        " is outside a " + std::to_string(source_len) + "x" +
                        std::to_string(target_len) + " sentence pair");
    }
    c.source[pos.first] = true;
    c.target[pos.second] = true;
  }
  return c;
}

std::pair<std::size_t, std::size_t> inferred_lengths(const AlignmentSet& a, const AlignmentSet& b) {
  std::size_t j_len = std::max(a.source_len(), b.source_len());
  std::size_t i_len = std::max(a.target_len(), b.target_len());
  for (const AlignmentSet* s : {&a, &b})
    for (const auto& [pos, kind] : s->links()) {
      (void)kind;
      j_len = std::max(j_len, pos.first);
      i_len = std::max(i_len, pos.second);
    }
  return {j_len, i_len};
}

double rate(std::size_t num, std::size_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

NullCounts null_counts(const AlignmentSet& hypothesis, const AlignmentSet& reference,
                       std::size_t source_len, std::size_t target_len) {
  const Coverage hyp = coverage(hypothesis, source_len, target_len);
  const Coverage ref = coverage(reference, source_len, target_len);
  NullCounts n;
  auto tally = [&](const std::vector<bool>& h, const std::vector<bool>& r) {
    for (std::size_t k = 1; k < h.size(); ++k) {
      ++n.words;
      n.correct += h[k] == r[k];
      n.predicted_unaligned += !h[k];
      n.reference_unaligned += !r[k];
      n.both_unaligned += !h[k] && !r[k];
    }
  };
  tally(hyp.source, ref.source);
  tally(hyp.target, ref.target);
  return n;
}

NullReport null_link_report(const NullCounts& counts) {
  NullReport r;
  r.counts = counts;
  r.accuracy = rate(counts.correct, counts.words, r.accuracy_undefined);
  r.null_precision = rate(counts.both_unaligned, counts.predicted_unaligned, r.precision_undefined);
  r.null_recall = rate(counts.both_unaligned, counts.reference_unaligned, r.recall_undefined);
  return r;
}

NullReport null_link_report(const AlignmentSet& hypothesis, const AlignmentSet& reference,
                            std::size_t source_len, std::size_t target_len) {
  return null_link_report(null_counts(hypothesis, reference, source_len, target_len));
}

double binary_accuracy(const AlignmentSet& hypothesis, const AlignmentSet& reference,
                       std::size_t source_len, std::size_t target_len) {
  return null_link_report(hypothesis, reference, source_len, target_len).accuracy;
}

AlignmentSet intersect(const AlignmentSet& fwd, const AlignmentSet& rev) {
  AlignmentSet out(fwd.source_len(), fwd.target_len());
  for (const auto& [pos, kind] : fwd.links()) {
    (void)kind;
    if (rev.contains(pos.first, pos.second)) out.add(pos.first, pos.second);
  }
  return out;
}

AlignmentSet union_links(const AlignmentSet& fwd, const AlignmentSet& rev) {
  AlignmentSet out(fwd.source_len(), fwd.target_len());
  for (const AlignmentSet* s : {&fwd, &rev})
    for (const auto& [pos, kind] : s->links()) {
      (void)kind;
      out.add(pos.first, pos.second);
    }
  return out;
}

AlignmentSet grow_diag_final(const AlignmentSet& fwd, const AlignmentSet& rev,
                             std::size_t source_len, std::size_t target_len) {
  if (source_len == 0 || target_len == 0) {
    auto [j_len, i_len] = inferred_lengths(fwd, rev);
    if (source_len == 0) source_len = j_len;
    if (target_len == 0) target_len = i_len;
  }
  const AlignmentSet both = union_links(fwd, rev);
  AlignmentSet out = intersect(fwd, rev);
  out.set_lengths(source_len, target_len);
  std::vector<bool> src_aligned(source_len + 1, false), tgt_aligned(target_len + 1, false);
  auto link = [&](std::size_t j, std::size_t i) {
    out.add(j, i);
    src_aligned[j] = true;
    tgt_aligned[i] = true;
  };
  for (const auto& [pos, kind] : out.links()) {
    (void)kind;
    src_aligned[pos.first] = true;
    tgt_aligned[pos.second] = true;
  }
  static constexpr std::array<std::pair<int, int>, 8> kNeighbours = {
      {{-1, 0}, {0, -1}, {1, 0}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}};
  for (bool added = true; added;) {
    added = false;
    for (std::size_t j = 1; j <= source_len; ++j)
      for (std::size_t i = 1; i <= target_len; ++i) {
        if (!out.contains(j, i)) continue;
        for (auto [dj, di] : kNeighbours) {
          const long nj = static_cast<long>(j) + dj, ni = static_cast<long>(i) + di;
          if (nj < 1 || ni < 1 || nj > static_cast<long>(source_len) ||
              ni > static_cast<long>(target_len)) {
            continue;
          }
          const auto uj = static_cast<std::size_t>(nj), ui = static_cast<std::size_t>(ni);
          if ((!src_aligned[uj] || !tgt_aligned[ui]) && both.contains(uj, ui) &&
              !out.contains(uj, ui)) {
            link(uj, ui);
            added = true;
          }
        }
      }
  }
  for (const AlignmentSet* direction : {&fwd, &rev}) {
    for (std::size_t j = 1; j <= source_len; ++j)
      for (std::size_t i = 1; i <= target_len; ++i) {
        if ((!src_aligned[j] || !tgt_aligned[i]) && direction->contains(j, i)) link(j, i);
      }
  }
  return out;
}

AgreementReport agreement_report(const std::vector<AlignmentSet>& fwd,
                                 const std::vector<AlignmentSet>& rev,
                                 const std::vector<AlignmentSet>& reference) {
  if (fwd.size() != rev.size() || fwd.size() != reference.size()) {
    throw FormatError("agreement_report: alignment files have different line counts");
  }
  AgreementReport r;
  LinkCounts pooled;
  for (std::size_t k = 0; k < fwd.size(); ++k) {
    const AlignmentSet both = intersect(fwd[k], rev[k]);
    r.agree += both.size();
    r.forward += fwd[k].size();
    r.reverse += rev[k].size();
    pooled += link_counts(both, reference[k]);
  }
  bool undefined = false;
  r.ratio_forward = rate(r.agree, r.forward, undefined);
  r.ratio_reverse = rate(r.agree, r.reverse, undefined);
  r.intersection_aer = aer(pooled);
  return r;
}

EvalReport evaluate(const std::vector<AlignmentSet>& hypotheses,
                    const std::vector<AlignmentSet>& references,
                    const std::vector<std::pair<std::size_t, std::size_t>>& lengths,
                    Execution exec) {
  if (hypotheses.size() != references.size()) {
    throw FormatError("hypothesis has " + std::to_string(hypotheses.size()) +
                      " sentences, reference has " + std::to_string(references.size()));
  }
  if (!lengths.empty() && lengths.size() != hypotheses.size()) {
    throw FormatError("sentence length list does not match the alignment files");
  }
  EvalReport report;
  NullCounts nulls;
  struct Item {
    LinkCounts links;
    NullCounts nulls;
  };
  ordered_map_reduce<Item>(
      hypotheses.size(), exec,
      [&](std::size_t k) {
        auto [j_len, i_len] = lengths.empty() ? inferred_lengths(hypotheses[k], references[k])
                                              : lengths[k];
        return Item{link_counts(hypotheses[k], references[k]),
                    null_counts(hypotheses[k], references[k], j_len, i_len)};
      },
      [&](std::size_t, Item item) {
        report.counts += item.links;
        nulls += item.nulls;
      });
  report.aer = aer(report.counts);
  report.prf = precision_recall_f(report.counts);
  report.null = null_link_report(nulls);
  return report;
}

void write_report(std::ostream& out, const EvalReport& r) {
  out << std::setprecision(10);
  out << "aer\t" << r.aer << '\n';
  out << "precision\t" << r.prf.precision << '\n';
  out << "recall\t" << r.prf.recall << '\n';
  out << "f_measure\t" << r.prf.f << '\n';
  out << "precision_zero_denominator\t" << r.prf.precision_undefined << '\n';
  out << "recall_zero_denominator\t" << r.prf.recall_undefined << '\n';
  out << "hyp_links\t" << r.counts.hypothesis << '\n';
  out << "sure_links\t" << r.counts.sure << '\n';
  out << "hyp_and_sure\t" << r.counts.hyp_sure << '\n';
  out << "hyp_and_possible\t" << r.counts.hyp_possible << '\n';
  out << "accuracy\t" << r.null.accuracy << '\n';
  out << "num_unaligned\t" << r.null.counts.predicted_unaligned << '\n';
  out << "ref_unaligned\t" << r.null.counts.reference_unaligned << '\n';
  out << "null_precision\t" << r.null.null_precision << '\n';
  out << "null_recall\t" << r.null.null_recall << '\n';
  out << "null_precision_zero_denominator\t" << r.null.precision_undefined << '\n';
  out << "null_recall_zero_denominator\t" << r.null.recall_undefined << '\n';
  if (r.agreement) {
    out << "num_agree\t" << r.agreement->agree << '\n';
    out << "ratio_fwd\t" << r.agreement->ratio_forward << '\n';
    out << "ratio_rev\t" << r.agreement->ratio_reverse << '\n';
    out << "intersection_aer\t" << r.agreement->intersection_aer << '\n';
  }
  if (r.reconstruction_accuracy) out << "r_acc\t" << *r.reconstruction_accuracy << '\n';
}

void write_sentence_report(std::ostream& out, const std::vector<AlignmentSet>& hypotheses,
                           const std::vector<AlignmentSet>& references) {
  out << "index\thyp_links\tsure_links\thyp_and_sure\thyp_and_possible\taer\n"
      << std::setprecision(10);
  for (std::size_t k = 0; k < hypotheses.size() && k < references.size(); ++k) {
    const LinkCounts c = link_counts(hypotheses[k], references[k]);
    out << k + 1 << '\t' << c.hypothesis << '\t' << c.sure << '\t' << c.hyp_sure << '\t'
        << c.hyp_possible << '\t' << aer(c) << '\n';
  }
}

}  // namespace vaealign
