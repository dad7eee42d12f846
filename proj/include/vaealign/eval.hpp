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

#ifndef VAEALIGN_EVAL_HPP_
#define VAEALIGN_EVAL_HPP_

#include <cstddef>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "vaealign/alignment.hpp"
#include "vaealign/parallel.hpp"

namespace vaealign {

// |A|, |S|, |A ∩ S|, |A ∩ P| for hypothesis A against reference (S, P).
struct LinkCounts {
  std::size_t hypothesis = 0;
  std::size_t sure = 0;
  std::size_t hyp_sure = 0;
  std::size_t hyp_possible = 0;

  LinkCounts& operator+=(const LinkCounts& o);
};

// Throws FormatError when both sets carry lengths and they differ.
LinkCounts link_counts(const AlignmentSet& hypothesis, const AlignmentSet& reference);

double aer(const LinkCounts& counts);
double aer(const AlignmentSet& hypothesis, const AlignmentSet& reference);

// precision = |A∩P|/|A| (0 with a flag when A is empty), recall = |A∩S|/|S|
// (1 with a flag when S is empty), f = harmonic mean (0 when both are 0).
struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

PrecisionRecall precision_recall_f(const LinkCounts& counts);
PrecisionRecall precision_recall_f(const AlignmentSet& hypothesis, const AlignmentSet& reference);

// Aligned/unaligned decisions for all source and target words. "Unaligned"
// is the positive class for the null precision and recall; 0/0 rates are
// reported as 1 with a flag.
struct NullCounts {
  std::size_t words = 0;
  std::size_t correct = 0;
  std::size_t predicted_unaligned = 0;
  std::size_t reference_unaligned = 0;
  std::size_t both_unaligned = 0;

  NullCounts& operator+=(const NullCounts& o);
};

struct NullReport {
  NullCounts counts;
  double accuracy = 1.0;
  double null_precision = 1.0;
  double null_recall = 1.0;
  bool accuracy_undefined = false;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

NullCounts null_counts(const AlignmentSet& hypothesis, const AlignmentSet& reference,
                       std::size_t source_len, std::size_t target_len);
NullReport null_link_report(const NullCounts& counts);
NullReport null_link_report(const AlignmentSet& hypothesis, const AlignmentSet& reference,
                            std::size_t source_len, std::size_t target_len);
double binary_accuracy(const AlignmentSet& hypothesis, const AlignmentSet& reference,
                       std::size_t source_len, std::size_t target_len);

// Both directions in (source, target) orientation.
AlignmentSet intersect(const AlignmentSet& fwd, const AlignmentSet& rev);
AlignmentSet union_links(const AlignmentSet& fwd, const AlignmentSet& rev);

// Grow-diag-final: the intersection grown through 8-neighbours found in the
// union while either endpoint is unaligned (row-major scan to a fixpoint),
// then a final pass over forward and then reverse links adding those with an
// unaligned endpoint. Lengths of 0 are inferred from the links.
AlignmentSet grow_diag_final(const AlignmentSet& fwd, const AlignmentSet& rev,
                             std::size_t source_len = 0, std::size_t target_len = 0);

struct AgreementReport {
  std::size_t agree = 0;  // |fwd ∩ rev|
  std::size_t forward = 0;
  std::size_t reverse = 0;
  double ratio_forward = 1.0;
  double ratio_reverse = 1.0;
  double intersection_aer = 0.0;
};

AgreementReport agreement_report(const std::vector<AlignmentSet>& fwd,
                                 const std::vector<AlignmentSet>& rev,
                                 const std::vector<AlignmentSet>& reference);

// Corpus-level report with pooled (micro-averaged) counts.
struct EvalReport {
  LinkCounts counts;
  double aer = 0.0;
  PrecisionRecall prf;
  NullReport null;
  std::optional<AgreementReport> agreement;
  std::optional<double> reconstruction_accuracy;
};

// `lengths` gives (source_len, target_len) per pair; an empty vector infers
// lengths from the links of hypothesis and reference.
EvalReport evaluate(const std::vector<AlignmentSet>& hypotheses,
                    const std::vector<AlignmentSet>& references,
                    const std::vector<std::pair<std::size_t, std::size_t>>& lengths = {},
                    Execution exec = Execution::kParallel);

// "metric<TAB>value" lines in a fixed order.
void write_report(std::ostream& out, const EvalReport& report);
// Per-sentence "index, links, sure, hyp_sure, hyp_possible, aer" rows.
void write_sentence_report(std::ostream& out, const std::vector<AlignmentSet>& hypotheses,
                           const std::vector<AlignmentSet>& references);

}  // namespace vaealign

#endif  // VAEALIGN_EVAL_HPP_
