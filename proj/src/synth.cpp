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

#include "vaealign/synth.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "vaealign/errors.hpp"

namespace vaealign {

namespace {

using Rng = std::mt19937_64;

std::vector<std::string> make_words(std::size_t count, std::set<std::string>& taken, Rng& rng) {
  static const std::string kLetters = "abcdefghijklmnopqrstuvwxyz";
  std::uniform_int_distribution<std::size_t> letter(0, kLetters.size() - 1);
  std::uniform_int_distribution<std::size_t> length(3, 7);
  std::vector<std::string> words;
  while (words.size() < count) {
    std::string w(length(rng), 'a');
    for (char& ch : w) ch = kLetters[letter(rng)];
    if (taken.insert(w).second) words.push_back(w);
  }
  return words;
}

// Distinct target word ids, so every gold link is unambiguous.
std::vector<std::size_t> draw_sentence(const SynthConfig& cfg, Rng& rng) {
  std::uniform_int_distribution<std::size_t> length(cfg.min_length, cfg.max_length);
  std::vector<std::size_t> ids(cfg.vocab_size);
  std::iota(ids.begin(), ids.end(), 0);
  const std::size_t n = length(rng);
  for (std::size_t k = 0; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, ids.size() - 1);
    std::swap(ids[k], ids[pick(rng)]);
  }
  ids.resize(n);
  return ids;
}

// Permutation with |perm[k] - k| <= max_displacement: jittered keys, stable sort.
std::vector<std::size_t> local_permutation(std::size_t n, std::size_t max_displacement, Rng& rng) {
  std::uniform_real_distribution<double> jitter(0.0, static_cast<double>(max_displacement));
  std::vector<double> keys(n);
  for (std::size_t k = 0; k < n; ++k) {
    keys[k] = static_cast<double>(k) + (max_displacement == 0 ? 0.0 : jitter(rng));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;  // order[j] = target position feeding source position j
}

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::vector<std::string>>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& line : lines) {
    for (std::size_t k = 0; k < line.size(); ++k) out << (k ? " " : "") << line[k];
    out << '\n';
  }
}

}  // namespace

SynthCorpus make_synth_corpus(const SynthConfig& cfg) {
  if (cfg.vocab_size == 0 || cfg.min_length == 0 || cfg.min_length > cfg.max_length) {
    throw ConfigError("synth: need vocab_size > 0 and 0 < min_length <= max_length");
  }
  if (cfg.max_length > cfg.vocab_size) {
    throw ConfigError("synth: max_length cannot exceed vocab_size (words are distinct)");
  }
  Rng rng(cfg.seed);
  SynthCorpus out;
  std::set<std::string> taken;
  out.target_words = make_words(cfg.vocab_size, taken, rng);
  out.source_words = make_words(cfg.vocab_size, taken, rng);
  for (std::size_t p = 0; p < cfg.pairs; ++p) {
    const std::vector<std::size_t> ids = draw_sentence(cfg, rng);
    const std::vector<std::size_t> order = local_permutation(ids.size(), cfg.max_displacement, rng);
    std::vector<std::string> tgt, src;
    AlignmentSet gold(ids.size(), ids.size());
    for (std::size_t id : ids) tgt.push_back(out.target_words[id]);
    for (std::size_t j = 0; j < order.size(); ++j) {
      src.push_back(out.source_words[ids[order[j]]]);
      gold.add(j + 1, order[j] + 1);
    }
    out.target.push_back(std::move(tgt));
    out.source.push_back(std::move(src));
    out.gold.push_back(std::move(gold));
  }
  for (std::size_t m = 0; m < cfg.mono_sentences; ++m) {
    std::vector<std::string> tgt, src;
    for (std::size_t id : draw_sentence(cfg, rng)) tgt.push_back(out.target_words[id]);
    for (std::size_t id : draw_sentence(cfg, rng)) src.push_back(out.source_words[id]);
    out.mono_target.push_back(std::move(tgt));
    out.mono_source.push_back(std::move(src));
  }
  return out;
}

void write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_lines(dir / "src.txt", corpus.source);
  write_lines(dir / "tgt.txt", corpus.target);
  write_alignment(dir / "gold.txt", corpus.gold);
  if (!corpus.mono_target.empty()) {
    write_lines(dir / "mono.tgt.txt", corpus.mono_target);
    write_lines(dir / "mono.src.txt", corpus.mono_source);
  }
}

}  // namespace vaealign
