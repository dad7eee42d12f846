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

#include "vaealign/vae_train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <string>

#include "vaealign/errors.hpp"

namespace vaealign {

void write_epoch_header(std::ostream& out) {
  out << "epoch\trecon\talign\tkl\tagree\tmono\ttotal\n";
}

void write_epoch_row(std::ostream& out, const EpochLog& row) {
  out << row.epoch << std::setprecision(10) << '\t' << row.recon << '\t' << row.align << '\t'
      << row.kl << '\t' << row.agree << '\t' << row.mono << '\t' << row.total << '\n';
}

namespace {

// One sentence's contribution to a batch, with its noise drawn up front so
// that the parallel sections consume no randomness.
struct Example {
  const SentencePair* pair = nullptr;  // parallel example when set
  Tensor noise_forward;
  Tensor noise_reverse;
  // Monolingual example.
  Direction dir = Direction::kForward;
  const Sentence* sentence = nullptr;
  Tensor noise;
  bool corrupted = false;
  Sentence noisy;
  Tensor noisy_noise;
};

struct TermSums {
  double recon = 0.0, align = 0.0, kl = 0.0, agree = 0.0, mono = 0.0, total = 0.0;
  void add(const TermSums& o) {
    recon += o.recon;
    align += o.align;
    kl += o.kl;
    agree += o.agree;
    mono += o.mono;
    total += o.total;
  }
};

struct GroupResult {
  Gradients grads;
  TermSums sums;
  std::string bad_term;
};

struct TrackedTerm {
  const char* kind;  // recon | align | kl | agree | mono
  std::string name;
  Var value;
};

Var build_example(Graph& g, const VaeAligner& model, const Example& ex,
                  const VaeTrainConfig& config, std::vector<TrackedTerm>& terms) {
  const ObjectiveWeights& w = config.weights;
  if (ex.pair == nullptr) {
    Var loss = mono_objective(g, model, ex.dir, *ex.sentence, ex.noise, w);
    terms.push_back({"mono", "mono", loss});
    if (ex.corrupted) {
      Var noisy = mono_noise_objective(g, model, ex.dir, *ex.sentence, ex.noisy, ex.noisy_noise,
                                       w, model.config().noise_family);
      terms.push_back({"mono", "mono.noise", noisy});
      loss = g.add(loss, noisy);
    }
    return loss;
  }
  const VaeConfig& mc = model.config();
  if (mc.joint && mc.share_decoders) {
    JointObjective jo = joint_objective(g, model, *ex.pair, ex.noise_forward, ex.noise_reverse, w,
                                        config.agreement);
    for (const auto& t : jo.terms) {
      const std::string kind = t.name.substr(0, t.name.find('.'));
      const char* k = kind == "recon" ? "recon" : kind == "align" ? "align"
                    : kind == "kl"    ? "kl"
                                      : "agree";
      terms.push_back({k, t.name, t.value});
    }
    return jo.total;
  }
  ElboTerms fwd = elbo(g, model, Direction::kForward, ex.pair->target, ex.pair->source,
                       ex.noise_forward, w);
  terms.push_back({"recon", "recon.fwd", fwd.reconstruction});
  terms.push_back({"align", "align.fwd", fwd.alignment});
  terms.push_back({"kl", "kl.fwd", fwd.kl});
  if (!mc.joint) return fwd.total;
  ElboTerms rev = elbo(g, model, Direction::kReverse, ex.pair->source, ex.pair->target,
                       ex.noise_reverse, w);
  terms.push_back({"recon", "recon.rev", rev.reconstruction});
  terms.push_back({"align", "align.rev", rev.alignment});
  terms.push_back({"kl", "kl.rev", rev.kl});
  return g.add(fwd.total, rev.total);
}

GroupResult run_group(const VaeAligner& model, const std::vector<Example>& examples,
                      std::size_t begin, std::size_t end, double weight,
                      const VaeTrainConfig& config) {
  GroupResult out;
  Graph g(model.params());
  std::vector<TrackedTerm> terms;
  Var total;
  for (std::size_t k = begin; k < end; ++k) {
    Var loss = build_example(g, model, examples[k], config, terms);
    total = k == begin ? loss : g.add(total, loss);
  }
  for (const auto& t : terms) {
    const double v = g.value(t.value).item();
    if (!std::isfinite(v)) {
      out.bad_term = t.name;
      return out;
    }
    const std::string kind = t.kind;
    if (kind == "recon") out.sums.recon += v;
    else if (kind == "align") out.sums.align += v;
    else if (kind == "kl") out.sums.kl += v;
    else if (kind == "agree") out.sums.agree += v;
    else out.sums.mono += v;
  }
  out.sums.total = g.value(total).item();
  if (!std::isfinite(out.sums.total)) {
    out.bad_term = "total";
    return out;
  }
  g.backward(total);
  out.grads = zero_gradients(model.params());
  g.accumulate_param_gradients(out.grads, weight);
  return out;
}

// Mean-per-example gradient over the batch, reduced in group order.
TermSums batch_gradients(const VaeAligner& model, const std::vector<Example>& examples,
                         const VaeTrainConfig& config, Gradients& grads) {
  grads = zero_gradients(model.params());
  TermSums sums;
  const std::size_t groups = (examples.size() + kMicroGroup - 1) / kMicroGroup;
  const double weight = 1.0 / static_cast<double>(examples.size());
  auto produce = [&](std::size_t grp) {
    const std::size_t begin = grp * kMicroGroup;
    return run_group(model, examples, begin, std::min(examples.size(), begin + kMicroGroup),
                     weight, config);
  };
  auto consume = [&](std::size_t, GroupResult r) {
    if (!r.bad_term.empty()) {
      throw DivergenceError("non-finite value in training term '" + r.bad_term + "'");
    }
    add_into(grads, r.grads);
    sums.add(r.sums);
  };
  if (config.exec == Execution::kSerial) {
    for (std::size_t grp = 0; grp < groups; ++grp) consume(grp, produce(grp));
    return sums;
  }
  // Waves of one group per thread bound the number of live gradient copies.
  const std::size_t wave = static_cast<std::size_t>(std::max(1, thread_count()));
  std::vector<GroupResult> buffer;
  for (std::size_t first = 0; first < groups; first += wave) {
    const std::size_t count = std::min(wave, groups - first);
    buffer.assign(count, GroupResult{});
#pragma omp parallel for schedule(dynamic, 1)
    for (long long k = 0; k < static_cast<long long>(count); ++k) {
      buffer[static_cast<std::size_t>(k)] = produce(first + static_cast<std::size_t>(k));
    }
    for (std::size_t k = 0; k < count; ++k) consume(first + k, std::move(buffer[k]));
  }
  return sums;
}

// Per-sentence noise; row 0 (the dummy latent) is shared across the batch.
Tensor draw_noise(std::size_t length, const Tensor& dummy_row, Rng& rng) {
  Tensor noise = standard_normal(length + 1, dummy_row.cols(), rng);
  for (std::size_t c = 0; c < dummy_row.cols(); ++c) noise(0, c) = dummy_row(0, c);
  return noise;
}

double apply_update(VaeAligner& model, Adam& adam, Gradients& grads, const VaeTrainConfig& cfg) {
  const double norm = clip_global_norm(grads, cfg.clip_norm);
  if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient norm");
  adam.step(model.params(), grads);
  return norm;
}

std::vector<Example> pair_examples(const VaeAligner& model,
                                   const std::vector<const SentencePair*>& pairs, Rng& rng) {
  const std::size_t d = model.config().encoder.latent_dim;
  const Tensor dummy_fwd = standard_normal(1, d, rng);
  const Tensor dummy_rev = standard_normal(1, d, rng);
  std::vector<Example> out(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out[k].pair = pairs[k];
    out[k].noise_forward = draw_noise(pairs[k]->target.size(), dummy_fwd, rng);
    if (model.has_reverse()) {
      out[k].noise_reverse = draw_noise(pairs[k]->source.size(), dummy_rev, rng);
    }
  }
  return out;
}

std::size_t observed_tokens(const VaeAligner& model, const SentencePair& pair) {
  return pair.target.size() + (model.has_reverse() ? pair.source.size() : 0);
}

}  // namespace

double vae_train_step(VaeAligner& model, Adam& adam, const std::vector<SentencePair>& batch,
                      const VaeTrainConfig& config, Rng& rng) {
  if (batch.empty()) throw ConfigError("empty training batch");
  model.check_sharing();
  std::vector<const SentencePair*> ptrs;
  for (const auto& p : batch) ptrs.push_back(&p);
  std::vector<Example> examples = pair_examples(model, ptrs, rng);
  Gradients grads;
  TermSums sums = batch_gradients(model, examples, config, grads);
  apply_update(model, adam, grads, config);
  return sums.total / static_cast<double>(batch.size());
}

std::vector<EpochLog> vae_train(VaeAligner& model, const ParallelCorpus& corpus,
                                const MonoCorpus& mono, const VaeTrainConfig& config,
                                const EpochCallback& on_epoch) {
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (corpus.pairs.empty()) throw ConfigError("training corpus is empty");
  if (config.agreement && !(model.config().joint && model.config().share_decoders)) {
    throw ConfigError("+ac requires a joint model with shared decoders (+sp)");
  }
  if (config.noise && mono.empty()) throw ConfigError("+noise requires monolingual data");
  if (!mono.source.empty() && !model.has_reverse()) {
    throw ConfigError("source-side monolingual data needs a joint model");
  }
  model.check_sharing();

  Rng rng(config.seed);
  Adam adam(model.params(), config.adam);
  const std::size_t d = model.config().encoder.latent_dim;

  // Monolingual stream: (direction, sentence) items, reshuffled on each wrap.
  std::vector<std::pair<Direction, const Sentence*>> mono_items;
  for (const auto& s : mono.target) mono_items.emplace_back(Direction::kForward, &s);
  for (const auto& s : mono.source) mono_items.emplace_back(Direction::kReverse, &s);
  std::size_t mono_cursor = mono_items.size();

  std::vector<std::size_t> order(corpus.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochLog> logs;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    TermSums epoch_sums, mono_sums;
    std::size_t tokens = 0, mono_tokens = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<const SentencePair*> batch;
      for (std::size_t k = begin; k < end; ++k) {
        batch.push_back(&corpus.pairs[order[k]]);
        tokens += observed_tokens(model, corpus.pairs[order[k]]);
      }
      std::vector<Example> examples = pair_examples(model, batch, rng);
      Gradients grads;
      epoch_sums.add(batch_gradients(model, examples, config, grads));
      apply_update(model, adam, grads, config);

      if (mono_items.empty()) continue;
      std::vector<Example> mono_examples;
      const Tensor dummy_fwd = standard_normal(1, d, rng);
      const Tensor dummy_rev = standard_normal(1, d, rng);
      for (std::size_t k = 0; k < config.batch_size; ++k) {
        if (mono_cursor == mono_items.size()) {
          std::shuffle(mono_items.begin(), mono_items.end(), rng);
          mono_cursor = 0;
        }
        const auto [dir, sentence] = mono_items[mono_cursor++];
        const Tensor& dummy = dir == Direction::kForward ? dummy_fwd : dummy_rev;
        Example ex;
        ex.dir = dir;
        ex.sentence = sentence;
        ex.noise = draw_noise(sentence->size(), dummy, rng);
        if (config.noise) {
          ex.corrupted = true;
          ex.noisy = noise_corrupt(*sentence, config.noise_config, rng);
          ex.noisy_noise = draw_noise(ex.noisy.size(), dummy, rng);
        }
        mono_tokens += sentence->size();
        mono_examples.push_back(std::move(ex));
      }
      mono_sums.add(batch_gradients(model, mono_examples, config, grads));
      apply_update(model, adam, grads, config);
    }
    EpochLog row;
    row.epoch = epoch;
    const double n = static_cast<double>(tokens);
    row.recon = epoch_sums.recon / n;
    row.align = epoch_sums.align / n;
    row.kl = epoch_sums.kl / n;
    row.agree = epoch_sums.agree / n;
    row.mono = mono_tokens > 0 ? mono_sums.mono / static_cast<double>(mono_tokens) : 0.0;
    row.total = epoch_sums.total / n;
    logs.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return logs;
}

std::vector<AlignmentSet> vae_align_corpus(const VaeAligner& model, const ParallelCorpus& corpus,
                                           Direction dir, Execution exec) {
  std::vector<AlignmentSet> out(corpus.pairs.size());
  ordered_map_reduce<AlignmentSet>(
      corpus.pairs.size(), exec,
      [&](std::size_t k) {
        const SentencePair& p = corpus.pairs[k];
        if (dir == Direction::kForward) return vae_align(model, dir, p.target, p.source);
        return vae_align(model, dir, p.source, p.target).transposed();
      },
      [&](std::size_t k, AlignmentSet a) { out[k] = std::move(a); });
  return out;
}

double reconstruction_accuracy(const VaeAligner& model, const std::vector<Sentence>& sentences,
                               Direction dir, Execution exec) {
  std::size_t correct = 0, total = 0;
  ordered_map_reduce<std::size_t>(
      sentences.size(), exec,
      [&](std::size_t k) {
        const std::vector<TokenId> guess = reconstruct(model, dir, sentences[k]);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < guess.size(); ++i) hits += guess[i] == sentences[k].ids[i];
        return hits;
      },
      [&](std::size_t k, std::size_t hits) {
        correct += hits;
        total += sentences[k].size();
      });
  return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace vaealign
