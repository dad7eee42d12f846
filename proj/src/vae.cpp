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

#include "vaealign/vae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "vaealign/count_aligners.hpp"
#include "vaealign/errors.hpp"

namespace vaealign {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

const char* family_name(AlignFamily family) {
  return family == AlignFamily::kIbm1 ? "ibm1" : "hmm";
}

// ------------------------------------------------------------------- encoder

Encoder add_encoder(ParameterSet& params, const std::string& prefix, std::size_t vocab_size,
                    const EncoderConfig& config, Rng& rng) {
  if (config.layers == 0) throw ConfigError("encoder needs at least one LSTM layer");
  Encoder enc;
  enc.latent_dim = config.latent_dim;
  enc.embedding = params.add(prefix + ".E", uniform_init(vocab_size, config.embed_dim,
                                                         config.embed_dim, rng));
  std::size_t input = config.embed_dim;
  for (std::size_t l = 0; l < config.layers; ++l) {
    enc.layers.push_back(add_bilstm(params, prefix + ".lstm" + std::to_string(l), input,
                                    config.hidden_dim, rng));
    input = 2 * config.hidden_dim;
  }
  enc.projection = params.add(prefix + ".W_h", uniform_init(input, config.latent_dim, input, rng));
  enc.mean = add_linear(params, prefix + ".u", config.latent_dim, config.latent_dim, true, rng);
  enc.scale = add_linear(params, prefix + ".s", config.latent_dim, config.latent_dim, true, rng);
  return enc;
}

namespace {

std::pair<Var, Var> run_encoder(Graph& g, const Encoder& enc, const std::vector<TokenId>& ids) {
  Var x = g.embedding_lookup(g.param(enc.embedding),
                             std::vector<std::size_t>(ids.begin(), ids.end()));
  for (const auto& layer : enc.layers) x = bilstm_layer(g, layer, x);
  Var h = g.matmul(x, g.param(enc.projection));
  Var mean = apply_linear(g, enc.mean, h);
  Var scale = g.softplus(apply_linear(g, enc.scale, h));
  return {mean, scale};
}

}  // namespace

LatentBatch encode(Graph& g, const Encoder& enc, const Sentence& sentence, const Tensor& noise) {
  if (sentence.size() == 0) throw ShapeError("encode: empty sentence");
  const std::size_t positions = sentence.size() + 1;
  if (noise.rows() != positions || noise.cols() != enc.latent_dim) {
    throw ShapeError("encode: noise shape " + shape_string(noise.shape()) + " != [" +
                     std::to_string(positions) + ", " + std::to_string(enc.latent_dim) + "]");
  }
  auto [dummy_mean, dummy_scale] = run_encoder(g, enc, {Vocabulary::kNull});
  auto [mean, scale] = run_encoder(g, enc, sentence.ids);
  LatentBatch out;
  out.positions = positions;
  out.mean = g.concat({dummy_mean, mean}, 0);
  out.scale = g.concat({dummy_scale, scale}, 0);
  out.sample = g.gaussian_sample(out.mean, out.scale, noise);
  return out;
}

Tensor zero_noise(std::size_t sentence_length, std::size_t latent_dim) {
  return Tensor::matrix(sentence_length + 1, latent_dim);
}

// -------------------------------------------------------------------- losses

Var reconstruction_loss(Graph& g, const Decoder& decoder, const LatentBatch& latents,
                        const Sentence& sentence) {
  if (latents.positions != sentence.size() + 1) {
    throw ShapeError("reconstruction_loss: latent rows do not match sentence length");
  }
  Var y = g.slice(latents.sample, 0, 1, sentence.size());
  Var logits = g.add(g.matmul(y, g.param(decoder.weight)), g.param(decoder.bias));
  Var log_probs = g.log_softmax(logits, 1);
  Var gold = g.pick(log_probs, std::vector<std::size_t>(sentence.ids.begin(), sentence.ids.end()));
  return g.neg(g.sum(gold));
}

Var kl_term(Graph& g, const LatentBatch& latents, bool include_dummy) {
  Var u = latents.mean, s = latents.scale;
  if (!include_dummy) {
    u = g.slice(u, 0, 1, latents.positions - 1);
    s = g.slice(s, 0, 1, latents.positions - 1);
  }
  Var s2 = g.mul(s, s);
  // 0.5 * sum(u^2 + s^2 - 1 - ln s^2)
  Var inner = g.sub(g.add(g.mul(u, u), s2), g.log(s2));
  return g.scale(g.sum(g.add_scalar(inner, -1.0)), 0.5);
}

Var emission_log_probs(Graph& g, ParamId emission, const LatentBatch& latents,
                       const Sentence& source) {
  Var log_probs = g.log_softmax(g.matmul(latents.sample, g.param(emission)), 1);
  const std::size_t states = latents.positions;
  const std::size_t n = source.size();
  std::vector<std::size_t> index(states * n);
  for (std::size_t i = 0; i < states; ++i)
    for (std::size_t j = 0; j < n; ++j) index[i * n + j] = source.ids[j];
  return g.transpose(g.gather_cols(log_probs, std::move(index), n));
}

Var transition_log_probs(Graph& g, ParamId jump, const LatentBatch& latents) {
  const std::size_t states = latents.positions;
  Var logits = g.matmul(latents.sample, g.param(jump));
  if (g.value(logits).cols() != kJumpCount) {
    throw ShapeError("transition_log_probs: jump matrix must have " +
                     std::to_string(kJumpCount) + " columns");
  }
  std::vector<std::size_t> index(states * states);
  bool needs_mask = false;
  Tensor mask = Tensor::matrix(states, states);
  for (std::size_t k = 0; k < states; ++k)
    for (std::size_t i = 0; i < states; ++i) {
      const int d = static_cast<int>(i) - static_cast<int>(k);
      if (std::abs(d) > kMaxJump) {
        needs_mask = true;
        mask(k, i) = kNegInf;
        index[k * states + i] = static_cast<std::size_t>(kMaxJump);
      } else {
        index[k * states + i] = static_cast<std::size_t>(d + kMaxJump);
      }
    }
  Var gathered = g.gather_cols(logits, std::move(index), states);
  if (needs_mask) gathered = g.add(gathered, g.constant(std::move(mask)));
  return g.log_softmax(gathered, 1);
}

Var ibm1_alignment_loss(Graph& g, ParamId emission, const LatentBatch& latents,
                        const Sentence& source) {
  Var log_e = emission_log_probs(g, emission, latents, source);  // [J x S]
  Var per_word = g.logsumexp(log_e, 1);
  const double log_states = std::log(static_cast<double>(latents.positions));
  return g.neg(g.sum(g.add_scalar(per_word, -log_states)));
}

Var lattice_log_likelihood(Graph& g, Var log_emission, Var log_initial, Var log_transition) {
  auto lattice = std::make_shared<Lattice>(
      Lattice{g.value(log_emission), g.value(log_initial), g.value(log_transition)});
  auto fb = std::make_shared<ForwardBackward>(forward_backward(*lattice));
  Tensor value = Tensor::scalar(fb->log_likelihood);
  return g.custom({log_emission, log_initial, log_transition}, std::move(value),
                  [lattice, fb](const Tensor& out_grad, std::vector<Tensor>& grads) {
                    const double scale = out_grad[0];
                    const Tensor gamma = lattice_posteriors(*lattice, *fb);
                    const Tensor xi = lattice_transition_posteriors(*lattice, *fb);
                    for (std::size_t k = 0; k < gamma.size(); ++k) grads[0][k] += scale * gamma[k];
                    for (std::size_t i = 0; i < gamma.cols(); ++i) grads[1][i] += scale * gamma(0, i);
                    for (std::size_t k = 0; k < xi.size(); ++k) grads[2][k] += scale * xi[k];
                  });
}

Var hmm_alignment_loss(Graph& g, ParamId emission, ParamId jump, const LatentBatch& latents,
                       const Sentence& source) {
  const std::size_t states = latents.positions;
  Var log_e = emission_log_probs(g, emission, latents, source);
  Var log_t = transition_log_probs(g, jump, latents);
  Var log_init =
      g.constant(Tensor::matrix(1, states, -std::log(static_cast<double>(states))));
  return g.neg(lattice_log_likelihood(g, log_e, log_init, log_t));
}

Var lattice_posteriors(Graph& g, Var log_emission, Var log_initial, Var log_transition) {
  const std::size_t n = g.value(log_emission).rows();
  const std::size_t states = g.value(log_emission).cols();
  std::vector<Var> alpha(n), beta(n);
  alpha[0] = g.add(log_initial, g.slice(log_emission, 0, 0, 1));
  for (std::size_t j = 1; j < n; ++j) {
    Var paths = g.add(g.transpose(alpha[j - 1]), log_transition);
    alpha[j] = g.add(g.logsumexp(paths, 0), g.slice(log_emission, 0, j, 1));
  }
  beta[n - 1] = g.constant(Tensor::matrix(1, states));
  for (std::size_t j = n - 1; j-- > 0;) {
    Var next = g.add(g.slice(log_emission, 0, j + 1, 1), beta[j + 1]);
    beta[j] = g.transpose(g.logsumexp(g.add(log_transition, next), 1));
  }
  Var log_z = g.logsumexp(alpha[n - 1], 1);
  Var joint = n == 1 ? g.add(alpha[0], beta[0])
                     : g.add(g.concat(alpha, 0), g.concat(beta, 0));
  return g.exp(g.sub(joint, log_z));
}

// ----------------------------------------------------------------- the model

VaeAligner::VaeAligner(const VaeConfig& config, std::size_t source_vocab,
                       std::size_t target_vocab, Rng& rng)
    : config_(config), source_vocab_(source_vocab), target_vocab_(target_vocab) {
  if (config.share_decoders && !config.joint) {
    throw ConfigError("decoder sharing requires a joint (two-direction) model");
  }
  const std::size_t d = config.encoder.latent_dim;
  forward_.encoder = add_encoder(params_, "enc.tgt", target_vocab, config.encoder, rng);
  forward_.reconstruction.weight =
      params_.add("dec.tgt.W_v", uniform_init(d, target_vocab, d, rng));
  forward_.reconstruction.bias = params_.add("dec.tgt.b_v", uniform_init(1, target_vocab, d, rng));
  forward_.emission = params_.add("dec.src.W_v", uniform_init(d, source_vocab, d, rng));
  forward_.jump = params_.add("dec.src.W_delta", uniform_init(d, kJumpCount, d, rng));
  if (!config.joint) return;

  DirectionParams rev;
  rev.encoder = add_encoder(params_, "enc.src", source_vocab, config.encoder, rng);
  if (config.share_decoders) {
    rev.reconstruction.weight = forward_.emission;
    rev.reconstruction.bias = params_.add("dec.src.b_v", uniform_init(1, source_vocab, d, rng));
    rev.emission = forward_.reconstruction.weight;
  } else {
    rev.reconstruction.weight = params_.add("rev.dec.src.W_v", uniform_init(d, source_vocab, d, rng));
    rev.reconstruction.bias = params_.add("rev.dec.src.b_v", uniform_init(1, source_vocab, d, rng));
    rev.emission = params_.add("rev.dec.tgt.W_v", uniform_init(d, target_vocab, d, rng));
  }
  rev.jump = params_.add("dec.tgt.W_delta", uniform_init(d, kJumpCount, d, rng));
  reverse_ = rev;
}

const DirectionParams& VaeAligner::reverse() const {
  if (!reverse_) throw ConfigError("model has no reverse direction");
  return *reverse_;
}

void VaeAligner::check_sharing() const {
  const bool identical = reverse_ && reverse_->emission == forward_.reconstruction.weight &&
                         reverse_->reconstruction.weight == forward_.emission;
  if (config_.share_decoders != identical) {
    throw ConfigError(config_.share_decoders
                          ? "sharing enabled but decoders are distinct parameters"
                          : "sharing disabled but decoders are the same parameters");
  }
}

namespace {
const DirectionParams& direction(const VaeAligner& model, Direction dir) {
  return dir == Direction::kForward ? model.forward() : model.reverse();
}
}  // namespace

ElboTerms elbo(Graph& g, const VaeAligner& model, Direction dir, const Sentence& observed,
               const Sentence& generated, const Tensor& noise, const ObjectiveWeights& w) {
  const DirectionParams& p = direction(model, dir);
  ElboTerms t;
  t.latents = encode(g, p.encoder, observed, noise);
  t.reconstruction = reconstruction_loss(g, p.reconstruction, t.latents, observed);
  t.alignment = model.config().family == AlignFamily::kIbm1
                    ? ibm1_alignment_loss(g, p.emission, t.latents, generated)
                    : hmm_alignment_loss(g, p.emission, p.jump, t.latents, generated);
  t.kl = kl_term(g, t.latents, model.config().kl_includes_dummy);
  t.total = g.add(g.add(g.scale(t.reconstruction, w.reconstruction),
                        g.scale(t.alignment, w.alignment)),
                  g.scale(t.kl, w.kl));
  return t;
}

Var alignment_posteriors(Graph& g, const VaeAligner& model, Direction dir,
                         const LatentBatch& latents, const Sentence& generated) {
  const DirectionParams& p = direction(model, dir);
  Var log_e = emission_log_probs(g, p.emission, latents, generated);
  if (model.config().family == AlignFamily::kIbm1) return g.softmax(log_e, 1);
  const std::size_t states = latents.positions;
  Var log_init =
      g.constant(Tensor::matrix(1, states, -std::log(static_cast<double>(states))));
  return lattice_posteriors(g, log_e, log_init, transition_log_probs(g, p.jump, latents));
}

AgreementTerms agreement_terms(Graph& g, Var gamma_fwd, Var gamma_rev) {
  const std::size_t j_len = g.value(gamma_fwd).rows();
  const std::size_t i_len = g.value(gamma_fwd).cols() - 1;
  if (g.value(gamma_rev).rows() != i_len || g.value(gamma_rev).cols() != j_len + 1) {
    throw ShapeError("agreement_terms: posterior shapes " +
                     shape_string(g.value(gamma_fwd).shape()) + " and " +
                     shape_string(g.value(gamma_rev).shape()) + " do not transpose");
  }
  Var a = g.slice(gamma_fwd, 1, 1, i_len);                 // [J x I]
  Var b = g.transpose(g.slice(gamma_rev, 1, 1, j_len));    // [J x I]
  AgreementTerms t;
  t.non_null = g.sum(g.abs(g.sub(a, b)));
  Var rev_mass = g.matmul(b, g.constant(Tensor::matrix(i_len, 1, 1.0)));  // [J x 1]
  Var fwd_null = g.slice(gamma_fwd, 1, 0, 1);
  t.null_forward = g.sum(g.abs(g.add_scalar(g.neg(g.add(fwd_null, rev_mass)), 1.0)));
  Var fwd_mass = g.matmul(g.constant(Tensor::matrix(1, j_len, 1.0)), a);  // [1 x I]
  Var rev_null = g.transpose(g.slice(gamma_rev, 1, 0, 1));
  t.null_reverse = g.sum(g.abs(g.add_scalar(g.neg(g.add(rev_null, fwd_mass)), 1.0)));
  return t;
}

double agreement_cost(const Tensor& gamma_fwd, const Tensor& gamma_rev) {
  for (const Tensor* m : {&gamma_fwd, &gamma_rev}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < m->cols(); ++c) total += (*m)(r, c);
      if (std::fabs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("agreement_cost: posterior row " + std::to_string(r) +
                                    " sums to " + std::to_string(total));
      }
    }
  }
  ParameterSet none;
  Graph g(none);
  auto t = agreement_terms(g, g.constant(gamma_fwd), g.constant(gamma_rev));
  return g.value(t.non_null).item() + g.value(t.null_forward).item() +
         g.value(t.null_reverse).item();
}

JointObjective joint_objective(Graph& g, const VaeAligner& model, const SentencePair& pair,
                               const Tensor& noise_forward, const Tensor& noise_reverse,
                               const ObjectiveWeights& w, bool agreement) {
  if (!model.has_reverse()) throw ConfigError("joint objective needs a two-direction model");
  model.check_sharing();
  if (!model.config().share_decoders) {
    throw ConfigError("joint objective requires shared decoders (+SP)");
  }
  ElboTerms fwd = elbo(g, model, Direction::kForward, pair.target, pair.source, noise_forward, w);
  ElboTerms rev = elbo(g, model, Direction::kReverse, pair.source, pair.target, noise_reverse, w);
  JointObjective out;
  out.terms = {{"recon.fwd", fwd.reconstruction, w.reconstruction},
               {"align.fwd", fwd.alignment, w.alignment},
               {"kl.fwd", fwd.kl, w.kl},
               {"recon.rev", rev.reconstruction, w.reconstruction},
               {"align.rev", rev.alignment, w.alignment},
               {"kl.rev", rev.kl, w.kl}};
  out.total = g.add(fwd.total, rev.total);
  if (agreement) {
    Var gf = alignment_posteriors(g, model, Direction::kForward, fwd.latents, pair.source);
    Var gr = alignment_posteriors(g, model, Direction::kReverse, rev.latents, pair.target);
    AgreementTerms a = agreement_terms(g, gf, gr);
    out.terms.push_back({"agree.non_null", a.non_null, w.agreement});
    out.terms.push_back({"agree.null_fwd", a.null_forward, w.agreement});
    out.terms.push_back({"agree.null_rev", a.null_reverse, w.agreement});
    Var agree = g.add(g.add(a.non_null, a.null_forward), a.null_reverse);
    out.total = g.add(out.total, g.scale(agree, w.agreement));
  }
  return out;
}

Var mono_objective(Graph& g, const VaeAligner& model, Direction dir, const Sentence& sentence,
                   const Tensor& noise, const ObjectiveWeights& w) {
  const DirectionParams& p = direction(model, dir);
  LatentBatch lat = encode(g, p.encoder, sentence, noise);
  Var rec = reconstruction_loss(g, p.reconstruction, lat, sentence);
  Var kl = kl_term(g, lat, model.config().kl_includes_dummy);
  return g.scale(g.add(g.scale(rec, w.reconstruction), g.scale(kl, w.kl)), w.mono);
}

Var mono_noise_objective(Graph& g, const VaeAligner& model, Direction dir,
                         const Sentence& clean, const Sentence& noisy, const Tensor& noise,
                         const ObjectiveWeights& w, AlignFamily family) {
  const DirectionParams& p = direction(model, dir);
  LatentBatch lat = encode(g, p.encoder, noisy, noise);
  // The decoder generating this language; under sharing it is also the other
  // direction's emission matrix.
  const ParamId emission = p.reconstruction.weight;
  Var align;
  if (family == AlignFamily::kIbm1) {
    align = ibm1_alignment_loss(g, emission, lat, clean);
  } else {
    const Direction other = dir == Direction::kForward ? Direction::kReverse : Direction::kForward;
    const ParamId jump =
        model.has_reverse() ? direction(model, other).jump : model.forward().jump;
    align = hmm_alignment_loss(g, emission, jump, lat, clean);
  }
  Var kl = kl_term(g, lat, model.config().kl_includes_dummy);
  return g.scale(g.add(g.scale(align, w.reconstruction), g.scale(kl, w.kl)), w.mono);
}

Sentence noise_corrupt(const Sentence& sentence, const NoiseConfig& config, Rng& rng) {
  if (config.drop_probability < 0.0 || config.drop_probability >= 1.0) {
    throw ConfigError("noise: drop probability must be in [0, 1)");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TokenId> kept;
  for (TokenId id : sentence.ids) {
    if (unit(rng) >= config.drop_probability) kept.push_back(id);
  }
  if (kept.empty() && !sentence.ids.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, sentence.ids.size() - 1);
    kept.push_back(sentence.ids[pick(rng)]);
  }
  std::vector<double> keys(kept.size());
  std::uniform_real_distribution<double> offset(0.0, static_cast<double>(config.max_shuffle));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    keys[k] = static_cast<double>(k) + (config.max_shuffle == 0 ? 0.0 : offset(rng));
  }
  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<TokenId> shuffled;
  shuffled.reserve(kept.size());
  for (std::size_t k : order) shuffled.push_back(kept[k]);
  return make_word_sentence(std::move(shuffled));
}

AlignmentSet vae_align(const VaeAligner& model, Direction dir, const Sentence& observed,
                       const Sentence& generated) {
  const DirectionParams& p = direction(model, dir);
  Graph g(model.params());
  LatentBatch lat = encode(g, p.encoder, observed, zero_noise(observed.size(), p.encoder.latent_dim));
  const Tensor log_e = g.value(emission_log_probs(g, p.emission, lat, generated));
  std::vector<std::size_t> path;
  if (model.config().family == AlignFamily::kIbm1) {
    path = posterior_argmax(log_e);
  } else {
    const std::size_t states = lat.positions;
    Lattice lattice{log_e, Tensor::matrix(1, states, -std::log(static_cast<double>(states))),
                    g.value(transition_log_probs(g, p.jump, lat))};
    path = lattice_viterbi(lattice);
  }
  return alignment_from_path(path, generated.size(), observed.size());
}

std::vector<TokenId> reconstruct(const VaeAligner& model, Direction dir,
                                 const Sentence& sentence) {
  const DirectionParams& p = direction(model, dir);
  Graph g(model.params());
  LatentBatch lat = encode(g, p.encoder, sentence, zero_noise(sentence.size(), p.encoder.latent_dim));
  Var y = g.slice(lat.mean, 0, 1, sentence.size());
  const Tensor logits = g.value(g.add(g.matmul(y, g.param(p.reconstruction.weight)),
                                      g.param(p.reconstruction.bias)));
  std::vector<TokenId> out(sentence.size());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    out[r] = static_cast<TokenId>(best);
  }
  return out;
}

}  // namespace vaealign
