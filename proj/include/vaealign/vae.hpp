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

#ifndef VAEALIGN_VAE_HPP_
#define VAEALIGN_VAE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "vaealign/alignment.hpp"
#include "vaealign/corpus.hpp"
#include "vaealign/graph.hpp"
#include "vaealign/lattice.hpp"
#include "vaealign/nn.hpp"

namespace vaealign {

enum class AlignFamily { kIbm1, kHmm };

const char* family_name(AlignFamily family);

struct EncoderConfig {
  std::size_t embed_dim = 128;
  std::size_t hidden_dim = 64;  // per LSTM direction
  std::size_t latent_dim = 64;
  std::size_t layers = 2;
};

// Inference network for one language: embedding, stacked BiLSTMs, a
// projection W_h of the concatenated states, then mean and softplus scale.
struct Encoder {
  ParamId embedding = 0;
  std::vector<BiLstmParams> layers;
  ParamId projection = 0;
  Linear mean;
  Linear scale;
  std::size_t latent_dim = 0;
};

Encoder add_encoder(ParameterSet& params, const std::string& prefix, std::size_t vocab_size,
                    const EncoderConfig& config, Rng& rng);

// Latents for positions 0..I: row 0 comes from the one-token dummy sentence,
// rows 1..I from the sentence itself. All three are [(I+1) x latent_dim].
struct LatentBatch {
  Var mean;
  Var scale;
  Var sample;
  std::size_t positions = 0;
};

// `noise` is [(I+1) x latent_dim]; a zero tensor gives sample == mean.
LatentBatch encode(Graph& g, const Encoder& encoder, const Sentence& sentence,
                   const Tensor& noise);
Tensor zero_noise(std::size_t sentence_length, std::size_t latent_dim);

struct Decoder {
  ParamId weight = 0;  // [latent x V]
  ParamId bias = 0;    // [1 x V]
};

// -sum_{i=1..I} log softmax(W_v y_i + b_v)[e_i]; the dummy row is skipped.
Var reconstruction_loss(Graph& g, const Decoder& decoder, const LatentBatch& latents,
                        const Sentence& sentence);
// Closed-form KL of N(u, diag(s^2)) to N(0, I), summed over positions.
Var kl_term(Graph& g, const LatentBatch& latents, bool include_dummy = true);

// [J x (I+1)]: log softmax(W y_i)[f_j], no bias.
Var emission_log_probs(Graph& g, ParamId emission, const LatentBatch& latents,
                       const Sentence& source);
// [(I+1) x (I+1)]: row k is the log transition distribution over landings
// 0..I, from softmax(W_delta y_k) restricted to feasible jumps.
Var transition_log_probs(Graph& g, ParamId jump, const LatentBatch& latents);

Var ibm1_alignment_loss(Graph& g, ParamId emission, const LatentBatch& latents,
                        const Sentence& source);
Var hmm_alignment_loss(Graph& g, ParamId emission, ParamId jump, const LatentBatch& latents,
                       const Sentence& source);

// Fused log-likelihood of a lattice; the backward pass uses forward-backward
// posteriors directly.
Var lattice_log_likelihood(Graph& g, Var log_emission, Var log_initial, Var log_transition);
// Posteriors [J x S] built from differentiable primitives, so they can be
// differentiated themselves.
Var lattice_posteriors(Graph& g, Var log_emission, Var log_initial, Var log_transition);

struct ObjectiveWeights {
  double reconstruction = 10.0;  // alpha
  double alignment = 50.0;       // beta
  double kl = 0.5;               // gamma
  double agreement = 1.0;        // delta
  double mono = 1.0;             // mu
};

struct VaeConfig {
  EncoderConfig encoder;
  AlignFamily family = AlignFamily::kIbm1;
  bool joint = false;          // train both directions together
  bool share_decoders = false;  // +SP; requires joint
  bool kl_includes_dummy = true;
  AlignFamily noise_family = AlignFamily::kIbm1;
};

// One alignment direction: encodes the "observed" language, reconstructs it,
// and generates the other language through the alignment model.
struct DirectionParams {
  Encoder encoder;
  Decoder reconstruction;
  ParamId emission = 0;
  ParamId jump = 0;
};

// Forward direction generates source f from target latents; the reverse
// direction (joint models only) generates e from source latents. Under
// sharing, forward.reconstruction.weight == reverse.emission and
// reverse.reconstruction.weight == forward.emission: the same parameters.
class VaeAligner {
 public:
  VaeAligner(const VaeConfig& config, std::size_t source_vocab, std::size_t target_vocab,
             Rng& rng);

  const VaeConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const DirectionParams& forward() const { return forward_; }
  const DirectionParams& reverse() const;
  bool has_reverse() const { return reverse_.has_value(); }
  std::size_t source_vocab() const { return source_vocab_; }
  std::size_t target_vocab() const { return target_vocab_; }

  // Throws ConfigError when the sharing flag and parameter identity disagree.
  void check_sharing() const;
  // Test hook: declares sharing without rewiring parameters.
  void set_sharing_flag(bool shared) { config_.share_decoders = shared; }

 private:
  VaeConfig config_;
  std::size_t source_vocab_;
  std::size_t target_vocab_;
  ParameterSet params_;
  DirectionParams forward_;
  std::optional<DirectionParams> reverse_;
};

enum class Direction { kForward, kReverse };

struct ElboTerms {
  Var total;
  Var reconstruction;
  Var alignment;
  Var kl;
  LatentBatch latents;
};

// alpha * reconstruction + beta * alignment + gamma * KL with one shared
// noise draw. `observed` is encoded, `generated` is aligned to its latents.
ElboTerms elbo(Graph& g, const VaeAligner& model, Direction dir, const Sentence& observed,
               const Sentence& generated, const Tensor& noise, const ObjectiveWeights& w);

struct AgreementTerms {
  Var non_null;
  Var null_forward;
  Var null_reverse;
};

// gamma_fwd [J x (I+1)] for a (source f over target e), gamma_rev [I x (J+1)]
// for b (target e over source f).
AgreementTerms agreement_terms(Graph& g, Var gamma_fwd, Var gamma_rev);
double agreement_cost(const Tensor& gamma_fwd, const Tensor& gamma_rev);

struct NamedTerm {
  std::string name;
  Var value;   // raw, unweighted
  double weight;
};

struct JointObjective {
  Var total;
  std::vector<NamedTerm> terms;  // 6, or 9 with agreement
};

// Both directions' weighted ELBOs (shared decoders), plus delta-weighted
// agreement terms when `agreement` is set.
JointObjective joint_objective(Graph& g, const VaeAligner& model, const SentencePair& pair,
                               const Tensor& noise_forward, const Tensor& noise_reverse,
                               const ObjectiveWeights& w, bool agreement);

// Direction-level posteriors for the alignment family of the model.
Var alignment_posteriors(Graph& g, const VaeAligner& model, Direction dir,
                         const LatentBatch& latents, const Sentence& generated);

// mu * (alpha * reconstruction + gamma * KL) on a monolingual sentence of
// the language encoded by `dir`.
Var mono_objective(Graph& g, const VaeAligner& model, Direction dir, const Sentence& sentence,
                   const Tensor& noise, const ObjectiveWeights& w);

// mu * (alpha * alignment cost of the clean sentence given the noisy
// sentence's latents + gamma * KL of those latents).
Var mono_noise_objective(Graph& g, const VaeAligner& model, Direction dir,
                         const Sentence& clean, const Sentence& noisy, const Tensor& noise,
                         const ObjectiveWeights& w, AlignFamily family);

struct NoiseConfig {
  double drop_probability = 0.1;
  std::size_t max_shuffle = 3;
};

// Word drop, never emptying the sentence, then a local shuffle that moves
// no word more than max_shuffle positions.
Sentence noise_corrupt(const Sentence& sentence, const NoiseConfig& config, Rng& rng);

// Deterministic inference: y = u, posterior argmax for IBM-1, Viterbi for HMM.
AlignmentSet vae_align(const VaeAligner& model, Direction dir, const Sentence& observed,
                       const Sentence& generated);
// Argmax of the reconstruction softmax at each position (y = u).
std::vector<TokenId> reconstruct(const VaeAligner& model, Direction dir,
                                 const Sentence& sentence);

}  // namespace vaealign

#endif  // VAEALIGN_VAE_HPP_
