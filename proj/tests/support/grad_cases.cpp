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

#include "support/grad_cases.hpp"

#include <map>

#include "vaealign/vae.hpp"

namespace vaealign::testing {

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t = Tensor::matrix(rows, cols);
  for (auto& v : t.storage()) v = u(rng);
  return t;
}

namespace {

std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Random fixed weights turn any output into a scalar with a generic gradient.
Var weighted_sum(Graph& g, Var out, const Tensor& weights) {
  return g.sum(g.mul(out, g.constant(weights)));
}


using Builder = std::function<GradCase(Rng&)>;

GradCase with_params(std::vector<std::pair<std::string, Tensor>> inputs,
                     std::function<Var(Graph&, const std::vector<Var>&)> body,
                     std::size_t out_rows, std::size_t out_cols, Rng& rng) {
  auto params = std::make_shared<ParameterSet>();
  std::vector<ParamId> ids;
  for (auto& [name, value] : inputs) ids.push_back(params->add(name, std::move(value)));
  const Tensor weights = random_matrix(out_rows, out_cols, rng);
  GradCase c;
  c.owner = params;
  c.params = params.get();
  c.loss = [ids, body, weights](Graph& g) {
    std::vector<Var> vars;
    for (ParamId id : ids) vars.push_back(g.param(id));
    return weighted_sum(g, body(g, vars), weights);
  };
  return c;
}

GradCase elementwise(Rng& rng, double lo, double hi, std::function<Var(Graph&, Var)> f) {
  const std::size_t r = draw(rng, 1, 4), c = draw(rng, 1, 4);
  return with_params({{"a", random_matrix(r, c, rng, lo, hi)}},
                     [f](Graph& g, const std::vector<Var>& v) { return f(g, v[0]); }, r, c, rng);
}

// Binary op with optional row (1 x c) or column (r x 1) broadcasting of b.
GradCase binary(Rng& rng, int broadcast, std::function<Var(Graph&, Var, Var)> f) {
  const std::size_t r = draw(rng, 1, 4), c = draw(rng, 1, 4);
  const std::size_t br = broadcast == 2 ? r : (broadcast == 1 ? 1 : r);
  const std::size_t bc = broadcast == 2 ? 1 : c;
  return with_params({{"a", random_matrix(r, c, rng)}, {"b", random_matrix(br, bc, rng)}},
                     [f](Graph& g, const std::vector<Var>& v) { return f(g, v[0], v[1]); }, r,
                     c, rng);
}

const std::map<std::string, Builder>& builders() {
  static const std::map<std::string, Builder> table = {
      {"add", [](Rng& rng) { return binary(rng, 0, [](Graph& g, Var a, Var b) { return g.add(a, b); }); }},
      {"add_row_broadcast",
       [](Rng& rng) { return binary(rng, 1, [](Graph& g, Var a, Var b) { return g.add(a, b); }); }},
      {"add_col_broadcast",
       [](Rng& rng) { return binary(rng, 2, [](Graph& g, Var a, Var b) { return g.add(a, b); }); }},
      {"sub", [](Rng& rng) { return binary(rng, 0, [](Graph& g, Var a, Var b) { return g.sub(a, b); }); }},
      {"sub_row_broadcast",
       [](Rng& rng) { return binary(rng, 1, [](Graph& g, Var a, Var b) { return g.sub(a, b); }); }},
      {"mul", [](Rng& rng) { return binary(rng, 0, [](Graph& g, Var a, Var b) { return g.mul(a, b); }); }},
      {"mul_col_broadcast",
       [](Rng& rng) { return binary(rng, 2, [](Graph& g, Var a, Var b) { return g.mul(a, b); }); }},
      {"scale",
       [](Rng& rng) {
         const double k = std::uniform_real_distribution<double>(-3, 3)(rng);
         return elementwise(rng, -1, 1, [k](Graph& g, Var a) { return g.scale(a, k); });
       }},
      {"add_scalar",
       [](Rng& rng) {
         const double k = std::uniform_real_distribution<double>(-3, 3)(rng);
         return elementwise(rng, -1, 1, [k](Graph& g, Var a) { return g.add_scalar(a, k); });
       }},
      {"matmul",
       [](Rng& rng) {
         const std::size_t r = draw(rng, 1, 4), k = draw(rng, 1, 4), c = draw(rng, 1, 4);
         return with_params({{"a", random_matrix(r, k, rng)}, {"b", random_matrix(k, c, rng)}},
                            [](Graph& g, const std::vector<Var>& v) { return g.matmul(v[0], v[1]); },
                            r, c, rng);
       }},
      {"transpose",
       [](Rng& rng) {
         const std::size_t r = draw(rng, 1, 4), c = draw(rng, 1, 4);
         return with_params({{"a", random_matrix(r, c, rng)}},
                            [](Graph& g, const std::vector<Var>& v) { return g.transpose(v[0]); },
                            c, r, rng);
       }},
      {"concat",
       [](Rng& rng) {
         const int axis = static_cast<int>(draw(rng, 0, 1));
         const std::size_t r = draw(rng, 1, 3), c = draw(rng, 1, 3), extra = draw(rng, 1, 3);
         const std::size_t r2 = axis == 0 ? extra : r, c2 = axis == 1 ? extra : c;
         return with_params({{"a", random_matrix(r, c, rng)}, {"b", random_matrix(r2, c2, rng)}},
                            [axis](Graph& g, const std::vector<Var>& v) {
                              return g.concat({v[0], v[1], v[0]}, axis);
                            },
                            axis == 0 ? 2 * r + r2 : r, axis == 1 ? 2 * c + c2 : c, rng);
       }},
      {"slice",
       [](Rng& rng) {
         const int axis = static_cast<int>(draw(rng, 0, 1));
         const std::size_t r = draw(rng, 2, 5), c = draw(rng, 2, 5);
         const std::size_t n = axis == 0 ? r : c;
         const std::size_t begin = draw(rng, 0, n - 1), len = draw(rng, 1, n - begin);
         return with_params({{"a", random_matrix(r, c, rng)}},
                            [=](Graph& g, const std::vector<Var>& v) {
                              return g.slice(v[0], axis, begin, len);
                            },
                            axis == 0 ? len : r, axis == 1 ? len : c, rng);
       }},
      {"embedding_lookup",
       [](Rng& rng) {
         const std::size_t v = draw(rng, 2, 5), d = draw(rng, 1, 4), n = draw(rng, 1, 6);
         std::vector<std::size_t> ids(n);
         for (auto& id : ids) id = draw(rng, 0, v - 1);  // repeats exercise accumulation
         return with_params({{"E", random_matrix(v, d, rng)}},
                            [ids](Graph& g, const std::vector<Var>& p) {
                              return g.embedding_lookup(p[0], ids);
                            },
                            n, d, rng);
       }},
      {"gather_cols",
       [](Rng& rng) {
         const std::size_t r = draw(rng, 1, 4), c = draw(rng, 1, 5), w = draw(rng, 1, 5);
         std::vector<std::size_t> index(r * w);
         for (auto& k : index) k = draw(rng, 0, c - 1);
         return with_params({{"a", random_matrix(r, c, rng)}},
                            [index, w](Graph& g, const std::vector<Var>& p) {
                              return g.gather_cols(p[0], index, w);
                            },
                            r, w, rng);
       }},
      {"pick",
       [](Rng& rng) {
         const std::size_t r = draw(rng, 1, 5), c = draw(rng, 1, 5);
         std::vector<std::size_t> cols(r);
         for (auto& k : cols) k = draw(rng, 0, c - 1);
         return with_params({{"a", random_matrix(r, c, rng)}},
                            [cols](Graph& g, const std::vector<Var>& p) { return g.pick(p[0], cols); },
                            r, 1, rng);
       }},
      {"softmax",
       [](Rng& rng) {
         const int axis = static_cast<int>(draw(rng, 0, 1));
         return elementwise(rng, -2, 2, [axis](Graph& g, Var a) { return g.softmax(a, axis); });
       }},
      {"log_softmax",
       [](Rng& rng) {
         const int axis = static_cast<int>(draw(rng, 0, 1));
         return elementwise(rng, -2, 2, [axis](Graph& g, Var a) { return g.log_softmax(a, axis); });
       }},
      {"logsumexp",
       [](Rng& rng) {
         const int axis = static_cast<int>(draw(rng, 0, 1));
         const std::size_t r = draw(rng, 1, 4), c = draw(rng, 1, 4);
         return with_params({{"a", random_matrix(r, c, rng, -2, 2)}},
                            [axis](Graph& g, const std::vector<Var>& p) {
                              return g.logsumexp(p[0], axis);
                            },
                            axis == 1 ? r : 1, axis == 1 ? 1 : c, rng);
       }},
      {"sum",
       [](Rng& rng) {
         const std::size_t r = draw(rng, 1, 4), c = draw(rng, 1, 4);
         return with_params({{"a", random_matrix(r, c, rng)}},
                            [](Graph& g, const std::vector<Var>& p) { return g.sum(p[0]); }, 1, 1,
                            rng);
       }},
      {"softplus", [](Rng& rng) { return elementwise(rng, -3, 3, [](Graph& g, Var a) { return g.softplus(a); }); }},
      {"tanh", [](Rng& rng) { return elementwise(rng, -2, 2, [](Graph& g, Var a) { return g.tanh(a); }); }},
      {"sigmoid", [](Rng& rng) { return elementwise(rng, -3, 3, [](Graph& g, Var a) { return g.sigmoid(a); }); }},
      {"exp", [](Rng& rng) { return elementwise(rng, -2, 2, [](Graph& g, Var a) { return g.exp(a); }); }},
      {"log", [](Rng& rng) { return elementwise(rng, 0.2, 3, [](Graph& g, Var a) { return g.log(a); }); }},
      {"abs",
       [](Rng& rng) {
         // Kept away from the kink at zero.
         GradCase c = elementwise(rng, 0.2, 2, [](Graph& g, Var a) { return g.abs(a); });
         std::bernoulli_distribution flip(0.5);
         for (auto& v : c.params->value(0).storage())
           if (flip(rng)) v = -v;
         return c;
       }},
      {"gaussian_sample",
       [](Rng& rng) {
         const std::size_t r = draw(rng, 1, 4), c = draw(rng, 1, 4);
         const Tensor eps = random_matrix(r, c, rng, -2, 2);
         return with_params({{"u", random_matrix(r, c, rng)}, {"s", random_matrix(r, c, rng, 0.1, 2)}},
                            [eps](Graph& g, const std::vector<Var>& p) {
                              return g.gaussian_sample(p[0], p[1], eps);
                            },
                            r, c, rng);
       }},
      {"custom",
       [](Rng& rng) {
         // x -> x^3 written as a custom op.
         return elementwise(rng, -1.5, 1.5, [](Graph& g, Var a) {
           Tensor x = g.value(a);
           Tensor y = x;
           for (auto& v : y.storage()) v = v * v * v;
           return g.custom({a}, std::move(y), [x](const Tensor& gy, std::vector<Tensor>& grads) {
             for (std::size_t k = 0; k < x.size(); ++k) grads[0][k] += 3.0 * x[k] * x[k] * gy[k];
           });
         });
       }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& op_case_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, builder] : builders()) out.push_back(name);
    return out;
  }();
  return names;
}

GradCase make_op_case(const std::string& name, Rng& rng) { return builders().at(name)(rng); }

GradCase make_lstm_cell_case(Rng& rng) {
  auto params = std::make_shared<ParameterSet>();
  const std::size_t in = draw(rng, 1, 4), hidden = draw(rng, 1, 4);
  LstmParams lstm = add_lstm(*params, "lstm", in, hidden, rng);
  const ParamId x = params->add("x", random_matrix(1, in, rng));
  const ParamId h0 = params->add("h0", random_matrix(1, hidden, rng));
  const ParamId c0 = params->add("c0", random_matrix(1, hidden, rng));
  const Tensor wh = random_matrix(1, hidden, rng), wc = random_matrix(1, hidden, rng);
  GradCase c;
  c.owner = params;
  c.params = params.get();
  c.loss = [=](Graph& g) {
    LstmState next = lstm_cell(g, lstm, g.param(x), {g.param(h0), g.param(c0)});
    return g.add(weighted_sum(g, next.h, wh), weighted_sum(g, next.c, wc));
  };
  return c;
}

GradCase make_encoder_case(Rng& rng) {
  auto params = std::make_shared<ParameterSet>();
  EncoderConfig cfg;
  cfg.embed_dim = draw(rng, 2, 4);
  cfg.hidden_dim = draw(rng, 2, 3);
  cfg.latent_dim = draw(rng, 2, 3);
  cfg.layers = 2;
  const std::size_t vocab = draw(rng, 3, 6), length = draw(rng, 1, 4);
  Encoder enc = add_encoder(*params, "enc", vocab, cfg, rng);
  std::vector<TokenId> ids(length);
  for (auto& id : ids) id = static_cast<TokenId>(draw(rng, 1, vocab - 1));
  const Sentence sentence = make_word_sentence(ids);
  const Tensor noise = random_matrix(length + 1, cfg.latent_dim, rng, -1, 1);
  const Tensor wu = random_matrix(length + 1, cfg.latent_dim, rng);
  const Tensor ws = random_matrix(length + 1, cfg.latent_dim, rng);
  const Tensor wy = random_matrix(length + 1, cfg.latent_dim, rng);
  GradCase c;
  c.owner = params;
  c.params = params.get();
  c.loss = [=](Graph& g) {
    LatentBatch lat = encode(g, enc, sentence, noise);
    return g.add(g.add(weighted_sum(g, lat.mean, wu), weighted_sum(g, lat.scale, ws)),
                 weighted_sum(g, lat.sample, wy));
  };
  c.per_param = 6;
  return c;
}

GradCase make_full_objective_case(Rng& rng) {
  VaeConfig cfg;
  cfg.encoder.embed_dim = 3;
  cfg.encoder.hidden_dim = 2;
  cfg.encoder.latent_dim = 3;
  cfg.encoder.layers = 2;
  cfg.family = std::bernoulli_distribution(0.5)(rng) ? AlignFamily::kHmm : AlignFamily::kIbm1;
  cfg.joint = true;
  cfg.share_decoders = true;
  const std::size_t vs = 5, vt = 6;
  auto model = std::make_shared<VaeAligner>(cfg, vs, vt, rng);
  // Larger decoder weights make the posteriors peaked enough that the
  // agreement terms are far from their kinks.
  for (ParamId p = 0; p < model->params().size(); ++p) {
    for (auto& v : model->params().value(p).storage()) v *= 2.0;
  }
  std::vector<SentencePair> batch;
  std::vector<std::pair<Tensor, Tensor>> noise;
  for (int k = 0; k < 2; ++k) {
    std::vector<TokenId> f(draw(rng, 1, 3)), e(draw(rng, 1, 3));
    for (auto& id : f) id = static_cast<TokenId>(draw(rng, 2, vs - 1));
    for (auto& id : e) id = static_cast<TokenId>(draw(rng, 2, vt - 1));
    batch.push_back({make_word_sentence(f), make_word_sentence(e)});
    noise.emplace_back(random_matrix(e.size() + 1, 3, rng), random_matrix(f.size() + 1, 3, rng));
  }
  ObjectiveWeights w;
  w.reconstruction = 1.0;
  w.alignment = 2.0;
  w.kl = 0.5;
  w.agreement = 1.0;
  GradCase c;
  c.owner = model;
  c.params = &model->params();
  c.loss = [model, batch, noise, w](Graph& g) {
    Var total;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      JointObjective jo = joint_objective(g, *model, batch[k], noise[k].first, noise[k].second, w,
                                          /*agreement=*/true);
      total = k == 0 ? jo.total : g.add(total, jo.total);
    }
    return total;
  };
  c.per_param = 4;
  return c;
}

GradCheck run_case(GradCase& c, Rng& rng) {
  return check_gradients(*c.params, c.loss, rng, c.per_param);
}

}  // namespace vaealign::testing
