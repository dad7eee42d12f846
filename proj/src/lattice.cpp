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

#include "vaealign/lattice.hpp"

#include <cmath>
#include <limits>

#include "vaealign/errors.hpp"

namespace vaealign {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

void check_lattice(const Lattice& lat) {
  const std::size_t s = lat.states();
  if (lat.length() == 0 || s == 0) throw ShapeError("lattice: empty emission matrix");
  if (lat.log_initial.size() != s) {
    throw ShapeError("lattice: initial vector " + shape_string(lat.log_initial.shape()) +
                     " does not match " + std::to_string(s) + " states");
  }
  if (lat.log_transition.rows() != s || lat.log_transition.cols() != s) {
    throw ShapeError("lattice: transition matrix " + shape_string(lat.log_transition.shape()) +
                     " does not match " + std::to_string(s) + " states");
  }
}

}  // namespace

Lattice uniform_lattice(Tensor log_emission) {
  const std::size_t s = log_emission.cols();
  const double lp = -std::log(static_cast<double>(s));
  return Lattice{std::move(log_emission), Tensor::matrix(1, s, lp), Tensor::matrix(s, s, lp)};
}

ForwardBackward forward_backward(const Lattice& lat) {
  check_lattice(lat);
  const std::size_t n = lat.length(), s = lat.states();
  const Tensor& em = lat.log_emission;
  const Tensor& tr = lat.log_transition;
  ForwardBackward fb{Tensor::matrix(n, s), Tensor::matrix(n, s), 0.0};
  for (std::size_t i = 0; i < s; ++i) fb.alpha(0, i) = lat.log_initial[i] + em(0, i);
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < s; ++i) {
      double acc = kNegInf;
      for (std::size_t k = 0; k < s; ++k) acc = log_add(acc, fb.alpha(j - 1, k) + tr(k, i));
      fb.alpha(j, i) = acc + em(j, i);
    }
  }
  for (std::size_t j = n - 1; j-- > 0;) {
    for (std::size_t k = 0; k < s; ++k) {
      double acc = kNegInf;
      for (std::size_t i = 0; i < s; ++i)
        acc = log_add(acc, tr(k, i) + em(j + 1, i) + fb.beta(j + 1, i));
      fb.beta(j, k) = acc;
    }
  }
  double total = kNegInf;
  for (std::size_t i = 0; i < s; ++i) total = log_add(total, fb.alpha(n - 1, i));
  fb.log_likelihood = total;
  return fb;
}

double lattice_forward(const Lattice& lat) { return forward_backward(lat).log_likelihood; }

double lattice_backward_log_likelihood(const Lattice& lat) {
  const ForwardBackward fb = forward_backward(lat);
  double total = kNegInf;
  for (std::size_t i = 0; i < lat.states(); ++i)
    total = log_add(total, lat.log_initial[i] + lat.log_emission(0, i) + fb.beta(0, i));
  return total;
}

Tensor lattice_posteriors(const Lattice& lat) { return lattice_posteriors(lat, forward_backward(lat)); }

Tensor lattice_posteriors(const Lattice& lat, const ForwardBackward& fb) {
  const std::size_t n = lat.length(), s = lat.states();
  Tensor gamma = Tensor::matrix(n, s);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < s; ++i)
      gamma(j, i) = std::exp(fb.alpha(j, i) + fb.beta(j, i) - fb.log_likelihood);
  return gamma;
}

Tensor lattice_transition_posteriors(const Lattice& lat, const ForwardBackward& fb) {
  const std::size_t n = lat.length(), s = lat.states();
  Tensor xi = Tensor::matrix(s, s);
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t k = 0; k < s; ++k) {
      const double a = fb.alpha(j - 1, k);
      if (a == kNegInf) continue;
      for (std::size_t i = 0; i < s; ++i) {
        xi(k, i) += std::exp(a + lat.log_transition(k, i) + lat.log_emission(j, i) +
                             fb.beta(j, i) - fb.log_likelihood);
      }
    }
  return xi;
}

std::vector<std::size_t> lattice_viterbi(const Lattice& lat) {
  check_lattice(lat);
  const std::size_t n = lat.length(), s = lat.states();
  Tensor score = Tensor::matrix(n, s);
  std::vector<std::size_t> back(n * s, 0);
  for (std::size_t i = 0; i < s; ++i) score(0, i) = lat.log_initial[i] + lat.log_emission(0, i);
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < s; ++i) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t k = 0; k < s; ++k) {
        const double cand = score(j - 1, k) + lat.log_transition(k, i);
        if (cand > best) {
          best = cand;
          arg = k;
        }
      }
      score(j, i) = best + lat.log_emission(j, i);
      back[j * s + i] = arg;
    }
  }
  std::vector<std::size_t> path(n, 0);
  double best = kNegInf;
  for (std::size_t i = 0; i < s; ++i) {
    if (score(n - 1, i) > best) {
      best = score(n - 1, i);
      path[n - 1] = i;
    }
  }
  for (std::size_t j = n - 1; j > 0; --j) path[j - 1] = back[j * s + path[j]];
  return path;
}

double lattice_path_score(const Lattice& lat, const std::vector<std::size_t>& path) {
  check_lattice(lat);
  if (path.size() != lat.length()) throw ShapeError("lattice_path_score: path length mismatch");
  double score = lat.log_initial[path[0]] + lat.log_emission(0, path[0]);
  for (std::size_t j = 1; j < path.size(); ++j)
    score += lat.log_transition(path[j - 1], path[j]) + lat.log_emission(j, path[j]);
  return score;
}

}  // namespace vaealign
