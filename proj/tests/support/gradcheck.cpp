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

#include "support/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace vaealign::testing {

GradCheck check_gradients(ParameterSet& params, const std::function<Var(Graph&)>& loss,
                          Rng& rng, std::size_t per_param, double h) {
  Gradients analytic;
  double base = 0.0;
  {
    Graph g(params);
    Var l = loss(g);
    base = g.value(l).item();
    g.backward(l);
    analytic = g.param_gradients();
  }
  auto evaluate = [&]() {
    Graph g(params);
    return g.value(loss(g)).item();
  };
  const double floor = 1e-6 * std::max(1.0, std::fabs(base));
  GradCheck out;
  for (ParamId p = 0; p < params.size(); ++p) {
    Tensor& value = params.value(p);
    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(per_param);
    }
    for (std::size_t k : coords) {
      const double saved = value[k];
      value[k] = saved + h;
      const double up = evaluate();
      value[k] = saved - h;
      const double down = evaluate();
      value[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][k];
      const double err =
          std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
      ++out.checked;
      if (err > out.max_error || !std::isfinite(err)) {
        out.max_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        std::ostringstream why;
        why << params.name(p) << '[' << k << "]: analytic " << a << " vs numeric " << numeric;
        out.worst = why.str();
      }
    }
  }
  return out;
}

}  // namespace vaealign::testing
