/*
 * Copyright 2026 The actmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// One-dimensional divergence setup on a quadrature grid, where the sampled
// gradient estimator becomes an exact Riemann sum.

#ifndef ACTMAP_TESTS_JS_GRID_HPP_
#define ACTMAP_TESTS_JS_GRID_HPP_

#include <cstdint>
#include <vector>

#include "actmap/density.hpp"
#include "oracles.hpp"

namespace js_grid {

using namespace actmap;

inline bool in_feasible_set(double a) { return (a >= -0.9 && a <= -0.4) || (a >= 0.3 && a <= 0.8); }

// 1-D support generated by a small network from fixed inputs.
struct Generator {
  NetworkParams params;
  Matrix inputs;

  Matrix support(const NetworkParams& p) const { return forward_batch(p, inputs); }
};

inline Generator make_generator(std::uint64_t seed) {
  Rng rng(seed);
  Generator g;
  g.params = NetworkParams::glorot({{4, 1, Activation::tanh}, {1, 4, Activation::identity}}, rng);
  g.inputs = Matrix(24, 1);
  for (Eigen::Index i = 0; i < g.inputs.rows(); ++i) g.inputs(i, 0) = -1.0 + 2.0 * i / 23.0;
  return g;
}

constexpr double kGridLo = -3.0;
constexpr double kGridHi = 3.0;
constexpr Eigen::Index kGridPoints = 2001;

inline Matrix grid() {
  Matrix g(kGridPoints, 1);
  for (Eigen::Index j = 0; j < kGridPoints; ++j) {
    g(j, 0) = kGridLo + (kGridHi - kGridLo) * static_cast<double>(j) / kGridPoints;
  }
  return g;
}

// Grid batch: with q' = 1 / area the sample mean becomes a Riemann sum.
inline SampleBatch grid_batch(const Matrix& support, double sigma) {
  SampleBatch b;
  b.sigma = sigma;
  b.sigma_prime = sigma;
  b.actions = support;
  b.noisy = grid();
  b.q = log_kde_batch(support, b.noisy, sigma).array().exp();
  b.q_prime = Vector::Constant(kGridPoints, 1.0 / (kGridHi - kGridLo));
  b.feasible.resize(kGridPoints);
  for (Eigen::Index j = 0; j < kGridPoints; ++j) {
    b.feasible[static_cast<std::size_t>(j)] = in_feasible_set(b.noisy(j, 0)) ? 1 : 0;
  }
  estimate_partition(b);
  return b;
}

inline double grid_divergence(const Generator& g, const NetworkParams& p, double sigma) {
  const SampleBatch b = grid_batch(g.support(p), sigma);
  const double cell = (kGridHi - kGridLo) / kGridPoints;
  return oracle::grid_js(view(b.target), view(b.q), cell);
}

inline std::vector<double> estimator_gradient(const Generator& g, const SampleBatch& b) {
  Tape tape;
  const Tape::Binding bind = tape.bind(g.params);
  const Var support = tape.mlp(bind, 0, g.params.num_layers(), tape.constant(g.inputs));
  return js_gradient(tape, bind, support, b).gradient;
}

}  // namespace js_grid

#endif  // ACTMAP_TESTS_JS_GRID_HPP_
