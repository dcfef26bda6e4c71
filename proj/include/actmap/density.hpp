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

#ifndef ACTMAP_DENSITY_HPP_
#define ACTMAP_DENSITY_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "actmap/autodiff.hpp"

namespace actmap {

/// Isotropic Gaussian KDE over the rows of `support`, evaluated at `query`.
/// Throws UsageError for sigma <= 0 or an empty support.
double kde_eval(const Matrix& support, std::span<const double> query, double sigma);

/// log q(query_j) for every row of `queries`, computed with log-sum-exp.
Vector log_kde_batch(const Matrix& support, const Matrix& queries, double sigma);

/// Same, from precomputed squared distances (queries x support).
Vector log_kde_from_sqdist(const Matrix& sqdist, double sigma, Eigen::Index dim);

/// One noisy copy per support row: a*_j = a_j + eps_j, eps_j ~ N(0, sigma_prime^2 I).
/// Throws UsageError when sigma_prime <= 0 or sigma_prime < sigma.
Matrix sample_proposal(const Matrix& actions, double sigma, double sigma_prime, Rng& rng);

/// Everything the divergence gradient needs for one state.
struct SampleBatch {
  std::size_t state_id = 0;
  double sigma = 0.1;
  double sigma_prime = 0.2;
  Matrix actions;                      // support a_i, one per row
  Matrix noisy;                        // a*_j
  Vector q;                            // KDE at sigma, evaluated at a*_j
  Vector q_prime;                      // KDE at sigma', evaluated at a*_j
  std::vector<std::uint8_t> feasible;  // r_j
  double partition = 0.0;              // Z estimate
  Vector target;                       // p_j = r_j / Z
  bool flagged = false;                // Z == 0, no usable gradient

  std::size_t size() const { return static_cast<std::size_t>(actions.rows()); }
};

/// Draws the proposal and fills the KDE columns. Feasibility is filled by the
/// caller before estimate_partition().
SampleBatch make_sample_batch(const Matrix& actions, double sigma, double sigma_prime, Rng& rng,
                              std::size_t state_id = 0);

/// Sets partition, target and flagged; returns the partition estimate.
/// Throws UsageError if some q_prime is not positive or sizes disagree.
double estimate_partition(SampleBatch& batch);

/// Per-sample weights of the divergence gradient,
///   w_j = (1/2N) (q_j / q'_j) log(2 q_j / (p_j + q_j)),
/// so that the gradient is sum_j w_j d/dtheta log q(a*_j).
struct JsWeights {
  Vector w;
  std::size_t dropped = 0;  // non-finite terms replaced by zero
};

JsWeights js_weights(const SampleBatch& batch);

/// log KDE of the constant `queries` under a support that lives on the tape.
/// Returns a (queries x 1) node.
Var log_kde_on_tape(Tape& tape, Var support, const Matrix& queries, double sigma);

struct JsGradient {
  std::vector<double> gradient;
  std::size_t dropped = 0;
};

/// Divergence gradient with respect to the parameters behind `binding`;
/// `support` must be the tape node that produced batch.actions.
JsGradient js_gradient(Tape& tape, Tape::Binding binding, Var support, const SampleBatch& batch);

}  // namespace actmap

#endif  // ACTMAP_DENSITY_HPP_
