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

#include "actmap/density.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "actmap/error.hpp"

namespace actmap {
namespace {

double log_normalizer(double sigma, Eigen::Index dim) {
  return -0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * sigma * sigma);
}

void check_kde_args(const Matrix& support, double sigma) {
  if (!(sigma > 0.0)) throw UsageError("KDE bandwidth must be positive");
  if (support.rows() < 1) throw UsageError("KDE support is empty");
}

}  // namespace

Vector log_kde_from_sqdist(const Matrix& sqdist, double sigma, Eigen::Index dim) {
  const double offset =
      log_normalizer(sigma, dim) - std::log(static_cast<double>(sqdist.cols()));
  return row_logsumexp(sqdist * (-1.0 / (2.0 * sigma * sigma))).array() + offset;
}

Vector log_kde_batch(const Matrix& support, const Matrix& queries, double sigma) {
  check_kde_args(support, sigma);
  if (queries.cols() != support.cols()) throw UsageError("KDE query dimension mismatch");
  return log_kde_from_sqdist(pairwise_sqdist(queries, support), sigma, support.cols());
}

double kde_eval(const Matrix& support, std::span<const double> query, double sigma) {
  check_kde_args(support, sigma);
  if (query.size() != static_cast<std::size_t>(support.cols())) {
    throw UsageError("KDE query dimension mismatch");
  }
  const Matrix q = Eigen::Map<const Eigen::RowVectorXd>(query.data(), support.cols());
  return std::exp(log_kde_batch(support, q, sigma)[0]);
}

Matrix sample_proposal(const Matrix& actions, double sigma, double sigma_prime, Rng& rng) {
  if (!(sigma_prime > 0.0)) throw UsageError("proposal bandwidth must be positive");
  if (sigma_prime < sigma) throw UsageError("proposal bandwidth must be >= the KDE bandwidth");
  std::normal_distribution<double> noise(0.0, sigma_prime);
  Matrix out = actions;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index k = 0; k < out.cols(); ++k) out(i, k) += noise(rng);
  }
  return out;
}

SampleBatch make_sample_batch(const Matrix& actions, double sigma, double sigma_prime, Rng& rng,
                              std::size_t state_id) {
  SampleBatch b;
  b.state_id = state_id;
  b.sigma = sigma;
  b.sigma_prime = sigma_prime;
  b.actions = actions;
  b.noisy = sample_proposal(actions, sigma, sigma_prime, rng);
  check_kde_args(actions, sigma);
  const Matrix d2 = pairwise_sqdist(b.noisy, actions);
  b.q = log_kde_from_sqdist(d2, sigma, actions.cols()).array().exp();
  b.q_prime = log_kde_from_sqdist(d2, sigma_prime, actions.cols()).array().exp();
  b.feasible.assign(static_cast<std::size_t>(actions.rows()), 0);
  return b;
}

double estimate_partition(SampleBatch& b) {
  const auto n = static_cast<Eigen::Index>(b.feasible.size());
  if (n == 0 || b.q_prime.size() != n) throw UsageError("sample batch sizes disagree");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(b.q_prime[j] > 0.0)) throw UsageError("proposal density must be positive");
    if (b.feasible[static_cast<std::size_t>(j)]) sum += 1.0 / b.q_prime[j];
  }
  b.partition = sum / static_cast<double>(n);
  b.flagged = !(b.partition > 0.0) || !std::isfinite(b.partition);
  b.target = Vector::Zero(n);
  if (!b.flagged) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (b.feasible[static_cast<std::size_t>(j)]) b.target[j] = 1.0 / b.partition;
    }
  }
  return b.partition;
}

JsWeights js_weights(const SampleBatch& b) {
  const Eigen::Index n = b.q.size();
  if (b.q_prime.size() != n || b.target.size() != n) throw UsageError("sample batch sizes disagree");
  JsWeights out;
  out.w = Vector::Zero(n);
  const double half_n = 0.5 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double q = b.q[j];
    const double w = half_n * (q / b.q_prime[j]) * std::log(2.0 * q / (b.target[j] + q));
    if (std::isfinite(w)) {
      out.w[j] = w;
    } else {
      ++out.dropped;
    }
  }
  return out;
}

Var log_kde_on_tape(Tape& tape, Var support, const Matrix& queries, double sigma) {
  if (!(sigma > 0.0)) throw UsageError("KDE bandwidth must be positive");
  const Eigen::Index n = support.rows();
  const double offset =
      log_normalizer(sigma, support.cols()) - std::log(static_cast<double>(n));
  const Var d2 = tape.pairwise_sqdist(tape.constant(queries), support);
  return tape.row_logsumexp(d2 * (-1.0 / (2.0 * sigma * sigma))) + offset;
}

JsGradient js_gradient(Tape& tape, Tape::Binding binding, Var support, const SampleBatch& b) {
  if (b.flagged) throw UsageError("divergence gradient requested for a flagged state");
  const JsWeights w = js_weights(b);
  const Var logq = log_kde_on_tape(tape, support, b.noisy, b.sigma);
  const Var loss = tape.dot(logq, w.w);
  return {tape.gradient(loss, binding), w.dropped};
}

}  // namespace actmap
