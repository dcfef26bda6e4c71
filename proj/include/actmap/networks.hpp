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

#ifndef ACTMAP_NETWORKS_HPP_
#define ACTMAP_NETWORKS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "actmap/autodiff.hpp"
#include "actmap/environments.hpp"

namespace actmap {

/// Observations of a mini-batch in network layout: ego rows stacked, and the
/// rows of every variable-length set stacked with the index of their owner.
struct ObsBatch {
  Matrix ego;
  std::vector<Matrix> set_rows;
  std::vector<std::vector<std::size_t>> set_owner;

  std::size_t size() const { return static_cast<std::size_t>(ego.rows()); }

  static ObsBatch gather(std::span<const Observation* const> observations);
  static ObsBatch single(const Observation& observation);
};

struct NetworkSpec {
  ObservationSpec obs;
  std::size_t extra_dim = 0;  // latent or action appended to the trunk input
  std::size_t output_dim = 1;
  std::vector<std::size_t> set_hidden{32, 32};
  std::vector<std::size_t> trunk_hidden{64, 64};
  Activation hidden = Activation::tanh;
  Activation output = Activation::identity;
  /// When nonzero, output = activation(trunk + extra_skip * extra); needs
  /// output_dim == extra_dim.
  double extra_skip = 0.0;
  /// Multiplies the initial output-layer weights.
  double output_init_scale = 1.0;
};

/// Permutation-invariant network: each set is encoded row-wise and
/// sum-pooled, the pooled features are concatenated with the ego features
/// and the extra input, and a dense trunk produces the output.
class SetNet {
 public:
  SetNet() = default;
  explicit SetNet(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  std::vector<LayerShape> shapes() const;
  NetworkParams init(Rng& rng) const;

  /// Rows of `extra` pair with observations; a single observation is
  /// broadcast over all rows of `extra`.
  Matrix forward(const NetworkParams& params, const ObsBatch& obs, const Matrix& extra) const;
  Matrix forward(const NetworkParams& params, const ObsBatch& obs) const;

  Var forward(Tape& tape, Tape::Binding binding, const ObsBatch& obs, Var extra) const;
  Var forward(Tape& tape, Tape::Binding binding, const ObsBatch& obs) const;

 private:
  Matrix embed(const NetworkParams& params, const ObsBatch& obs) const;
  Var embed(Tape& tape, Tape::Binding binding, const ObsBatch& obs) const;
  void check(const NetworkParams& params, const ObsBatch& obs) const;

  NetworkSpec spec_;
  std::size_t trunk_first_ = 0;
};

}  // namespace actmap

#endif  // ACTMAP_NETWORKS_HPP_
