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

#ifndef ACTMAP_FEASIBILITY_POLICY_HPP_
#define ACTMAP_FEASIBILITY_POLICY_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actmap/autodiff.hpp"
#include "actmap/environments.hpp"
#include "actmap/feasibility.hpp"
#include "actmap/networks.hpp"

namespace actmap {

struct FeasTrainConfig {
  std::size_t samples = 1024;         // N, generated actions per state
  std::size_t states_per_batch = 16;  // K
  double sigma = 0.1;
  double sigma_prime_factor = 2.0;
  std::size_t steps = 500000;
  double learning_rate = 1e-4;
  std::size_t eval_interval = 10000;  // 0 evaluates only at the end
  std::size_t eval_states = 16;
  std::size_t eval_samples = 1024;
  std::vector<std::size_t> set_hidden{32, 32};
  std::vector<std::size_t> trunk_hidden{64, 64};
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

struct FeasEvalReport {
  std::size_t states = 0;
  std::size_t samples_per_state = 0;
  double precision = 0.0;
  /// Mean pairwise distance among feasible actions; empty when no state had
  /// at least two feasible actions.
  std::optional<double> coverage;
  /// Two-disk environment only: per state, the share of all generated
  /// actions that landed in each disk.
  std::vector<std::array<double, 2>> mode_share;

  /// Smallest per-state share of the less-visited disk (toy only, else 0).
  double min_mode_share() const;
  /// Median over states of the less-visited disk's share (toy only, else 0).
  double median_mode_share() const;
};

/// Generator pi_f: maps latents in [-1, 1]^d to actions for a partial state.
class FeasibilityPolicy {
 public:
  FeasibilityPolicy(EnvKind kind, EnvConfig config, SetNet net, NetworkParams params);

  static NetworkSpec network_spec(EnvKind kind, std::vector<std::size_t> set_hidden,
                                  std::vector<std::size_t> trunk_hidden);

  EnvKind kind() const { return kind_; }
  std::size_t action_dim() const { return box_.dim(); }
  const ActionBox& box() const { return box_; }
  const SetNet& net() const { return net_; }
  const NetworkParams& params() const { return params_; }
  NetworkParams& params() { return params_; }
  const EnvConfig& config() const { return config_; }

  /// Latents (one per row) to actions in unit coordinates.
  Matrix map_unit(const Observation& partial_obs, const Matrix& latents) const;
  /// Latents (one per row) to actions in environment units.
  Matrix map(const PartialState& s, const Matrix& latents) const;
  Vector map_latent(const PartialState& s, std::span<const double> latent) const;

  void save(const std::string& path) const;
  /// Rebuilds the layout from the checkpoint shapes.
  static FeasibilityPolicy load(const std::string& path, EnvKind kind, const EnvConfig& config);

 private:
  EnvKind kind_;
  EnvConfig config_;
  ActionBox box_;
  SetNet net_;
  NetworkParams params_;
};

FeasibilityPolicy make_feasibility_policy(EnvKind kind, const EnvConfig& config,
                                          const FeasTrainConfig& train, Rng& rng);

struct FeasHistoryRow {
  std::size_t step = 0;
  FeasEvalReport report;
  std::size_t dropped = 0;         // cumulative non-finite gradient terms
  std::size_t skipped_states = 0;  // cumulative states without feasible samples
};

struct PretrainResult {
  FeasibilityPolicy policy;
  std::vector<FeasHistoryRow> history;
};

using StateGenerator = std::function<PartialState(std::uint64_t seed)>;
using PretrainCallback = std::function<void(const FeasHistoryRow&, const FeasibilityPolicy&)>;

/// Divergence-minimizing pretraining. `on_eval` runs after every evaluation
/// on a copy of the parameters, e.g. to write checkpoints.
PretrainResult pretrain(const FeasTrainConfig& config, EnvKind kind, const EnvConfig& env,
                        const FeasibilityModel& model, const StateGenerator& states,
                        const PretrainCallback& on_eval = {});

/// Same as above, continuing from an existing policy.
PretrainResult pretrain(const FeasTrainConfig& config, FeasibilityPolicy initial,
                        const FeasibilityModel& model, const StateGenerator& states,
                        const PretrainCallback& on_eval = {});

FeasEvalReport evaluate(const FeasibilityPolicy& policy, std::span<const PartialState> states,
                        std::size_t samples, const FeasibilityModel& model, std::uint64_t seed);

/// Same report for an arbitrary action generator (used for baselines).
using ActionSampler = std::function<Matrix(const PartialState&, std::size_t samples, Rng& rng)>;
FeasEvalReport evaluate_sampler(const ActionSampler& sampler, std::span<const PartialState> states,
                                std::size_t samples, const FeasibilityModel& model,
                                std::uint64_t seed);

/// Columns: step,precision,coverage,dropped,skipped_states,min_mode_share
void write_feas_eval_header(std::ostream& out);
void write_feas_eval_row(std::ostream& out, const FeasHistoryRow& row);

}  // namespace actmap

#endif  // ACTMAP_FEASIBILITY_POLICY_HPP_
