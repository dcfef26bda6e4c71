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

#ifndef ACTMAP_CONFIG_HPP_
#define ACTMAP_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actmap/feasibility_policy.hpp"
#include "actmap/training.hpp"

namespace actmap {

/// A parsed algorithm id such as "am-sac", "lag-ppo" or "sac+projection".
struct AlgorithmId {
  Algorithm base = Algorithm::sac;
  Wrapper wrapper = Wrapper::none;
  bool lagrangian = false;

  std::string name() const;
};

AlgorithmId parse_algorithm_id(std::string_view id);

enum class Preset { desk, full };

std::string_view to_string(Preset p);
Preset preset_from_string(std::string_view name);

struct RunConfig {
  std::string name = "run";
  Preset preset = Preset::desk;
  EnvKind env = EnvKind::toy;
  AlgorithmId algorithm;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t total_steps = 100000;
  std::size_t num_envs = 50;
  std::size_t progress_interval = 1000;
  std::size_t checkpoint_interval = 10000;  // environment steps
  std::size_t eval_episodes = 100;
  std::size_t workers = 1;
  std::string output_dir = "runs";
  /// Pretrained generator to load instead of pretraining (action mapping).
  std::string feasibility_checkpoint;

  EnvConfig env_config;
  AgentConfig agent;
  FeasTrainConfig feasibility;
  ProjectionConfig projection;
  FeasibilityOptions projection_model;
  std::size_t resample_budget = 100;

  std::size_t timing_decisions = 10000;
  std::vector<std::size_t> sweep_points{4, 8, 16, 32, 64, 128};
  std::size_t sweep_pairs = 10000;
  std::size_t sweep_reference = 128;

  /// Throws ConfigError listing every offending "section.key".
  void validate() const;
  TrainConfig train_config(std::uint64_t seed) const;
};

/// Defaults for an environment, algorithm and scale before any overrides.
RunConfig preset_config(Preset preset, EnvKind env, const AlgorithmId& algorithm);

/// INI text with sections [run], [env], [agent], [feasibility], [wrappers],
/// [harness]. Unknown keys and malformed values are rejected.
RunConfig parse_config(std::string_view text);

/// "section.key" / value pairs applied on top of `text`, replacing any value
/// it sets for the same key.
using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;
RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides);
RunConfig load_config(const std::string& path);

/// Every field, resolved, in the same INI layout parse_config accepts.
std::string effective_config(const RunConfig& config);

}  // namespace actmap

#endif  // ACTMAP_CONFIG_HPP_
