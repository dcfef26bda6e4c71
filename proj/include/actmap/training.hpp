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

#ifndef ACTMAP_TRAINING_HPP_
#define ACTMAP_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "actmap/agents.hpp"
#include "actmap/environments.hpp"
#include "actmap/feasibility.hpp"
#include "actmap/feasibility_policy.hpp"

namespace actmap {

/// How the agent's decision z becomes an environment action.
enum class Wrapper { none, action_mapping, replacement, resampling, projection };

std::string_view to_string(Wrapper w);

struct ProjectionConfig {
  double step = 0.05;         // longest step, in unit action coordinates
  std::size_t iterations = 50;
  double overshoot = 5e-4;    // added to the linearized distance G / |grad G|
  double fd_step = 1e-6;      // central-difference step for grad G
};

struct ProjectionResult {
  Vector u;
  std::size_t iterations = 0;
  bool converged = false;  // g holds at the returned point
};

/// Normalized gradient descent on a violation measure, stopping as soon as
/// `feasible` holds. Each step has length min(step, G / |grad G| + overshoot);
/// when no iterate is feasible the last one is returned unconverged.
/// `clamp` keeps iterates inside [-1, 1]^d when set.
ProjectionResult project(const std::function<double(const Vector&)>& G,
                         const std::function<bool(const Vector&)>& feasible, Vector u,
                         const ProjectionConfig& config, bool clamp = true);

struct Decision {
  Vector action;                 // environment units
  std::size_t network_forwards = 0;
  bool intervened = false;       // replacement applied, resample or projection needed
  bool projection_failed = false;
  bool resample_exhausted = false;
  std::size_t attempts = 1;
};

/// Turns agent decisions into actions according to the wrapper.
class DecisionPipeline {
 public:
  DecisionPipeline(Wrapper wrapper, const Agent& agent, const FeasibilityPolicy* mapping,
                   const FeasibilityModel* model, ProjectionConfig projection = {},
                   std::size_t resample_budget = 100);

  Wrapper wrapper() const { return wrapper_; }

  /// Samples from the agent, fills rec (z, log_prob, values) and returns the
  /// action to execute.
  Decision decide(const Environment& env, const Observation& obs, Rng& rng, Record& rec) const;

 private:
  Wrapper wrapper_;
  const Agent& agent_;
  const FeasibilityPolicy* mapping_;
  const FeasibilityModel* model_;
  ProjectionConfig projection_;
  std::size_t resample_budget_;
};

struct TrainConfig {
  EnvKind env = EnvKind::toy;
  EnvConfig env_config;
  Algorithm algorithm = Algorithm::sac;
  Wrapper wrapper = Wrapper::none;
  bool lagrangian = false;
  AgentConfig agent;
  std::size_t total_steps = 100000;
  std::size_t num_envs = 50;
  std::size_t progress_interval = 1000;
  std::size_t eval_episodes = 100;
  std::uint64_t seed = 0;
  ProjectionConfig projection;
  FeasibilityOptions projection_model;  // conservative margins for projection
  std::size_t resample_budget = 100;
  std::size_t workers = 1;

  void validate() const;
};

struct EpisodeRow {
  std::size_t step = 0;  // environment steps when the episode ended
  std::size_t lane = 0;
  std::size_t episode = 0;
  double episode_return = 0.0;
  std::size_t length = 0;
  bool violation = false;
  Constraint constraint = Constraint::none;
  std::size_t targets = 0;
  double max_joint_cost = 0.0;
  std::size_t interventions = 0;
};

struct ProgressRow {
  std::size_t step = 0;
  std::size_t episodes = 0;            // finished in this interval
  double mean_return = 0.0;            // over those episodes (NaN if none)
  double violation_rate = 0.0;         // violating transitions / transitions
  std::size_t updates = 0;             // cumulative gradient updates
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double safety_loss = 0.0;
  double multiplier = 0.0;
  std::size_t buffer_size = 0;
  std::size_t skipped_samples = 0;     // cumulative PPO ratio overflows
  std::size_t projection_failures = 0; // cumulative
  std::size_t resample_exhausted = 0;  // cumulative
};

struct EvalSummary {
  std::size_t episodes = 0;
  std::size_t transitions = 0;
  double mean_return = 0.0;
  double violation_rate = 0.0;          // violating transitions / transitions
  double episode_violation_rate = 0.0;  // episodes ending in a violation
  double mean_length = 0.0;
};

struct TrainSinks {
  std::function<void(const EpisodeRow&)> on_episode;
  std::function<void(const ProgressRow&)> on_progress;
  std::function<void(std::size_t step, const Agent&)> on_checkpoint;
};

struct TrainResult {
  std::unique_ptr<Agent> agent;
  std::vector<EpisodeRow> episodes;
  std::vector<ProgressRow> progress;
  EvalSummary evaluation;
};

/// `mapping` is required for action mapping and ignored otherwise. `resume`
/// continues from saved networks at `start_step` with fresh buffers.
TrainResult train(const TrainConfig& config, const FeasibilityPolicy* mapping,
                  const TrainSinks& sinks = {}, std::unique_ptr<Agent> resume = nullptr,
                  std::size_t start_step = 0);

EvalSummary evaluate_agent(const Agent& agent, const TrainConfig& config,
                           const FeasibilityPolicy* mapping, std::size_t episodes,
                           std::uint64_t seed);

ActorSetup actor_setup(EnvKind env, const EnvConfig& config);

void write_episode_header(std::ostream& out);
void write_episode_row(std::ostream& out, const EpisodeRow& row);
void write_progress_header(std::ostream& out);
void write_progress_row(std::ostream& out, const ProgressRow& row);

}  // namespace actmap

#endif  // ACTMAP_TRAINING_HPP_
