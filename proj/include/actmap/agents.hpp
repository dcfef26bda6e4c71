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

#ifndef ACTMAP_AGENTS_HPP_
#define ACTMAP_AGENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actmap/autodiff.hpp"
#include "actmap/environments.hpp"
#include "actmap/networks.hpp"

namespace actmap {

enum class Algorithm { sac, ppo };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);

struct AgentConfig {
  double gamma = 0.97;
  double actor_lr = 3e-5;
  double critic_lr = 1e-4;
  double entropy = 2e-4;           // alpha; 5e-3 in the PPO setup
  double tau = 0.005;
  std::size_t policy_delay = 2048;  // critic updates before the actor starts
  std::size_t batch = 128;
  std::size_t train_steps = 2;      // gradient steps ...
  std::size_t train_every = 50;     // ... per this many environment steps
  std::size_t replay_capacity = 1000000;
  std::size_t rollout_size = 10000;
  std::size_t epochs = 3;
  double gae_lambda = 0.9;
  double clip = 0.2;
  bool normalize_advantages = true;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  // Lagrangian extension.
  double cost_gamma = 0.9;
  double cost_threshold = 0.05;
  double safety_lr = 1e-4;
  double multiplier_lr = 0.01;
  double initial_multiplier = 0.0;
  std::vector<std::size_t> set_hidden{32, 32};
  std::vector<std::size_t> trunk_hidden{64, 64};

  static AgentConfig sac_defaults();
  static AgentConfig ppo_defaults();
  void validate() const;
};

// ---------------------------------------------------------------------------
// Squashed Gaussian policy head

struct GaussianHead {
  Vector mean;
  Vector log_std;  // clamped to [log_std_min, log_std_max]
};

struct SquashedSample {
  Vector x;  // pre-squash draw
  Vector z;  // tanh(x), in (-1, 1)^d
  double log_prob = 0.0;
};

inline constexpr double kSquashFloor = 1e-6;

/// log N(x | mean, std) - sum_k log(max(1 - z_k^2, floor)).
double squashed_log_prob(const GaussianHead& head, std::span<const double> x,
                         std::span<const double> z);
SquashedSample squashed_sample(const GaussianHead& head, Rng& rng);
/// Sample from fixed standard-normal noise: x = mean + std * noise.
SquashedSample squashed_from_noise(const GaussianHead& head, std::span<const double> noise);
/// Log-probability of a stored latent (x recovered with a clamped atanh).
double squashed_log_prob_of_latent(const GaussianHead& head, std::span<const double> z);

// ---------------------------------------------------------------------------
// Advantage estimation

struct GaeResult {
  Vector advantages;
  Vector returns;  // advantages + values
};

/// delta_t = r_t + gamma (1 - terminal_t) next_value_t - value_t,
/// A_t = delta_t + gamma lambda (1 - end_t) A_{t+1}.
/// `end` marks the last step of a trajectory segment (terminal, timeout or
/// cut-off); `terminal` additionally drops the bootstrap.
GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const double> next_values, std::span<const std::uint8_t> terminal,
              std::span<const std::uint8_t> end, double gamma, double lambda);

/// Single trajectory with one bootstrap value for the state after the last step.
GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda);

void normalize(Vector& v);

// ---------------------------------------------------------------------------
// Experience

/// One transition. `z` is the agent's decision variable: the latent for
/// action-mapping agents, otherwise the action in unit coordinates. Raw
/// environment actions are never stored.
struct Record {
  Observation obs;
  Vector z;
  double reward = 0.0;
  double cost = 0.0;  // 1 when the transition violated a constraint
  Observation next_obs;
  bool terminal = false;  // no bootstrap from next_obs
  bool end = false;       // terminal or time limit
  double log_prob = 0.0;
  double value = 0.0;
  double cost_value = 0.0;
  std::size_t lane = 0;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Record r);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Record& at(std::size_t i) const { return data_.at(i); }
  std::vector<const Record*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Record> data_;
};

class RolloutBuffer {
 public:
  explicit RolloutBuffer(std::size_t capacity);

  void push(Record r);
  bool full() const { return data_.size() >= capacity_; }
  std::size_t size() const { return data_.size(); }
  void clear() { data_.clear(); }
  const std::vector<Record>& records() const { return data_; }

 private:
  std::size_t capacity_;
  std::vector<Record> data_;
};

// ---------------------------------------------------------------------------
// Agents

struct ActorSetup {
  ObservationSpec obs;
  std::size_t dim = 0;  // decision dimension
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double safety_loss = 0.0;
  double multiplier = 0.0;
  bool actor_updated = false;
  std::size_t skipped = 0;  // PPO samples with overflowing ratios
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual Algorithm algorithm() const = 0;
  const AgentConfig& config() const { return config_; }
  std::size_t dim() const { return setup_.dim; }
  const ActorSetup& setup() const { return setup_; }
  bool lagrangian() const { return lagrangian_; }
  double multiplier() const { return multiplier_; }
  void set_multiplier(double m) { multiplier_ = m; }

  const SetNet& actor_net() const { return actor_net_; }
  const NetworkParams& actor() const { return actor_; }
  NetworkParams& actor() { return actor_; }

  GaussianHead head(const Observation& obs) const;
  std::vector<GaussianHead> heads(const ObsBatch& obs) const;

  /// Draws a decision and fills log_prob (and values for PPO).
  virtual SquashedSample act(const Observation& obs, Rng& rng, Record& rec) const = 0;
  /// Tanh of the mean: the deterministic decision.
  Vector act_mean(const Observation& obs) const;

  /// Named parameter sets, for checkpoints.
  virtual std::vector<std::pair<std::string, const NetworkParams*>> parameter_sets() const = 0;

 protected:
  Agent(ActorSetup setup, AgentConfig config, bool lagrangian, Rng& rng);

  /// mean and clamped log-std nodes of the actor output.
  std::pair<Var, Var> head_on_tape(Tape& tape, Tape::Binding actor, const ObsBatch& obs) const;

  ActorSetup setup_;
  AgentConfig config_;
  bool lagrangian_ = false;
  double multiplier_ = 0.0;
  SetNet actor_net_;
  NetworkParams actor_;
  AdamState actor_adam_;
};

struct SacBatch {
  ObsBatch obs;
  ObsBatch next_obs;
  Matrix z;
  Vector reward;
  Vector cost;
  Vector not_terminal;  // 1 - terminal

  static SacBatch from(std::span<const Record* const> records);
};

class SacAgent final : public Agent {
 public:
  SacAgent(ActorSetup setup, AgentConfig config, bool lagrangian, Rng& rng);

  Algorithm algorithm() const override { return Algorithm::sac; }
  SquashedSample act(const Observation& obs, Rng& rng, Record& rec) const override;
  std::vector<std::pair<std::string, const NetworkParams*>> parameter_sets() const override;

  const SetNet& critic_net() const { return critic_net_; }
  NetworkParams& q1() { return q1_; }
  NetworkParams& q2() { return q2_; }
  NetworkParams& q1_target() { return q1_target_; }
  NetworkParams& q2_target() { return q2_target_; }
  NetworkParams& safety() { return qc_; }
  NetworkParams& safety_target() { return qc_target_; }
  const NetworkParams& q1() const { return q1_; }
  const NetworkParams& q2() const { return q2_; }
  const NetworkParams& q1_target() const { return q1_target_; }
  const NetworkParams& q2_target() const { return q2_target_; }
  const NetworkParams& safety() const { return qc_; }
  const NetworkParams& safety_target() const { return qc_target_; }
  std::size_t critic_updates() const { return critic_updates_; }

  /// Q values of (obs, z) pairs under arbitrary critic parameters.
  Vector q_values(const NetworkParams& critic, const ObsBatch& obs, const Matrix& z) const;

  /// r + gamma (1 - terminal)(min target Q(s', z') - alpha log pi(z'|s')),
  /// with z' drawn from `next_noise`.
  Vector critic_targets(const SacBatch& b, const Matrix& next_noise) const;
  /// c + gamma_C (1 - terminal) Q_C target(s', z').
  Vector safety_targets(const SacBatch& b, const Matrix& next_noise) const;

  Var critic_loss(Tape& tape, Tape::Binding critic, const SacBatch& b, const Vector& targets) const;
  /// mean(alpha log pi - min(Q1, Q2)) + multiplier * mean(Q_C - threshold);
  /// the penalty is omitted when the multiplier is 0.
  Var actor_loss(Tape& tape, Tape::Binding actor, const ObsBatch& obs, const Matrix& noise,
                 double multiplier) const;

  /// One gradient step on every network; the actor only after the delay.
  UpdateStats update(const SacBatch& b, Rng& rng);

 private:
  SetNet critic_net_;
  NetworkParams q1_, q2_, q1_target_, q2_target_, qc_, qc_target_;
  AdamState q1_adam_, q2_adam_, qc_adam_;
  std::size_t critic_updates_ = 0;
};

struct PpoBatch {
  ObsBatch obs;
  Matrix z;
  Vector old_log_prob;
  Vector advantages;
  Vector cost_advantages;
  Vector returns;
  Vector cost_returns;
};

class PpoAgent final : public Agent {
 public:
  PpoAgent(ActorSetup setup, AgentConfig config, bool lagrangian, Rng& rng);

  Algorithm algorithm() const override { return Algorithm::ppo; }
  SquashedSample act(const Observation& obs, Rng& rng, Record& rec) const override;
  std::vector<std::pair<std::string, const NetworkParams*>> parameter_sets() const override;

  const SetNet& value_net() const { return value_net_; }
  NetworkParams& value() { return value_; }
  NetworkParams& cost_value() { return cost_value_; }
  const NetworkParams& value() const { return value_; }
  const NetworkParams& cost_value() const { return cost_value_; }

  Vector values(const NetworkParams& params, const ObsBatch& obs) const;

  /// -mean(min(ratio A', clip(ratio) A')) - alpha mean(entropy), with
  /// A' = A - multiplier A_C (plain A when the multiplier is 0). Samples with
  /// |log ratio| > 20 get zero weight and are counted in `skipped`.
  Var policy_loss(Tape& tape, Tape::Binding actor, const PpoBatch& b, double multiplier,
                  std::size_t* skipped = nullptr) const;
  Var value_loss(Tape& tape, Tape::Binding value, const ObsBatch& obs,
                 const Vector& returns) const;

  /// Advantages for a rollout whose records may interleave several lanes.
  void compute_advantages(const std::vector<Record>& records, Vector& adv, Vector& ret,
                          Vector& cost_adv, Vector& cost_ret) const;

  /// Full PPO update over the rollout; clears it afterwards.
  UpdateStats update(RolloutBuffer& rollout, Rng& rng);
  /// One gradient step on a prepared minibatch.
  UpdateStats update_minibatch(const PpoBatch& b);

 private:
  SetNet value_net_;
  NetworkParams value_, cost_value_;
  AdamState value_adam_, cost_value_adam_;
};

std::unique_ptr<Agent> make_agent(Algorithm algorithm, ActorSetup setup, AgentConfig config,
                                  bool lagrangian, Rng& rng);

/// Polyak averaging: target <- (1 - tau) target + tau online (exact at tau = 1).
void polyak_update(NetworkParams& target, const NetworkParams& online, double tau);

}  // namespace actmap

#endif  // ACTMAP_AGENTS_HPP_
