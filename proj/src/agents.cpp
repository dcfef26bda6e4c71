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

#include "actmap/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "actmap/error.hpp"

namespace actmap {

std::string_view to_string(Algorithm a) { return a == Algorithm::sac ? "sac" : "ppo"; }

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "sac") return Algorithm::sac;
  if (name == "ppo") return Algorithm::ppo;
  throw ConfigError("unknown algorithm '" + std::string(name) + "' (sac | ppo)");
}

AgentConfig AgentConfig::sac_defaults() { return AgentConfig{}; }

AgentConfig AgentConfig::ppo_defaults() {
  AgentConfig c;
  c.entropy = 5e-3;
  c.cost_gamma = 0.0;
  return c;
}

void AgentConfig::validate() const {
  std::vector<std::string> bad;
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  const auto non_negative = [](double v) { return v >= 0.0 && std::isfinite(v); };
  if (!unit(gamma)) bad.push_back("agent.gamma");
  if (!non_negative(actor_lr)) bad.push_back("agent.actor_lr");
  if (!non_negative(critic_lr)) bad.push_back("agent.critic_lr");
  if (!non_negative(entropy)) bad.push_back("agent.entropy");
  if (!unit(tau)) bad.push_back("agent.tau");
  if (batch == 0) bad.push_back("agent.batch");
  if (train_every == 0) bad.push_back("agent.train_every");
  if (replay_capacity == 0) bad.push_back("agent.replay_capacity");
  if (rollout_size == 0) bad.push_back("agent.rollout_size");
  if (epochs == 0) bad.push_back("agent.epochs");
  if (!unit(gae_lambda)) bad.push_back("agent.gae_lambda");
  if (!positive(clip)) bad.push_back("agent.clip");
  if (!(log_std_min < log_std_max)) bad.push_back("agent.log_std_min");
  if (!unit(cost_gamma)) bad.push_back("agent.cost_gamma");
  if (!std::isfinite(cost_threshold)) bad.push_back("agent.cost_threshold");
  if (!non_negative(safety_lr)) bad.push_back("agent.safety_lr");
  if (!non_negative(multiplier_lr)) bad.push_back("agent.multiplier_lr");
  if (!non_negative(initial_multiplier)) bad.push_back("agent.initial_multiplier");
  if (trunk_hidden.empty()) bad.push_back("agent.trunk_hidden");
  if (!bad.empty()) throw ConfigError("invalid agent settings", bad);
}

// ---------------------------------------------------------------------------

double squashed_log_prob(const GaussianHead& head, std::span<const double> x,
                         std::span<const double> z) {
  const auto d = static_cast<std::size_t>(head.mean.size());
  if (x.size() != d || z.size() != d) throw UsageError("squashed_log_prob: size mismatch");
  double lp = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double sd = std::exp(head.log_std[i]);
    const double u = (x[k] - head.mean[i]) / sd;
    lp += -0.5 * u * u - head.log_std[i] - 0.5 * std::log(2.0 * std::numbers::pi);
    lp -= std::log(std::max(1.0 - z[k] * z[k], kSquashFloor));
  }
  return lp;
}

SquashedSample squashed_from_noise(const GaussianHead& head, std::span<const double> noise) {
  const Eigen::Index d = head.mean.size();
  if (noise.size() != static_cast<std::size_t>(d)) throw UsageError("noise size mismatch");
  SquashedSample s;
  s.x.resize(d);
  s.z.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    s.x[k] = head.mean[k] + std::exp(head.log_std[k]) * noise[static_cast<std::size_t>(k)];
    s.z[k] = std::tanh(s.x[k]);
  }
  s.log_prob = squashed_log_prob(head, std::span<const double>(s.x.data(), s.x.size()),
                                 std::span<const double>(s.z.data(), s.z.size()));
  return s;
}

SquashedSample squashed_sample(const GaussianHead& head, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector noise(head.mean.size());
  for (Eigen::Index k = 0; k < noise.size(); ++k) noise[k] = n(rng);
  return squashed_from_noise(head, std::span<const double>(noise.data(), noise.size()));
}

double squashed_log_prob_of_latent(const GaussianHead& head, std::span<const double> z) {
  constexpr double kEdge = 1.0 - 1e-12;
  Vector x(static_cast<Eigen::Index>(z.size()));
  for (std::size_t k = 0; k < z.size(); ++k) {
    x[static_cast<Eigen::Index>(k)] = std::atanh(std::clamp(z[k], -kEdge, kEdge));
  }
  return squashed_log_prob(head, std::span<const double>(x.data(), x.size()), z);
}

// ---------------------------------------------------------------------------

GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const double> next_values, std::span<const std::uint8_t> terminal,
              std::span<const std::uint8_t> end, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || terminal.size() != n || end.size() != n) {
    throw UsageError("gae: input lengths differ");
  }
  GaeResult out;
  out.advantages.resize(static_cast<Eigen::Index>(n));
  out.returns.resize(static_cast<Eigen::Index>(n));
  double next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double bootstrap = terminal[t] ? 0.0 : gamma * next_values[t];
    const double delta = rewards[t] + bootstrap - values[t];
    const double carry = end[t] ? 0.0 : gamma * lambda * next_adv;
    const double adv = delta + carry;
    out.advantages[static_cast<Eigen::Index>(t)] = adv;
    out.returns[static_cast<Eigen::Index>(t)] = adv + values[t];
    next_adv = adv;
  }
  return out;
}

GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw UsageError("gae: input lengths differ");
  std::vector<double> next(n);
  std::vector<std::uint8_t> end(n);
  for (std::size_t t = 0; t < n; ++t) {
    next[t] = t + 1 < n ? values[t + 1] : bootstrap;
    end[t] = dones[t] || t + 1 == n;
  }
  return gae(rewards, values, next, dones, end, gamma, lambda);
}

void normalize(Vector& v) {
  if (v.size() < 2) return;
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / static_cast<double>(v.size());
  v = (v.array() - mean) / (std::sqrt(var) + 1e-8);
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::push(Record r) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(r));
  } else {
    data_[next_] = std::move(r);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Record*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (data_.empty()) throw UsageError("sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<const Record*> out(n);
  for (auto& p : out) p = &data_[pick(rng)];
  return out;
}

RolloutBuffer::RolloutBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("rollout size must be positive");
  data_.reserve(capacity);
}

void RolloutBuffer::push(Record r) {
  if (full()) throw UsageError("rollout buffer is full");
  data_.push_back(std::move(r));
}

// ---------------------------------------------------------------------------

Agent::Agent(ActorSetup setup, AgentConfig config, bool lagrangian, Rng& rng)
    : setup_(std::move(setup)),
      config_(std::move(config)),
      lagrangian_(lagrangian),
      multiplier_(config_.initial_multiplier) {
  config_.validate();
  if (setup_.dim == 0) throw ConfigError("decision dimension must be positive");
  NetworkSpec spec;
  spec.obs = setup_.obs;
  spec.output_dim = 2 * setup_.dim;
  spec.set_hidden = config_.set_hidden;
  spec.trunk_hidden = config_.trunk_hidden;
  actor_net_ = SetNet(spec);
  actor_ = actor_net_.init(rng);
  actor_adam_ = AdamState(actor_.size());
}

std::vector<GaussianHead> Agent::heads(const ObsBatch& obs) const {
  const Matrix out = actor_net_.forward(actor_, obs);
  const auto d = static_cast<Eigen::Index>(setup_.dim);
  std::vector<GaussianHead> h(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    auto& g = h[static_cast<std::size_t>(i)];
    g.mean = out.row(i).head(d).transpose();
    g.log_std = out.row(i)
                    .segment(d, d)
                    .transpose()
                    .cwiseMax(config_.log_std_min)
                    .cwiseMin(config_.log_std_max);
  }
  return h;
}

GaussianHead Agent::head(const Observation& obs) const {
  return heads(ObsBatch::single(obs)).front();
}

Vector Agent::act_mean(const Observation& obs) const {
  return head(obs).mean.array().tanh();
}

std::pair<Var, Var> Agent::head_on_tape(Tape& tape, Tape::Binding actor,
                                        const ObsBatch& obs) const {
  const Var out = actor_net_.forward(tape, actor, obs);
  const auto d = static_cast<Eigen::Index>(setup_.dim);
  const Var mean = tape.slice_cols(out, 0, d);
  const Var log_std =
      tape.clamp(tape.slice_cols(out, d, d), config_.log_std_min, config_.log_std_max);
  return {mean, log_std};
}

void polyak_update(NetworkParams& target, const NetworkParams& online, double tau) {
  if (target.shapes() != online.shapes()) throw UsageError("polyak_update: layout mismatch");
  auto t = target.values();
  const auto o = online.values();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::lerp(t[i], o[i], tau);
}

std::unique_ptr<Agent> make_agent(Algorithm algorithm, ActorSetup setup, AgentConfig config,
                                  bool lagrangian, Rng& rng) {
  if (algorithm == Algorithm::sac) {
    return std::make_unique<SacAgent>(std::move(setup), std::move(config), lagrangian, rng);
  }
  return std::make_unique<PpoAgent>(std::move(setup), std::move(config), lagrangian, rng);
}

}  // namespace actmap
