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

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "actmap/agents.hpp"
#include "actmap/error.hpp"

namespace actmap {
namespace {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = n(rng);
  }
  return m;
}

}  // namespace

SacBatch SacBatch::from(std::span<const Record* const> records) {
  if (records.empty()) throw UsageError("empty SAC batch");
  std::vector<const Observation*> obs, next;
  const auto n = static_cast<Eigen::Index>(records.size());
  const Eigen::Index d = records.front()->z.size();
  SacBatch b;
  b.z.resize(n, d);
  b.reward.resize(n);
  b.cost.resize(n);
  b.not_terminal.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Record& r = *records[static_cast<std::size_t>(i)];
    obs.push_back(&r.obs);
    next.push_back(&r.next_obs);
    b.z.row(i) = r.z.transpose();
    b.reward[i] = r.reward;
    b.cost[i] = r.cost;
    b.not_terminal[i] = r.terminal ? 0.0 : 1.0;
  }
  b.obs = ObsBatch::gather(obs);
  b.next_obs = ObsBatch::gather(next);
  return b;
}

SacAgent::SacAgent(ActorSetup setup, AgentConfig config, bool lagrangian, Rng& rng)
    : Agent(std::move(setup), std::move(config), lagrangian, rng) {
  NetworkSpec spec;
  spec.obs = setup_.obs;
  spec.extra_dim = setup_.dim;
  spec.output_dim = 1;
  spec.set_hidden = config_.set_hidden;
  spec.trunk_hidden = config_.trunk_hidden;
  critic_net_ = SetNet(spec);
  q1_ = critic_net_.init(rng);
  q2_ = critic_net_.init(rng);
  q1_target_ = q1_;
  q2_target_ = q2_;
  q1_adam_ = AdamState(q1_.size());
  q2_adam_ = AdamState(q2_.size());
  if (lagrangian_) {
    qc_ = critic_net_.init(rng);
    qc_target_ = qc_;
    qc_adam_ = AdamState(qc_.size());
  }
}

SquashedSample SacAgent::act(const Observation& obs, Rng& rng, Record& rec) const {
  SquashedSample s = squashed_sample(head(obs), rng);
  rec.z = s.z;
  rec.log_prob = s.log_prob;
  return s;
}

std::vector<std::pair<std::string, const NetworkParams*>> SacAgent::parameter_sets() const {
  std::vector<std::pair<std::string, const NetworkParams*>> out{
      {"actor", &actor_}, {"q1", &q1_}, {"q2", &q2_}, {"q1_target", &q1_target_},
      {"q2_target", &q2_target_}};
  if (lagrangian_) {
    out.emplace_back("safety", &qc_);
    out.emplace_back("safety_target", &qc_target_);
  }
  return out;
}

Vector SacAgent::q_values(const NetworkParams& critic, const ObsBatch& obs, const Matrix& z) const {
  return critic_net_.forward(critic, obs, z).col(0);
}

namespace {

struct NextDecisions {
  Matrix z;
  Vector log_prob;
};

NextDecisions next_decisions(const Agent& agent, const ObsBatch& next_obs, const Matrix& noise) {
  const auto heads = agent.heads(next_obs);
  NextDecisions out{Matrix(noise.rows(), noise.cols()), Vector(noise.rows())};
  for (Eigen::Index i = 0; i < noise.rows(); ++i) {
    const Vector row = noise.row(i).transpose();
    const SquashedSample s = squashed_from_noise(heads[static_cast<std::size_t>(i)],
                                                 std::span<const double>(row.data(), row.size()));
    out.z.row(i) = s.z.transpose();
    out.log_prob[i] = s.log_prob;
  }
  return out;
}

}  // namespace

Vector SacAgent::critic_targets(const SacBatch& b, const Matrix& next_noise) const {
  const NextDecisions next = next_decisions(*this, b.next_obs, next_noise);
  const Vector t1 = q_values(q1_target_, b.next_obs, next.z);
  const Vector t2 = q_values(q2_target_, b.next_obs, next.z);
  const Vector soft = t1.cwiseMin(t2) - config_.entropy * next.log_prob;
  return b.reward.array() + config_.gamma * b.not_terminal.array() * soft.array();
}

Vector SacAgent::safety_targets(const SacBatch& b, const Matrix& next_noise) const {
  if (!lagrangian_) throw UsageError("safety critic requested on a non-Lagrangian agent");
  const NextDecisions next = next_decisions(*this, b.next_obs, next_noise);
  const Vector tc = q_values(qc_target_, b.next_obs, next.z);
  return b.cost.array() + config_.cost_gamma * b.not_terminal.array() * tc.array();
}

Var SacAgent::critic_loss(Tape& tape, Tape::Binding critic, const SacBatch& b,
                          const Vector& targets) const {
  const Var q = critic_net_.forward(tape, critic, b.obs, tape.constant(b.z));
  return tape.mean(tape.square(q - tape.constant(targets)));
}

Var SacAgent::actor_loss(Tape& tape, Tape::Binding actor, const ObsBatch& obs, const Matrix& noise,
                         double multiplier) const {
  const auto [mean, log_std] = head_on_tape(tape, actor, obs);
  const Var x = mean + tape.exp(log_std) * tape.constant(noise);
  const Var z = tape.tanh(x);
  const Matrix base =
      (-0.5 * noise.array().square() - 0.5 * std::log(2.0 * std::numbers::pi)).matrix();
  const Var log_normal = tape.row_sum(tape.constant(base) - log_std);
  const Var one_minus = tape.shift(tape.neg(tape.square(z)), 1.0);
  const Var correction =
      tape.row_sum(tape.log(tape.clamp(one_minus, kSquashFloor, std::numeric_limits<double>::infinity())));
  const Var log_prob = log_normal - correction;
  const Var q1 = critic_net_.forward(tape, tape.bind(q1_), obs, z);
  const Var q2 = critic_net_.forward(tape, tape.bind(q2_), obs, z);
  Var loss = tape.mean(config_.entropy * log_prob - tape.minimum(q1, q2));
  if (multiplier != 0.0) {
    const Var qc = critic_net_.forward(tape, tape.bind(qc_), obs, z);
    loss = loss + multiplier * tape.mean(tape.shift(qc, -config_.cost_threshold));
  }
  return loss;
}

UpdateStats SacAgent::update(const SacBatch& b, Rng& rng) {
  UpdateStats stats;
  const auto n = static_cast<Eigen::Index>(b.obs.size());
  const auto d = static_cast<Eigen::Index>(setup_.dim);
  const Matrix next_noise = normal_matrix(n, d, rng);

  const Vector y = critic_targets(b, next_noise);
  std::vector<double> g1, g2, gc;
  double l1 = 0.0, l2 = 0.0;
  {
    Tape tape;
    const auto bind = tape.bind(q1_);
    const Var loss = critic_loss(tape, bind, b, y);
    l1 = loss.scalar();
    g1 = tape.gradient(loss, bind);
  }
  {
    Tape tape;
    const auto bind = tape.bind(q2_);
    const Var loss = critic_loss(tape, bind, b, y);
    l2 = loss.scalar();
    g2 = tape.gradient(loss, bind);
  }
  if (lagrangian_) {
    const Vector yc = safety_targets(b, next_noise);
    Tape tape;
    const auto bind = tape.bind(qc_);
    const Var loss = critic_loss(tape, bind, b, yc);
    stats.safety_loss = loss.scalar();
    gc = tape.gradient(loss, bind);
  }
  adam_step(q1_, g1, q1_adam_, config_.critic_lr);
  adam_step(q2_, g2, q2_adam_, config_.critic_lr);
  if (lagrangian_) adam_step(qc_, gc, qc_adam_, config_.safety_lr);
  stats.critic_loss = 0.5 * (l1 + l2);
  ++critic_updates_;
  polyak_update(q1_target_, q1_, config_.tau);
  polyak_update(q2_target_, q2_, config_.tau);
  if (lagrangian_) polyak_update(qc_target_, qc_, config_.tau);

  if (critic_updates_ > config_.policy_delay) {
    const Matrix noise = normal_matrix(n, d, rng);
    Tape tape;
    const auto bind = tape.bind(actor_);
    const Var loss = actor_loss(tape, bind, b.obs, noise, multiplier_);
    stats.actor_loss = loss.scalar();
    const std::vector<double> ga = tape.gradient(loss, bind);
    adam_step(actor_, ga, actor_adam_, config_.actor_lr);
    stats.actor_updated = true;
    if (lagrangian_) {
      // Dual ascent on the expected safety value of the current policy.
      const auto heads = this->heads(b.obs);
      Matrix z(n, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vector row = noise.row(i).transpose();
        z.row(i) = squashed_from_noise(heads[static_cast<std::size_t>(i)],
                                       std::span<const double>(row.data(), row.size()))
                       .z.transpose();
      }
      const double violation = (q_values(qc_, b.obs, z).array() - config_.cost_threshold).mean();
      multiplier_ = std::max(0.0, multiplier_ + config_.multiplier_lr * violation);
    }
  }
  stats.multiplier = multiplier_;
  return stats;
}

}  // namespace actmap
