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

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "actmap/agents.hpp"
#include "actmap/error.hpp"

namespace actmap {
namespace {

constexpr double kMaxLogRatio = 20.0;

}  // namespace

PpoAgent::PpoAgent(ActorSetup setup, AgentConfig config, bool lagrangian, Rng& rng)
    : Agent(std::move(setup), std::move(config), lagrangian, rng) {
  NetworkSpec spec;
  spec.obs = setup_.obs;
  spec.output_dim = 1;
  spec.set_hidden = config_.set_hidden;
  spec.trunk_hidden = config_.trunk_hidden;
  value_net_ = SetNet(spec);
  value_ = value_net_.init(rng);
  value_adam_ = AdamState(value_.size());
  if (lagrangian_) {
    cost_value_ = value_net_.init(rng);
    cost_value_adam_ = AdamState(cost_value_.size());
  }
}

SquashedSample PpoAgent::act(const Observation& obs, Rng& rng, Record& rec) const {
  const ObsBatch batch = ObsBatch::single(obs);
  SquashedSample s = squashed_sample(heads(batch).front(), rng);
  rec.z = s.z;
  rec.log_prob = s.log_prob;
  rec.value = values(value_, batch)[0];
  if (lagrangian_) rec.cost_value = values(cost_value_, batch)[0];
  return s;
}

std::vector<std::pair<std::string, const NetworkParams*>> PpoAgent::parameter_sets() const {
  std::vector<std::pair<std::string, const NetworkParams*>> out{{"actor", &actor_},
                                                                 {"value", &value_}};
  if (lagrangian_) out.emplace_back("cost_value", &cost_value_);
  return out;
}

Vector PpoAgent::values(const NetworkParams& params, const ObsBatch& obs) const {
  return value_net_.forward(params, obs).col(0);
}

Var PpoAgent::policy_loss(Tape& tape, Tape::Binding actor, const PpoBatch& b, double multiplier,
                          std::size_t* skipped) const {
  const Eigen::Index n = b.z.rows();
  const auto d = static_cast<Eigen::Index>(setup_.dim);
  constexpr double kEdge = 1.0 - 1e-12;
  Matrix x(n, d);
  Vector correction(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double c = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double z = b.z(i, k);
      x(i, k) = std::atanh(std::clamp(z, -kEdge, kEdge));
      c += std::log(std::max(1.0 - z * z, kSquashFloor));
    }
    correction[i] = c;
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const auto [mean, log_std] = head_on_tape(tape, actor, b.obs);
  const Var u = (tape.constant(x) - mean) / tape.exp(log_std);
  const Var log_normal =
      tape.shift(tape.row_sum(-0.5 * tape.square(u) - log_std), -static_cast<double>(d) * half_log_2pi);
  const Var log_prob = log_normal - tape.constant(correction);
  const Var log_ratio = log_prob - tape.constant(b.old_log_prob);

  Vector weight(n);
  std::size_t bad = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool ok = std::abs(log_ratio.value()(i, 0)) <= kMaxLogRatio;
    weight[i] = ok ? 1.0 : 0.0;
    if (!ok) ++bad;
  }
  if (skipped) *skipped = bad;
  const auto valid = static_cast<double>(n - static_cast<Eigen::Index>(bad));
  if (valid > 0.0) weight /= valid;

  Vector adv = b.advantages;
  if (multiplier != 0.0) adv -= multiplier * b.cost_advantages;
  const Var a = tape.constant(adv);
  const Var ratio = tape.exp(tape.clamp(log_ratio, -kMaxLogRatio, kMaxLogRatio));
  const Var clipped = tape.clamp(ratio, 1.0 - config_.clip, 1.0 + config_.clip);
  const Var surrogate = tape.minimum(ratio * a, clipped * a);
  const Var entropy = tape.shift(tape.row_sum(log_std), static_cast<double>(d) * (0.5 + half_log_2pi));
  return -tape.dot(surrogate, weight) - config_.entropy * tape.mean(entropy);
}

Var PpoAgent::value_loss(Tape& tape, Tape::Binding value, const ObsBatch& obs,
                         const Vector& returns) const {
  const Var v = value_net_.forward(tape, value, obs);
  return tape.mean(tape.square(v - tape.constant(returns)));
}

void PpoAgent::compute_advantages(const std::vector<Record>& records, Vector& adv, Vector& ret,
                                  Vector& cost_adv, Vector& cost_ret) const {
  const std::size_t n = records.size();
  adv = ret = cost_adv = cost_ret = Vector::Zero(static_cast<Eigen::Index>(n));
  if (n == 0) return;
  std::vector<const Observation*> next;
  for (const Record& r : records) next.push_back(&r.next_obs);
  const ObsBatch next_batch = ObsBatch::gather(next);
  const Vector next_v = values(value_, next_batch);
  const Vector next_c = lagrangian_ ? values(cost_value_, next_batch) : Vector::Zero(next_v.size());

  std::map<std::size_t, std::vector<std::size_t>> lanes;
  for (std::size_t i = 0; i < n; ++i) lanes[records[i].lane].push_back(i);
  for (const auto& [lane, idx] : lanes) {
    const std::size_t m = idx.size();
    std::vector<double> r(m), v(m), nv(m), c(m), cv(m), ncv(m);
    std::vector<std::uint8_t> term(m), end(m);
    for (std::size_t t = 0; t < m; ++t) {
      const Record& rec = records[idx[t]];
      const auto j = static_cast<Eigen::Index>(idx[t]);
      r[t] = rec.reward;
      v[t] = rec.value;
      nv[t] = next_v[j];
      c[t] = rec.cost;
      cv[t] = rec.cost_value;
      ncv[t] = next_c[j];
      term[t] = rec.terminal;
      end[t] = rec.end || t + 1 == m;
    }
    const GaeResult g = gae(r, v, nv, term, end, config_.gamma, config_.gae_lambda);
    GaeResult gc;
    if (lagrangian_) gc = gae(c, cv, ncv, term, end, config_.gamma, config_.gae_lambda);
    for (std::size_t t = 0; t < m; ++t) {
      const auto j = static_cast<Eigen::Index>(idx[t]);
      const auto s = static_cast<Eigen::Index>(t);
      adv[j] = g.advantages[s];
      ret[j] = g.returns[s];
      if (lagrangian_) {
        cost_adv[j] = gc.advantages[s];
        cost_ret[j] = gc.returns[s];
      }
    }
  }
}

UpdateStats PpoAgent::update_minibatch(const PpoBatch& b) {
  UpdateStats stats;
  {
    Tape tape;
    const auto bind = tape.bind(actor_);
    const Var loss = policy_loss(tape, bind, b, multiplier_, &stats.skipped);
    stats.actor_loss = loss.scalar();
    const std::vector<double> g = tape.gradient(loss, bind);
    adam_step(actor_, g, actor_adam_, config_.actor_lr);
    stats.actor_updated = true;
  }
  {
    Tape tape;
    const auto bind = tape.bind(value_);
    const Var loss = value_loss(tape, bind, b.obs, b.returns);
    stats.critic_loss = loss.scalar();
    adam_step(value_, tape.gradient(loss, bind), value_adam_, config_.critic_lr);
  }
  if (lagrangian_) {
    Tape tape;
    const auto bind = tape.bind(cost_value_);
    const Var loss = value_loss(tape, bind, b.obs, b.cost_returns);
    stats.safety_loss = loss.scalar();
    adam_step(cost_value_, tape.gradient(loss, bind), cost_value_adam_, config_.safety_lr);
  }
  stats.multiplier = multiplier_;
  return stats;
}

UpdateStats PpoAgent::update(RolloutBuffer& rollout, Rng& rng) {
  const std::vector<Record>& records = rollout.records();
  const std::size_t n = records.size();
  if (n == 0) throw UsageError("PPO update on an empty rollout");
  Vector adv, ret, cadv, cret;
  compute_advantages(records, adv, ret, cadv, cret);
  if (config_.normalize_advantages) normalize(adv);

  UpdateStats total;
  std::size_t batches = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config_.batch) {
      const std::size_t stop = std::min(n, start + config_.batch);
      const auto m = static_cast<Eigen::Index>(stop - start);
      PpoBatch b;
      std::vector<const Observation*> obs;
      b.z.resize(m, static_cast<Eigen::Index>(setup_.dim));
      b.old_log_prob.resize(m);
      b.advantages.resize(m);
      b.cost_advantages.resize(m);
      b.returns.resize(m);
      b.cost_returns.resize(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const std::size_t j = order[start + static_cast<std::size_t>(i)];
        const auto jj = static_cast<Eigen::Index>(j);
        obs.push_back(&records[j].obs);
        b.z.row(i) = records[j].z.transpose();
        b.old_log_prob[i] = records[j].log_prob;
        b.advantages[i] = adv[jj];
        b.cost_advantages[i] = cadv[jj];
        b.returns[i] = ret[jj];
        b.cost_returns[i] = cret[jj];
      }
      b.obs = ObsBatch::gather(obs);
      const UpdateStats s = update_minibatch(b);
      total.actor_loss += s.actor_loss;
      total.critic_loss += s.critic_loss;
      total.safety_loss += s.safety_loss;
      total.skipped += s.skipped;
      ++batches;
    }
  }
  total.actor_loss /= static_cast<double>(batches);
  total.critic_loss /= static_cast<double>(batches);
  total.safety_loss /= static_cast<double>(batches);
  total.actor_updated = true;
  if (lagrangian_) {
    double mean_cost = 0.0;
    for (const Record& r : records) mean_cost += r.cost;
    mean_cost /= static_cast<double>(n);
    multiplier_ = std::max(0.0, multiplier_ + config_.multiplier_lr * (mean_cost - config_.cost_threshold));
  }
  total.multiplier = multiplier_;
  rollout.clear();
  return total;
}

}  // namespace actmap
