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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "actmap/agents.hpp"
#include "actmap/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace actmap;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double hand_log_prob(const GaussianHead& h, const Vector& z) {
  double lp = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double x = 0.5 * std::log((1.0 + z[k]) / (1.0 - z[k]));
    const double s = std::exp(h.log_std[k]);
    lp += -0.5 * std::pow((x - h.mean[k]) / s, 2) - h.log_std[k] - kHalfLog2Pi;
    lp -= std::log(std::max(1.0 - z[k] * z[k], kSquashFloor));
  }
  return lp;
}

PpoBatch ppo_batch(const PpoAgent& agent, const fixture::Transitions& t, Rng& rng, double shift) {
  PpoBatch b;
  b.obs = t.obs();
  const auto n = static_cast<Eigen::Index>(t.records.size());
  b.z = Matrix(n, static_cast<Eigen::Index>(agent.dim()));
  b.old_log_prob = Vector(n);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.z.row(i) = t.records[static_cast<std::size_t>(i)].z.transpose();
    const GaussianHead h = agent.head(t.records[static_cast<std::size_t>(i)].obs);
    b.old_log_prob[i] = hand_log_prob(h, b.z.row(i).transpose()) + shift * g(rng);
  }
  b.advantages = fixture::normal_matrix(n, 1, rng).col(0);
  b.cost_advantages = fixture::normal_matrix(n, 1, rng).col(0);
  b.returns = fixture::normal_matrix(n, 1, rng).col(0);
  b.cost_returns = fixture::normal_matrix(n, 1, rng).col(0);
  return b;
}

}  // namespace

TEST_CASE("squashed gaussian log probability") {
  GaussianHead h{Vector(2), Vector(2)};
  h.mean << 0.3, -0.2;
  h.log_std << -0.5, 0.1;
  const std::vector<double> noise{0.7, -1.2};
  const SquashedSample s = squashed_from_noise(h, noise);
  for (Eigen::Index k = 0; k < 2; ++k) {
    CHECK(s.x[k] == doctest::Approx(h.mean[k] + std::exp(h.log_std[k]) * noise[static_cast<std::size_t>(k)]));
    CHECK(s.z[k] == doctest::Approx(std::tanh(s.x[k])));
  }
  CHECK(s.log_prob == doctest::Approx(hand_log_prob(h, s.z)).epsilon(1e-10));
  CHECK(squashed_log_prob(h, view(s.x), view(s.z)) == doctest::Approx(s.log_prob).epsilon(1e-12));
  CHECK(squashed_log_prob_of_latent(h, view(s.z)) == doctest::Approx(s.log_prob).epsilon(1e-9));

  // Saturated draws stay finite.
  const Vector edge = Vector::Constant(2, 1.0);
  CHECK(std::isfinite(squashed_log_prob_of_latent(h, view(edge))));
}

TEST_CASE("squashed samples follow the head") {
  GaussianHead h{Vector::Constant(1, 0.4), Vector::Constant(1, std::log(0.3))};
  Rng rng(1);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const SquashedSample s = squashed_sample(h, rng);
    CHECK(std::abs(s.z[0]) < 1.0);
    sum += s.x[0];
    sq += s.x[0] * s.x[0];
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(0.4).epsilon(0.02));
  CHECK(std::sqrt(sq / n - mean * mean) == doctest::Approx(0.3).epsilon(0.03));
}

TEST_CASE("advantages with lambda one are discounted returns") {
  Rng rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 15;
    std::vector<double> r(n), v(n);
    std::vector<int> done(n);
    std::vector<std::uint8_t> d8(n);
    for (std::size_t t = 0; t < n; ++t) {
      r[t] = g(rng);
      v[t] = g(rng);
      done[t] = (t % 6 == 5) ? 1 : 0;
      d8[t] = static_cast<std::uint8_t>(done[t]);
    }
    const double bootstrap = g(rng);
    const GaeResult res = gae(r, v, d8, bootstrap, 0.9, 1.0);
    const std::vector<double> ref = oracle::discounted_advantages(r, v, done, bootstrap, 0.9);
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(res.advantages[static_cast<Eigen::Index>(t)] == doctest::Approx(ref[t]).epsilon(1e-12));
      CHECK(res.returns[static_cast<Eigen::Index>(t)] ==
            doctest::Approx(ref[t] + v[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("advantages with lambda zero are one-step errors") {
  const std::vector<double> r{1.0, 2.0, 3.0};
  const std::vector<double> v{0.5, 0.25, 0.125};
  const std::vector<double> next{0.25, 0.125, 4.0};
  const std::vector<std::uint8_t> terminal{0, 0, 1};
  const std::vector<std::uint8_t> end{0, 1, 1};
  const GaeResult res = gae(r, v, next, terminal, end, 0.5, 0.0);
  CHECK(res.advantages[0] == doctest::Approx(1.0 + 0.5 * 0.25 - 0.5));
  CHECK(res.advantages[1] == doctest::Approx(2.0 + 0.5 * 0.125 - 0.25));
  CHECK(res.advantages[2] == doctest::Approx(3.0 - 0.125));

  // A time-limit end still bootstraps but stops the recursion.
  const GaeResult full = gae(r, v, next, terminal, end, 0.5, 1.0);
  CHECK(full.advantages[1] == doctest::Approx(2.0 + 0.5 * 0.125 - 0.25));
  CHECK(full.advantages[0] == doctest::Approx(1.0 + 0.5 * 0.25 - 0.5 + 0.5 * full.advantages[1]));
}

TEST_CASE("normalize") {
  Vector v(4);
  v << 1.0, 2.0, 3.0, 4.0;
  normalize(v);
  CHECK(v.mean() == doctest::Approx(0.0));
  CHECK(std::sqrt(v.array().square().mean()) == doctest::Approx(1.0).epsilon(1e-6));
  Vector c = Vector::Constant(3, 5.0);
  normalize(c);
  CHECK(c.allFinite());
}

TEST_CASE("replay buffer overwrites the oldest records") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    Record r;
    r.reward = i;
    buf.push(r);
  }
  CHECK(buf.size() == 3);
  std::vector<double> seen;
  for (std::size_t i = 0; i < 3; ++i) seen.push_back(buf.at(i).reward);
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<double>{2.0, 3.0, 4.0});
  Rng rng(0);
  CHECK(buf.sample(7, rng).size() == 7);

  RolloutBuffer roll(2);
  roll.push({});
  CHECK_FALSE(roll.full());
  roll.push({});
  CHECK(roll.full());
  roll.clear();
  CHECK(roll.size() == 0);
}

TEST_CASE("polyak averaging") {
  NetworkParams a({{2, 2, Activation::identity}});
  NetworkParams b = a;
  for (double& v : b.values()) v = 1.0;
  NetworkParams t = a;
  polyak_update(t, b, 0.0);
  CHECK(t == a);
  polyak_update(t, b, 1.0);
  CHECK(t == b);
  NetworkParams h = a;
  polyak_update(h, b, 0.25);
  for (double v : h.values()) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("agent settings are validated") {
  CHECK_NOTHROW(AgentConfig::sac_defaults().validate());
  CHECK_NOTHROW(AgentConfig::ppo_defaults().validate());
  AgentConfig c;
  c.gamma = 1.5;
  c.batch = 0;
  try {
    c.validate();
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.fields() == std::vector<std::string>{"agent.gamma", "agent.batch"});
  }
  CHECK(algorithm_from_string("ppo") == Algorithm::ppo);
  CHECK_THROWS_AS(algorithm_from_string("dqn"), ConfigError);
}

TEST_CASE("sac loss gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    AgentConfig cfg = fixture::tiny_config(AgentConfig::sac_defaults());
    cfg.entropy = 0.2;
    SacAgent agent(fixture::tiny_setup(), cfg, true, rng);
    const fixture::Transitions t = fixture::random_transitions(agent.setup(), 6, rng);
    const SacBatch b = SacBatch::from(t.pointers());
    const Matrix next_noise = fixture::normal_matrix(6, 2, rng);
    const Vector y = agent.critic_targets(b, next_noise);
    CHECK(fixture::gradient_error(agent.q1(), [&](Tape& tape, Tape::Binding c) {
            return agent.critic_loss(tape, c, b, y);
          }) <= 1e-3);
    const Matrix noise = fixture::normal_matrix(6, 2, rng);
    for (double m : {0.0, 0.7}) {
      CHECK(fixture::gradient_error(agent.actor(), [&](Tape& tape, Tape::Binding a) {
              return agent.actor_loss(tape, a, b.obs, noise, m);
            }) <= 1e-3);
    }
  }
}

TEST_CASE("sac critic targets match a hand computation") {
  Rng rng(3);
  AgentConfig cfg = fixture::tiny_config(AgentConfig::sac_defaults());
  cfg.entropy = 0.1;
  cfg.gamma = 0.8;
  SacAgent agent(fixture::tiny_setup(), cfg, true, rng);
  const fixture::Transitions t = fixture::random_transitions(agent.setup(), 5, rng);
  const SacBatch b = SacBatch::from(t.pointers());
  const Matrix noise = fixture::normal_matrix(5, 2, rng);
  const Vector y = agent.critic_targets(b, noise);
  const Vector yc = agent.safety_targets(b, noise);
  for (Eigen::Index i = 0; i < 5; ++i) {
    const Record& r = t.records[static_cast<std::size_t>(i)];
    const GaussianHead h = agent.head(r.next_obs);
    Vector z(2);
    for (Eigen::Index k = 0; k < 2; ++k) z[k] = std::tanh(h.mean[k] + std::exp(h.log_std[k]) * noise(i, k));
    const ObsBatch one = ObsBatch::single(r.next_obs);
    const Matrix zi = z.transpose();
    const double q = std::min(agent.q_values(agent.q1_target(), one, zi)[0],
                              agent.q_values(agent.q2_target(), one, zi)[0]);
    const double cont = r.terminal ? 0.0 : 1.0;
    CHECK(y[i] == doctest::Approx(r.reward + 0.8 * cont * (q - 0.1 * hand_log_prob(h, z))).epsilon(1e-9));
    const double qc = agent.q_values(agent.safety_target(), one, zi)[0];
    CHECK(yc[i] == doctest::Approx(r.cost + cfg.cost_gamma * cont * qc).epsilon(1e-9));
  }
  SacAgent plain(fixture::tiny_setup(), cfg, false, rng);
  CHECK_THROWS_AS(plain.safety_targets(b, noise), UsageError);
}

TEST_CASE("sac actor waits for the policy delay") {
  Rng rng(4);
  AgentConfig cfg = fixture::tiny_config(AgentConfig::sac_defaults());
  cfg.policy_delay = 3;
  SacAgent agent(fixture::tiny_setup(), cfg, false, rng);
  const fixture::Transitions t = fixture::random_transitions(agent.setup(), 8, rng);
  const SacBatch b = SacBatch::from(t.pointers());
  const NetworkParams actor0 = agent.actor();
  const NetworkParams q0 = agent.q1();
  const NetworkParams target0 = agent.q1_target();
  for (int i = 0; i < 3; ++i) {
    const UpdateStats s = agent.update(b, rng);
    CHECK_FALSE(s.actor_updated);
  }
  CHECK(agent.actor() == actor0);
  CHECK_FALSE(agent.q1() == q0);
  CHECK_FALSE(agent.q1_target() == target0);
  CHECK(agent.update(b, rng).actor_updated);
  CHECK_FALSE(agent.actor() == actor0);
  CHECK(agent.critic_updates() == 4);
  const auto sets = agent.parameter_sets();
  CHECK(sets.size() == 5);
}

TEST_CASE("ppo loss gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CAPTURE(seed);
    Rng rng(seed + 10);
    AgentConfig cfg = fixture::tiny_config(AgentConfig::ppo_defaults());
    cfg.entropy = 0.05;
    PpoAgent agent(fixture::tiny_setup(), cfg, true, rng);
    const fixture::Transitions t = fixture::random_transitions(agent.setup(), 6, rng);
    // Small log-ratio offsets keep every sample away from the clip kinks.
    const PpoBatch b = ppo_batch(agent, t, rng, 0.01);
    for (double m : {0.0, 0.5}) {
      CHECK(fixture::gradient_error(agent.actor(), [&](Tape& tape, Tape::Binding a) {
              return agent.policy_loss(tape, a, b, m);
            }) <= 1e-3);
    }
    CHECK(fixture::gradient_error(agent.value(), [&](Tape& tape, Tape::Binding v) {
            return agent.value_loss(tape, v, b.obs, b.returns);
          }) <= 1e-3);
  }
}

TEST_CASE("ppo policy loss matches a hand computation") {
  Rng rng(6);
  AgentConfig cfg = fixture::tiny_config(AgentConfig::ppo_defaults());
  cfg.entropy = 0.03;
  cfg.clip = 0.2;
  PpoAgent agent(fixture::tiny_setup(), cfg, true, rng);
  const fixture::Transitions t = fixture::random_transitions(agent.setup(), 12, rng);
  const PpoBatch b = ppo_batch(agent, t, rng, 0.5);
  for (double m : {0.0, 0.4}) {
    double surrogate = 0.0, entropy = 0.0;
    for (std::size_t i = 0; i < t.records.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const GaussianHead h = agent.head(t.records[i].obs);
      const double ratio = std::exp(hand_log_prob(h, b.z.row(row).transpose()) - b.old_log_prob[row]);
      const double a = b.advantages[row] - m * b.cost_advantages[row];
      surrogate += std::min(ratio * a, std::clamp(ratio, 0.8, 1.2) * a);
      entropy += h.log_std.sum() + 2.0 * (0.5 + kHalfLog2Pi);
    }
    const double n = static_cast<double>(t.records.size());
    const double expected = -surrogate / n - cfg.entropy * entropy / n;
    Tape tape;
    std::size_t skipped = 7;
    const double got = agent.policy_loss(tape, tape.bind(agent.actor()), b, m, &skipped).scalar();
    CHECK(got == doctest::Approx(expected).epsilon(1e-10));
    CHECK(skipped == 0);
  }
}

TEST_CASE("ppo skips samples with overflowing ratios") {
  Rng rng(7);
  PpoAgent agent(fixture::tiny_setup(), fixture::tiny_config(AgentConfig::ppo_defaults()), false, rng);
  const fixture::Transitions t = fixture::random_transitions(agent.setup(), 4, rng);
  PpoBatch b = ppo_batch(agent, t, rng, 0.0);
  b.old_log_prob[1] -= 100.0;
  Tape tape;
  std::size_t skipped = 0;
  const Var loss = agent.policy_loss(tape, tape.bind(agent.actor()), b, 0.0, &skipped);
  CHECK(skipped == 1);
  CHECK(std::isfinite(loss.scalar()));
}

TEST_CASE("act records consistent log probabilities") {
  Rng rng(8);
  for (Algorithm alg : {Algorithm::sac, Algorithm::ppo}) {
    const auto agent = make_agent(alg, fixture::tiny_setup(),
                                  fixture::tiny_config(alg == Algorithm::sac ? AgentConfig::sac_defaults()
                                                                             : AgentConfig::ppo_defaults()),
                                  false, rng);
    const Observation o = fixture::random_observation(agent->setup().obs, rng);
    Record rec;
    const SquashedSample s = agent->act(o, rng, rec);
    CHECK(rec.log_prob == doctest::Approx(s.log_prob));
    CHECK(s.log_prob == doctest::Approx(squashed_log_prob_of_latent(agent->head(o), view(s.z))).epsilon(1e-8));
    const Vector mean = agent->act_mean(o);
    CHECK(mean.cwiseAbs().maxCoeff() < 1.0);
  }
}

TEST_CASE("ppo update consumes the rollout") {
  Rng rng(9);
  AgentConfig cfg = fixture::tiny_config(AgentConfig::ppo_defaults());
  cfg.rollout_size = 16;
  cfg.batch = 8;
  cfg.epochs = 2;
  PpoAgent agent(fixture::tiny_setup(), cfg, true, rng);
  RolloutBuffer roll(cfg.rollout_size);
  fixture::Transitions t = fixture::random_transitions(agent.setup(), 16, rng);
  for (Record& r : t.records) {
    agent.act(r.obs, rng, r);
    roll.push(r);
  }
  const NetworkParams before = agent.actor();
  const UpdateStats s = agent.update(roll, rng);
  CHECK(roll.size() == 0);
  CHECK_FALSE(agent.actor() == before);
  CHECK(std::isfinite(s.actor_loss));
  CHECK(agent.parameter_sets().size() == 3);
}
