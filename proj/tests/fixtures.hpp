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

// Small networks, observations and gradient checks shared by the agent tests
// and the acceptance binary.

#ifndef ACTMAP_TESTS_FIXTURES_HPP_
#define ACTMAP_TESTS_FIXTURES_HPP_

#include <functional>
#include <random>
#include <vector>

#include "actmap/agents.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace actmap;

/// Two ego features, one set of two-feature rows, two decision dimensions.
inline ActorSetup tiny_setup() { return {{2, {2}}, 2}; }

inline AgentConfig tiny_config(const AgentConfig& base) {
  AgentConfig c = base;
  c.set_hidden = {3};
  c.trunk_hidden = {4};
  return c;
}

inline Observation random_observation(const ObservationSpec& spec, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Observation o;
  o.ego = Vector(static_cast<Eigen::Index>(spec.ego_dim));
  for (Eigen::Index i = 0; i < o.ego.size(); ++i) o.ego[i] = n(rng);
  for (std::size_t dim : spec.set_dims) {
    const auto rows = std::uniform_int_distribution<Eigen::Index>(0, 3)(rng);
    Matrix m(rows, static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    o.sets.push_back(m);
  }
  return o;
}

inline Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Decisions strictly inside (-1, 1).
inline Matrix latent_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

struct Transitions {
  std::vector<Record> records;
  std::vector<const Record*> pointers() const {
    std::vector<const Record*> out;
    for (const Record& r : records) out.push_back(&r);
    return out;
  }
  ObsBatch obs() const {
    std::vector<const Observation*> o;
    for (const Record& r : records) o.push_back(&r.obs);
    return ObsBatch::gather(o);
  }
};

inline Transitions random_transitions(const ActorSetup& setup, std::size_t n, Rng& rng) {
  Transitions t;
  std::normal_distribution<double> g(0.0, 1.0);
  const Matrix z = latent_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(setup.dim), rng);
  for (std::size_t i = 0; i < n; ++i) {
    Record r;
    r.obs = random_observation(setup.obs, rng);
    r.next_obs = random_observation(setup.obs, rng);
    r.z = z.row(static_cast<Eigen::Index>(i)).transpose();
    r.reward = g(rng);
    r.cost = i % 3 == 0 ? 1.0 : 0.0;
    r.terminal = i % 4 == 0;
    r.end = r.terminal;
    t.records.push_back(std::move(r));
  }
  return t;
}

using LossBuilder = std::function<Var(Tape&, Tape::Binding)>;

/// Relative error between the tape gradient of `loss` and central differences.
inline double gradient_error(const NetworkParams& params, const LossBuilder& loss,
                             double h = 1e-6) {
  Tape tape;
  const Tape::Binding b = tape.bind(params);
  const std::vector<double> got = tape.gradient(loss(tape, b), b);
  const std::vector<double> ref = oracle::central_difference(
      [&](const NetworkParams& p) {
        Tape t;
        const Tape::Binding bb = t.bind(p);
        return loss(t, bb).scalar();
      },
      params, h);
  return oracle::relative_error(got, ref);
}

}  // namespace fixture

#endif  // ACTMAP_TESTS_FIXTURES_HPP_
