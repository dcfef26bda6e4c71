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
#include <random>

#include "actmap/error.hpp"
#include "actmap/feasibility.hpp"
#include "oracles.hpp"

using namespace actmap;

namespace {

std::vector<double> random_action(std::size_t dim, double scale, Rng& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> a(dim);
  for (double& v : a) v = u(rng);
  return a;
}

std::vector<oracle::Ball> balls(const RobotPartialState& s) {
  std::vector<oracle::Ball> out;
  for (const Sphere& o : s.obstacles) out.push_back({o.center, o.radius});
  return out;
}

}  // namespace

TEST_CASE("joint cost sums clipped excesses") {
  const std::vector<double> costs{0.5, 2.0, -1.0};
  const std::vector<double> bounds{1.0, 1.5, 0.0};
  CHECK(joint_cost(costs, bounds) == doctest::Approx(0.5));
  CHECK(joint_cost(std::vector<double>{}, std::vector<double>{}) == 0.0);
  CHECK_THROWS_AS(joint_cost(costs, std::vector<double>{1.0}), UsageError);

  CostSpec spec{{{"speed", 0.3}, {"clearance", 0.0}}};
  spec.validate();
  CHECK(spec.evaluate(std::vector<double>{0.5, 0.1}) == doctest::Approx(0.3));
  CostSpec bad{{{"x", std::nan("")}}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("robot feasibility agrees with an independent re-check") {
  const EnvConfig cfg;
  const RobotConfig& rc = cfg.robot;
  Rng rng(21);
  std::size_t feasible = 0, infeasible = 0;
  for (std::uint64_t n = 0; n < 600; ++n) {
    const auto s = std::get<RobotPartialState>(generate_partial_state(EnvKind::robot, cfg, n));
    for (double scale : {0.05, 0.3, 1.6}) {
      const std::vector<double> dq = random_action(kArmJoints, scale, rng);
      const bool ours = robot_g(s, dq, rc);
      const bool ref = oracle::arm_step_ok(s.joints, dq, balls(s), rc.max_delta, rc.dt,
                                           rc.max_joint_speed, rc.capsule_radius);
      CHECK(ours == ref);
      CHECK(ours == (robot_G(s, dq, rc) == 0.0));
      (ours ? feasible : infeasible)++;
    }
  }
  CHECK(feasible > 100);
  CHECK(infeasible > 100);
}

TEST_CASE("robot check names the first violated constraint") {
  RobotConfig rc;
  RobotPartialState s;
  s.joints = {0.0, 0.0, 0.0, -1.5, 0.0, 1.5, 0.0};
  std::vector<double> dq(7, 0.0);
  CHECK(robot_check(s, dq, rc).first == Constraint::none);

  dq[0] = 3.0;  // clamped to the per-step bound
  const RobotCheck fast = robot_check(s, dq, rc);
  CHECK(fast.predicted[0] == doctest::Approx(rc.max_delta));

  std::vector<double> limit(7, 0.0);
  limit[3] = 1.5;  // joint 4 upper limit is below zero
  CHECK(robot_check(s, limit, rc).first == Constraint::joint_limit);

  RobotPartialState blocked = s;
  const ArmKinematics k = forward_kinematics(s.joints, rc.capsule_radius);
  blocked.obstacles.push_back({k.origins[4], 0.05});
  const RobotCheck hit = robot_check(blocked, std::vector<double>(7, 0.0), rc);
  CHECK(hit.first == Constraint::collision);
  CHECK(hit.collision > 0.0);
  CHECK(robot_G(blocked, std::vector<double>(7, 0.0), rc) == doctest::Approx(hit.total()));
  CHECK_THROWS_AS(robot_g(s, std::vector<double>(3, 0.0), rc), ConfigError);
}

TEST_CASE("path g is the zero set of G") {
  const EnvConfig cfg;
  Rng rng(4);
  std::size_t feasible = 0;
  for (std::uint64_t n = 0; n < 300; ++n) {
    const auto s = std::get<PathPartialState>(generate_partial_state(EnvKind::path, cfg, n));
    for (double scale : {0.1, 0.3, 1.0, 1.0}) {
      const std::vector<double> a = random_action(5, scale, rng);
      for (std::size_t points : {2u, 16u, 64u}) {
        const bool g = path_g(s, a, cfg.path, points);
        CHECK(g == (path_G(s, a, cfg.path, points) == 0.0));
        const PathCheck c = path_check(s, a, cfg.path, points);
        CHECK(g == (c.first == Constraint::none));
        if (g && points == 64) ++feasible;
      }
    }
  }
  CHECK(feasible > 50);
  PathPartialState s;
  CHECK_THROWS_AS(path_g(s, std::vector<double>(5, 0.0), cfg.path, 1), UsageError);
}

TEST_CASE("path constraints") {
  PathConfig pc;
  PathPartialState s;
  s.position = Vec2(0.5, 0.5);
  s.heading = Vec2::UnitX();
  const std::vector<double> straight(5, 0.0);
  const PathCheck ok = path_check(s, straight, pc, 64);
  CHECK(ok.first == Constraint::none);
  CHECK(ok.length == doctest::Approx(3.0 * pc.step_distance).epsilon(1e-9));

  s.position = Vec2(0.95, 0.5);
  CHECK(path_check(s, straight, pc, 64).first == Constraint::out_of_bounds);

  s.position = Vec2(0.5, 0.5);
  s.obstacles.push_back({Vec2(0.6, 0.5), Vec2(0.01, 0.01)});
  CHECK(path_check(s, straight, pc, 64).first == Constraint::collision);

  // Shortest admissible spline is below the minimum length.
  s.obstacles.clear();
  const std::vector<double> shortest{-1.0, -1.0, 0.0, -1.0, 0.0};
  CHECK(path_check(s, shortest, pc, 64).first == Constraint::spline_end);

  // A hard sideways end point bends the spline too sharply.
  const std::vector<double> hook{-1.0, -1.0, 1.0, -1.0, -1.0};
  CHECK(path_check(s, hook, pc, 64).curvature > 0.0);
}

TEST_CASE("obstacle margin makes the model conservative") {
  EnvConfig cfg;
  auto plain = make_feasibility_model(EnvKind::path, cfg);
  FeasibilityOptions opt;
  opt.obstacle_margin = 0.02;
  auto padded = make_feasibility_model(EnvKind::path, cfg, opt);
  Rng rng(8);
  std::size_t stricter = 0;
  for (std::uint64_t n = 0; n < 200; ++n) {
    const PartialState s = generate_partial_state(EnvKind::path, cfg, n);
    for (int k = 0; k < 5; ++k) {
      const std::vector<double> a = random_action(5, 1.0, rng);
      const bool p = plain->g(s, a);
      const bool q = padded->g(s, a);
      if (q) CHECK(p);
      if (p && !q) ++stricter;
    }
  }
  CHECK(stricter > 0);
  FeasibilityOptions bad;
  bad.path_points = 1;
  CHECK_THROWS_AS(make_feasibility_model(EnvKind::path, cfg, bad), ConfigError);
}

TEST_CASE("batch evaluation matches single evaluation") {
  const EnvConfig cfg;
  Rng rng(5);
  for (EnvKind kind : {EnvKind::robot, EnvKind::path, EnvKind::toy}) {
    auto model = make_feasibility_model(kind, cfg);
    CHECK(model->kind() == kind);
    const PartialState s = generate_partial_state(kind, cfg, 3);
    const std::size_t dim = action_box(kind, cfg).dim();
    Matrix actions(40, static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < actions.rows(); ++i) {
      const auto a = random_action(dim, kind == EnvKind::robot ? 0.3 : 1.0, rng);
      for (std::size_t k = 0; k < dim; ++k) actions(i, static_cast<Eigen::Index>(k)) = a[k];
    }
    const auto g = model->g_batch(s, actions);
    const auto G = model->G_batch(s, actions);
    for (Eigen::Index i = 0; i < actions.rows(); ++i) {
      const Vector a = actions.row(i).transpose();
      CHECK(static_cast<bool>(g[static_cast<std::size_t>(i)]) == model->g(s, view(a)));
      CHECK(G[static_cast<std::size_t>(i)] == model->G(s, view(a)));
    }
    const PartialState other = generate_partial_state(
        kind == EnvKind::toy ? EnvKind::robot : EnvKind::toy, cfg, 1);
    CHECK_THROWS_AS(model->g(other, view(Vector(actions.row(0).transpose()))), ConfigError);
  }
}

TEST_CASE("trajectory cost") {
  RobotEnv env;
  const double still = trajectory_cost(env, [](const Environment&) { return Vector::Zero(7); }, 3);
  CHECK(still == 0.0);
  const double reckless = trajectory_cost(
      env, [](const Environment&) { return Vector::Constant(7, 1.5); }, 3);
  CHECK(reckless > 0.0);
}
