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

#include "actmap/environments.hpp"
#include "actmap/error.hpp"

using namespace actmap;

namespace {

bool same_observation(const Observation& a, const Observation& b) {
  if (a.ego.size() != b.ego.size() || a.sets.size() != b.sets.size()) return false;
  if (a.ego != b.ego) return false;
  for (std::size_t i = 0; i < a.sets.size(); ++i) {
    if (a.sets[i].rows() != b.sets[i].rows() || a.sets[i].cols() != b.sets[i].cols()) return false;
    if (a.sets[i] != b.sets[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("observation specs") {
  CHECK(observation_spec(EnvKind::robot, false) == ObservationSpec{21, {4}});
  CHECK(observation_spec(EnvKind::robot, true) == ObservationSpec{7, {4}});
  CHECK(observation_spec(EnvKind::path, false) == ObservationSpec{4, {4, 4}});
  CHECK(observation_spec(EnvKind::path, true) == ObservationSpec{4, {4}});
  CHECK(observation_spec(EnvKind::toy, false) == ObservationSpec{8, {}});
  CHECK(observation_spec(EnvKind::toy, true) == ObservationSpec{6, {}});
}

TEST_CASE("environments produce observations matching their spec") {
  for (EnvKind kind : {EnvKind::robot, EnvKind::path, EnvKind::toy}) {
    CAPTURE(to_string(kind));
    auto env = make_environment(kind, {});
    env->reset(3);
    const ObservationSpec spec = observation_spec(kind, false);
    const Observation obs = env->observe();
    CHECK(static_cast<std::size_t>(obs.ego.size()) == spec.ego_dim);
    REQUIRE(obs.sets.size() == spec.set_dims.size());
    for (std::size_t i = 0; i < obs.sets.size(); ++i) {
      CHECK(static_cast<std::size_t>(obs.sets[i].cols()) == spec.set_dims[i]);
    }
    const Observation part = encode_partial(env->partial_state(), env->config());
    const ObservationSpec pspec = observation_spec(kind, true);
    CHECK(static_cast<std::size_t>(part.ego.size()) == pspec.ego_dim);
    REQUIRE(part.sets.size() == pspec.set_dims.size());
    CHECK(kind_of(env->partial_state()) == kind);
  }
}

TEST_CASE("action boxes") {
  const EnvConfig cfg;
  const ActionBox robot = action_box(EnvKind::robot, cfg);
  REQUIRE(robot.dim() == 7);
  CHECK(robot.high[0] == doctest::Approx(std::numbers::pi / 2.0));
  CHECK(robot.low[6] == doctest::Approx(-std::numbers::pi / 2.0));
  CHECK(action_box(EnvKind::path, cfg).dim() == 5);
  CHECK(action_box(EnvKind::toy, cfg).dim() == 2);

  const std::vector<double> u{-1.0, -0.5, 0.0, 0.25, 0.5, 0.75, 1.0};
  const Vector a = robot.from_unit(u);
  const Vector back = robot.to_unit(view(a));
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(back[static_cast<Eigen::Index>(i)] == doctest::Approx(u[i]));
  const std::vector<double> wild{9.0, -9.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  const Vector c = robot.clip(wild);
  CHECK(c[0] == robot.high[0]);
  CHECK(c[1] == robot.low[1]);
  CHECK_THROWS_AS(robot.from_unit(std::vector<double>{0.0}), ConfigError);
}

TEST_CASE("reset is deterministic per seed") {
  for (EnvKind kind : {EnvKind::robot, EnvKind::path, EnvKind::toy}) {
    CAPTURE(to_string(kind));
    auto a = make_environment(kind, {});
    auto b = make_environment(kind, {});
    a->reset(17);
    b->reset(17);
    CHECK(a->scene_text() == b->scene_text());
    CHECK(same_observation(a->observe(), b->observe()));
    b->reset(18);
    CHECK(a->scene_text() != b->scene_text());
  }
}

TEST_CASE("scene text round trip") {
  for (EnvKind kind : {EnvKind::robot, EnvKind::path, EnvKind::toy}) {
    CAPTURE(to_string(kind));
    auto a = make_environment(kind, {});
    auto b = make_environment(kind, {});
    a->reset(5);
    b->reset(6);
    b->load_scene(a->scene_text());
    CHECK(b->scene_text() == a->scene_text());
    CHECK(same_observation(a->observe(), b->observe()));
  }
  auto toy = make_environment(EnvKind::toy, {});
  CHECK_THROWS_AS(toy->load_scene("garbage"), ConfigError);
}

TEST_CASE("clone is independent") {
  auto env = make_environment(EnvKind::toy, {});
  env->reset(2);
  auto copy = env->clone();
  const std::string before = copy->scene_text();
  env->step(view(*env->safe_action()));
  CHECK(copy->scene_text() == before);
}

TEST_CASE("toy rewards, violations and timeout") {
  ToyEnv env;
  env.reset(11);
  const ToyDiskState s = env.state();
  const Vec2 inside = s.disks[1].center;
  const StepResult ok = env.step(std::vector<double>{inside.x(), inside.y()});
  CHECK_FALSE(ok.info.violation);
  CHECK(ok.reward == doctest::Approx(1.0 - (inside - s.target).norm() / std::sqrt(8.0)).epsilon(1e-12));
  CHECK_FALSE(ok.done);
  CHECK(env.state().step == 1);

  // The origin lies between the disks.
  const StepResult bad = env.step(std::vector<double>{0.0, 0.0});
  CHECK(bad.info.violation);
  CHECK(bad.info.constraint == Constraint::outside_disks);
  CHECK(bad.done);
  CHECK(bad.reward == 0.0);
  CHECK(bad.info.joint_cost == doctest::Approx(0.55 - 0.3));

  env.reset(12);
  std::size_t steps = 0;
  StepResult r;
  do {
    r = env.step(view(*env.safe_action()));
    ++steps;
    CHECK_FALSE(r.info.violation);
  } while (!r.done);
  CHECK(steps == 10);
  CHECK(r.info.timeout);
}

TEST_CASE("toy feasibility helpers") {
  ToyDiskState s;
  s.disks[0] = {Vec2(0.5, 0.0), 0.3};
  s.disks[1] = {Vec2(-0.5, 0.0), 0.3};
  CHECK(toy_feasible(s, std::vector<double>{0.7, 0.0}));
  CHECK(toy_feasible(s, std::vector<double>{0.79, 0.0}));
  CHECK_FALSE(toy_feasible(s, std::vector<double>{0.0, 0.0}));
  CHECK(toy_violation(s, std::vector<double>{0.0, 0.0}) == doctest::Approx(0.2));
  CHECK_THROWS_AS(toy_violation(s, std::vector<double>{0.0}), ConfigError);
}

TEST_CASE("robot zero action is feasible and large shoulder motion is too fast") {
  RobotEnv env;
  env.reset(4);
  auto copy = env.clone();
  const StepResult still = env.step(view(*env.safe_action()));
  CHECK_FALSE(still.info.violation);

  RobotState s = env.state();
  s.joints = {0.0, 0.0, 0.0, -1.5, 0.0, 1.5, 0.0};
  s.obstacles.clear();
  s.step = 0;
  env.set_state(s);
  std::vector<double> fast(7, 0.0);
  fast[1] = 1.5;
  const StepResult r = env.step(fast);
  CHECK(r.info.violation);
  CHECK(r.info.constraint == Constraint::joint_speed);
  CHECK(r.done);
  CHECK(r.reward == 0.0);
  CHECK(r.info.joint_cost > 0.0);
}

TEST_CASE("robot reward is the weighted progress toward the target") {
  RobotConfig cfg;
  RobotState s = reset_robot(9, cfg);
  s.obstacles.clear();
  std::vector<double> small(7, 0.0);
  small[0] = 0.05;
  const auto [d0, r0] = robot_target_error(s, cfg);
  const Transition<RobotState> t = step_robot(s, small, cfg);
  REQUIRE_FALSE(t.result.info.violation);
  const auto [d1, r1] = robot_target_error(t.next_state, cfg);
  CHECK(t.result.reward == doctest::Approx(cfg.w_pos * (d0 - d1) + cfg.w_rot * (r0 - r1)).epsilon(1e-9));
  CHECK(t.next_state.joints[0] == doctest::Approx(s.joints[0] + 0.05));
}

TEST_CASE("robot episodes time out") {
  RobotConfig cfg;
  cfg.timeout = 3;
  RobotState s = reset_robot(1, cfg);
  const std::vector<double> zero(7, 0.0);
  StepResult r;
  for (int i = 0; i < 3; ++i) {
    const auto t = step_robot(s, zero, cfg);
    s = t.next_state;
    r = t.result;
  }
  CHECK(r.done);
  CHECK(r.info.timeout);
}

TEST_CASE("path spline is anchored at the agent and follows its heading") {
  PathConfig cfg;
  const Vec2 pos(0.4, 0.6);
  const Vec2 heading = Vec2(1.0, 1.0).normalized();
  const std::vector<double> action{0.0, 0.0, 0.0, 0.0, 0.0};
  const CubicBezier b = decode_spline(pos, heading, action, cfg);
  CHECK((b.p[0] - pos).norm() == doctest::Approx(0.0));
  const Vec2 tangent = bezier_derivative(b, 0.0).normalized();
  CHECK((tangent - heading).norm() <= 1e-12);
  CHECK_THROWS_AS(decode_spline(pos, heading, std::vector<double>{0.0}, cfg), ConfigError);
}

TEST_CASE("path steps advance by the step distance") {
  PathConfig cfg;
  PathState s;
  s.position = Vec2(0.5, 0.5);
  s.heading = Vec2::UnitX();
  s.speed = cfg.step_distance;
  s.targets.push_back({Vec2(0.9, 0.9), 0.03, false});
  // Control points straight ahead: zero curvature and enough length.
  const std::vector<double> straight{0.0, 0.0, 0.0, 0.0, 0.0};
  const auto t = step_path(s, straight, cfg);
  CHECK_FALSE(t.result.info.violation);
  CHECK((t.next_state.position - s.position).norm() == doctest::Approx(cfg.step_distance).epsilon(1e-3));
  CHECK(t.next_state.step == 1);

  PathState blocked = s;
  blocked.obstacles.push_back({Vec2(0.52, 0.5), Vec2(0.01, 0.05)});
  const auto hit = step_path(blocked, straight, cfg);
  CHECK(hit.result.info.violation);
  CHECK(hit.result.info.constraint == Constraint::collision);
  CHECK(hit.result.done);

  PathState edge = s;
  edge.position = Vec2(0.98, 0.5);
  const auto out = step_path(edge, straight, cfg);
  CHECK(out.result.info.constraint == Constraint::out_of_bounds);

  PathState near = s;
  near.targets = {{Vec2(0.53, 0.5), 0.02, false}, {Vec2(0.1, 0.1), 0.02, false}};
  const auto got = step_path(near, straight, cfg);
  CHECK(got.result.info.targets_collected == 1);
  CHECK(got.result.reward == doctest::Approx(cfg.target_reward));
  CHECK_FALSE(got.result.done);
}

TEST_CASE("rect signed distance") {
  const Rect r{Vec2(0.0, 0.0), Vec2(1.0, 0.5)};
  CHECK(rect_signed_distance(r, Vec2(0.0, 0.0)) == doctest::Approx(-0.5));
  CHECK(rect_signed_distance(r, Vec2(2.0, 0.0)) == doctest::Approx(1.0));
  CHECK(rect_signed_distance(r, Vec2(1.0, 0.5)) == doctest::Approx(0.0));
  CHECK(rect_signed_distance(r, Vec2(4.0, 4.5)) == doctest::Approx(5.0));
}

TEST_CASE("partial state generators are deterministic") {
  const EnvConfig cfg;
  for (EnvKind kind : {EnvKind::robot, EnvKind::path, EnvKind::toy}) {
    const Observation a = encode_partial(generate_partial_state(kind, cfg, 77), cfg);
    const Observation b = encode_partial(generate_partial_state(kind, cfg, 77), cfg);
    CHECK(same_observation(a, b));
  }
}

TEST_CASE("safe actions and names") {
  CHECK_FALSE(make_environment(EnvKind::path, {})->safe_action().has_value());
  CHECK(make_environment(EnvKind::robot, {})->safe_action()->isZero());
  CHECK(env_kind_from_string("toy") == EnvKind::toy);
  CHECK_THROWS_AS(env_kind_from_string("moon"), ConfigError);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}
