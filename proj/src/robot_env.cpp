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
#include <random>

#include "actmap/environments.hpp"
#include "actmap/error.hpp"
#include "actmap/feasibility.hpp"
#include "scene_text.hpp"

namespace actmap {
namespace {

constexpr std::size_t kResetAttempts = 1000;

std::array<double, kArmJoints> sample_joints(Rng& rng) {
  const auto& lim = arm_joint_limits();
  std::array<double, kArmJoints> q{};
  for (std::size_t i = 0; i < kArmJoints; ++i) {
    // Stay 5% away from the limits so the first step has room to move.
    const double margin = 0.05 * (lim.upper[i] - lim.lower[i]);
    q[i] = std::uniform_real_distribution<double>(lim.lower[i] + margin,
                                                  lim.upper[i] - margin)(rng);
  }
  return q;
}

Sphere sample_sphere(Rng& rng, const RobotConfig& c) {
  Sphere s;
  for (int k = 0; k < 3; ++k) {
    s.center[k] = std::uniform_real_distribution<double>(c.workspace_min[k], c.workspace_max[k])(rng);
  }
  s.radius = std::uniform_real_distribution<double>(c.sphere_radius_min, c.sphere_radius_max)(rng);
  return s;
}

bool collides(const ArmKinematics& fk, const Sphere& s) {
  return std::any_of(fk.capsules.begin(), fk.capsules.end(),
                     [&](const Capsule& c) { return capsule_sphere_clearance(c, s) < 0.0; });
}

double rotation_angle(const Eigen::Matrix3d& rotation, const Eigen::Quaterniond& target) {
  return Eigen::Quaterniond(rotation).normalized().angularDistance(target);
}

}  // namespace

RobotState reset_robot(std::uint64_t seed, const RobotConfig& config) {
  // Bounded retries: a failed attempt regenerates from a derived seed.
  for (std::uint64_t round = 0; round < 16; ++round) {
    Rng rng(round == 0 ? seed : derive_seed(seed, round));
    for (std::size_t attempt = 0; attempt < kResetAttempts; ++attempt) {
      const auto start = sample_joints(rng);
      const auto goal = sample_joints(rng);
      const ArmKinematics fs = forward_kinematics(start, config.capsule_radius);
      const ArmKinematics fg = forward_kinematics(goal, config.capsule_radius);
      if (fs.flange.translation.z() < config.min_flange_height) continue;
      if (fg.flange.translation.z() < config.min_flange_height) continue;
      RobotState s;
      s.joints = start;
      s.target_translation = fg.flange.translation;
      s.target_rotation = Eigen::Quaterniond(fg.flange.rotation).normalized();
      for (std::size_t k = 0; k < config.candidate_obstacles; ++k) {
        const Sphere sphere = sample_sphere(rng, config);
        if (collides(fs, sphere) || collides(fg, sphere)) continue;
        if (s.obstacles.size() < config.max_obstacles) s.obstacles.push_back(sphere);
      }
      return s;
    }
  }
  throw Error("robot reset could not find a valid configuration");
}

std::pair<double, double> robot_target_error(const RobotState& s, const RobotConfig& config) {
  const ArmKinematics fk = forward_kinematics(s.joints, config.capsule_radius);
  return {(fk.flange.translation - s.target_translation).norm(),
          rotation_angle(fk.flange.rotation, s.target_rotation)};
}

Transition<RobotState> step_robot(const RobotState& s, std::span<const double> deltas,
                                  const RobotConfig& config) {
  const RobotCheck check = robot_check(s.partial(), deltas, config);
  Transition<RobotState> t{s, {}};
  t.next_state.joints = check.predicted;
  t.next_state.step = s.step + 1;
  StepResult& r = t.result;
  r.info.joint_cost = check.total();
  r.info.violation = check.first != Constraint::none;
  r.info.constraint = check.first;
  if (r.info.violation) {
    r.done = true;
    return t;
  }
  const auto [d0, a0] = robot_target_error(s, config);
  const auto [d1, a1] = robot_target_error(t.next_state, config);
  r.reward = config.w_pos * (d0 - d1) + config.w_rot * (a0 - a1);
  if (t.next_state.step >= config.timeout) {
    r.done = true;
    r.info.timeout = true;
  }
  return t;
}

RobotEnv::RobotEnv(EnvConfig config) : Environment(std::move(config)) { reset(0); }

ActionBox RobotEnv::action_box() const { return actmap::action_box(EnvKind::robot, config_); }

void RobotEnv::reset(std::uint64_t seed) {
  seed_ = seed;
  state_ = reset_robot(seed, config_.robot);
}

StepResult RobotEnv::step(std::span<const double> action) {
  auto t = step_robot(state_, action, config_.robot);
  state_ = std::move(t.next_state);
  return t.result;
}

std::string RobotEnv::scene_text() const {
  detail::SceneWriter w("robot");
  const auto& q = state_.joints;
  w.record("joints", q[0], q[1], q[2], q[3], q[4], q[5], q[6]);
  const auto& r = state_.target_rotation;
  w.record("target_rotation", r.w(), r.x(), r.y(), r.z());
  const auto& p = state_.target_translation;
  w.record("target_translation", p.x(), p.y(), p.z());
  w.record("step", state_.step);
  for (const Sphere& s : state_.obstacles) {
    w.record("sphere", s.center.x(), s.center.y(), s.center.z(), s.radius);
  }
  return w.str();
}

void RobotEnv::load_scene(std::string_view text) {
  RobotState s;
  for (const auto& r : detail::parse_scene(text, "robot")) {
    if (r.key == "joints") {
      detail::expect_count(r, kArmJoints);
      std::copy(r.values.begin(), r.values.end(), s.joints.begin());
    } else if (r.key == "target_rotation") {
      detail::expect_count(r, 4);
      s.target_rotation = Eigen::Quaterniond(r.values[0], r.values[1], r.values[2], r.values[3]);
    } else if (r.key == "target_translation") {
      detail::expect_count(r, 3);
      s.target_translation = Vec3(r.values[0], r.values[1], r.values[2]);
    } else if (r.key == "step") {
      detail::expect_count(r, 1);
      s.step = static_cast<std::size_t>(r.values[0]);
    } else if (r.key == "sphere") {
      detail::expect_count(r, 4);
      s.obstacles.push_back({Vec3(r.values[0], r.values[1], r.values[2]), r.values[3]});
    } else {
      throw ConfigError("unknown robot scene record '" + r.key + "'");
    }
  }
  state_ = std::move(s);
}

std::unique_ptr<Environment> RobotEnv::clone() const { return std::make_unique<RobotEnv>(*this); }

PartialState generate_robot_partial(const RobotConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  RobotPartialState s;
  s.joints = sample_joints(rng);
  const ArmKinematics fk = forward_kinematics(s.joints, config.capsule_radius);
  std::uniform_int_distribution<std::size_t> pick(0, fk.capsules.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < config.partial_candidates; ++k) {
    Sphere sphere = sample_sphere(rng, config);
    if (k % 2 == 1) {
      // Near-arm candidate: random point on a link, offset in a random direction.
      const Capsule& c = fk.capsules[pick(rng)];
      const Vec3 on_link = c.a + unit(rng) * (c.b - c.a);
      Vec3 dir(normal(rng), normal(rng), normal(rng));
      dir /= std::max(dir.norm(), 1e-12);
      sphere.center = on_link + dir * (unit(rng) * config.partial_near_arm_offset +
                                        config.capsule_radius + sphere.radius);
    }
    if (!collides(fk, sphere)) s.obstacles.push_back(sphere);
  }
  return s;
}

}  // namespace actmap
