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

#include "actmap/environments.hpp"

#include <algorithm>
#include <cmath>

#include "actmap/error.hpp"

namespace actmap {

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::robot: return "robot";
    case EnvKind::path: return "path";
    case EnvKind::toy: return "toy";
  }
  return "unknown";
}

EnvKind env_kind_from_string(std::string_view name) {
  if (name == "robot") return EnvKind::robot;
  if (name == "path") return EnvKind::path;
  if (name == "toy") return EnvKind::toy;
  throw ConfigError("unknown environment '" + std::string(name) + "' (robot | path | toy)");
}

std::string_view to_string(Constraint c) {
  switch (c) {
    case Constraint::none: return "none";
    case Constraint::joint_limit: return "joint_limit";
    case Constraint::joint_speed: return "joint_speed";
    case Constraint::collision: return "collision";
    case Constraint::out_of_bounds: return "out_of_bounds";
    case Constraint::curvature: return "curvature";
    case Constraint::spline_end: return "spline_end";
    case Constraint::outside_disks: return "outside_disks";
  }
  return "unknown";
}

double rect_signed_distance(const Rect& r, const Vec2& p) {
  const Vec2 q = (p - r.center).cwiseAbs() - r.half;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(std::max(q.x(), q.y()), 0.0);
  return outside + inside;
}

EnvKind kind_of(const PartialState& s) {
  switch (s.index()) {
    case 0: return EnvKind::robot;
    case 1: return EnvKind::path;
    default: return EnvKind::toy;
  }
}

ObservationSpec observation_spec(EnvKind kind, bool feasibility_only) {
  switch (kind) {
    case EnvKind::robot: return {feasibility_only ? 7u : 21u, {4}};
    case EnvKind::path:
      return feasibility_only ? ObservationSpec{4, {4}} : ObservationSpec{4, {4, 4}};
    case EnvKind::toy: return {feasibility_only ? 6u : 8u, {}};
  }
  throw ConfigError("unknown environment kind");
}

Vector ActionBox::from_unit(std::span<const double> u) const {
  if (u.size() != dim()) throw ConfigError("action dimension mismatch");
  Vector a(low.size());
  for (Eigen::Index i = 0; i < low.size(); ++i) {
    a[i] = low[i] + 0.5 * (u[static_cast<std::size_t>(i)] + 1.0) * (high[i] - low[i]);
  }
  return a;
}

Vector ActionBox::to_unit(std::span<const double> a) const {
  if (a.size() != dim()) throw ConfigError("action dimension mismatch");
  Vector u(low.size());
  for (Eigen::Index i = 0; i < low.size(); ++i) {
    u[i] = 2.0 * (a[static_cast<std::size_t>(i)] - low[i]) / (high[i] - low[i]) - 1.0;
  }
  return u;
}

Vector ActionBox::clip(std::span<const double> a) const {
  if (a.size() != dim()) throw ConfigError("action dimension mismatch");
  Vector out(low.size());
  for (Eigen::Index i = 0; i < low.size(); ++i) {
    out[i] = std::clamp(a[static_cast<std::size_t>(i)], low[i], high[i]);
  }
  return out;
}

ActionBox action_box(EnvKind kind, const EnvConfig& config) {
  switch (kind) {
    case EnvKind::robot:
      return {Vector::Constant(kArmJoints, -config.robot.max_delta),
              Vector::Constant(kArmJoints, config.robot.max_delta)};
    case EnvKind::path: return {Vector::Constant(5, -1.0), Vector::Constant(5, 1.0)};
    case EnvKind::toy: return {Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)};
  }
  throw ConfigError("unknown environment kind");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

Vector normalized_joints(const std::array<double, kArmJoints>& q) {
  const auto& lim = arm_joint_limits();
  Vector out(kArmJoints);
  for (std::size_t i = 0; i < kArmJoints; ++i) {
    out[static_cast<Eigen::Index>(i)] =
        2.0 * (q[i] - lim.lower[i]) / (lim.upper[i] - lim.lower[i]) - 1.0;
  }
  return out;
}

Matrix sphere_rows(const std::vector<Sphere>& spheres) {
  Matrix m(static_cast<Eigen::Index>(spheres.size()), 4);
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m.block<1, 3>(r, 0) = spheres[i].center.transpose();
    m(r, 3) = spheres[i].radius;
  }
  return m;
}

// Path features are expressed in the agent's heading frame and scaled so a
// quarter of the arena maps to one unit.
Vec2 to_local(const Vec2& origin, const Vec2& heading, const Vec2& p, double arena) {
  const Vec2 d = p - origin;
  const Vec2 left(-heading.y(), heading.x());
  return Vec2(d.dot(heading), d.dot(left)) * (4.0 / arena);
}

Matrix rect_rows(const PathPartialState& s, double arena) {
  Matrix m(static_cast<Eigen::Index>(s.obstacles.size()), 4);
  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vec2 local = to_local(s.position, s.heading, s.obstacles[i].center, arena);
    m(r, 0) = local.x();
    m(r, 1) = local.y();
    m(r, 2) = s.obstacles[i].half.x() * 4.0 / arena;
    m(r, 3) = s.obstacles[i].half.y() * 4.0 / arena;
  }
  return m;
}

Vector path_ego(const Vec2& position, const Vec2& heading, double arena) {
  Vector e(4);
  e << 2.0 * position.x() / arena - 1.0, 2.0 * position.y() / arena - 1.0, heading.x(),
      heading.y();
  return e;
}

Vector disk_features(const ToyDiskState& s) {
  Vector e(6);
  e << s.disks[0].center.x(), s.disks[0].center.y(), s.disks[0].radius, s.disks[1].center.x(),
      s.disks[1].center.y(), s.disks[1].radius;
  return e;
}

}  // namespace

Observation encode_partial(const PartialState& s, const EnvConfig& config) {
  return std::visit(
      [&](const auto& st) -> Observation {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, RobotPartialState>) {
          return {normalized_joints(st.joints), {sphere_rows(st.obstacles)}};
        } else if constexpr (std::is_same_v<T, PathPartialState>) {
          return {path_ego(st.position, st.heading, config.path.arena),
                  {rect_rows(st, config.path.arena)}};
        } else {
          return {disk_features(st), {}};
        }
      },
      s);
}

Observation RobotEnv::observe() const {
  const ArmKinematics fk = forward_kinematics(state_.joints, config_.robot.capsule_radius);
  Vector ego(21);
  ego.head<7>() = normalized_joints(state_.joints);
  ego.segment<3>(7) = fk.flange.translation;
  ego.segment<3>(10) = state_.target_translation;
  ego.segment<3>(13) = state_.target_translation - fk.flange.translation;
  const auto& q = state_.target_rotation;
  ego.segment<4>(16) << q.w(), q.x(), q.y(), q.z();
  ego[20] = static_cast<double>(state_.step) / static_cast<double>(config_.robot.timeout);
  return {ego, {sphere_rows(state_.obstacles)}};
}

Observation PathEnv::observe() const {
  const double arena = config_.path.arena;
  const PathPartialState p = state_.partial();
  Matrix targets(static_cast<Eigen::Index>(state_.targets.size()), 4);
  for (std::size_t i = 0; i < state_.targets.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vec2 local = to_local(state_.position, state_.heading, state_.targets[i].center, arena);
    targets(r, 0) = local.x();
    targets(r, 1) = local.y();
    targets(r, 2) = state_.targets[i].radius * 4.0 / arena;
    targets(r, 3) = state_.targets[i].collected ? 1.0 : 0.0;
  }
  return {path_ego(state_.position, state_.heading, arena), {rect_rows(p, arena), targets}};
}

Observation ToyEnv::observe() const {
  Vector ego(8);
  ego.head<6>() = disk_features(state_);
  ego[6] = state_.target.x();
  ego[7] = state_.target.y();
  return {ego, {}};
}

PartialState generate_robot_partial(const RobotConfig& config, std::uint64_t seed);
PartialState generate_path_partial(const PathConfig& config, std::uint64_t seed);
PartialState generate_toy_partial(const ToyConfig& config, std::uint64_t seed);

PartialState generate_partial_state(EnvKind kind, const EnvConfig& config, std::uint64_t seed) {
  switch (kind) {
    case EnvKind::robot: return generate_robot_partial(config.robot, seed);
    case EnvKind::path: return generate_path_partial(config.path, seed);
    case EnvKind::toy: return generate_toy_partial(config.toy, seed);
  }
  throw ConfigError("unknown environment kind");
}

std::unique_ptr<Environment> make_environment(EnvKind kind, const EnvConfig& config) {
  switch (kind) {
    case EnvKind::robot: return std::make_unique<RobotEnv>(config);
    case EnvKind::path: return std::make_unique<PathEnv>(config);
    case EnvKind::toy: return std::make_unique<ToyEnv>(config);
  }
  throw ConfigError("unknown environment kind");
}

}  // namespace actmap
