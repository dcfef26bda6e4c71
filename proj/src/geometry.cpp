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

#include "actmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "actmap/error.hpp"

namespace actmap {

Transform dh_transform(const DHRow& row) {
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  const double ct = std::cos(row.theta), st = std::sin(row.theta);
  Transform t;
  // clang-format off
  t << ct,      -st,      0.0,  row.a,
       st * ca,  ct * ca, -sa, -sa * row.d,
       st * sa,  ct * sa,  ca,  ca * row.d,
       0.0,      0.0,      0.0, 1.0;
  // clang-format on
  return t;
}

const std::array<DHRow, kArmJoints + 1>& arm_dh_table() {
  constexpr double h = std::numbers::pi / 2.0;
  static const std::array<DHRow, kArmJoints + 1> table = {{
      {0.0, 0.333, 0.0, 0.0},
      {0.0, 0.0, -h, 0.0},
      {0.0, 0.316, h, 0.0},
      {0.0825, 0.0, h, 0.0},
      {-0.0825, 0.384, -h, 0.0},
      {0.0, 0.0, h, 0.0},
      {0.088, 0.0, h, 0.0},
      {0.0, 0.107, 0.0, 0.0},
  }};
  return table;
}

const JointLimits& arm_joint_limits() {
  static const JointLimits limits = {
      {-2.7437, -1.7837, -2.9007, -3.0421, -2.8065, 0.5445, -3.0159},
      {2.7437, 1.7837, 2.9007, -0.1518, 2.8065, 4.5169, 3.0159},
  };
  return limits;
}

ArmKinematics forward_kinematics(std::span<const double> joints, double capsule_radius) {
  if (joints.size() != kArmJoints) throw ConfigError("forward_kinematics expects 7 joints");
  const auto& table = arm_dh_table();
  ArmKinematics out;
  Transform t = Transform::Identity();
  out.origins[0] = Vec3::Zero();
  for (std::size_t i = 0; i < table.size(); ++i) {
    DHRow row = table[i];
    if (i < kArmJoints) row.theta += joints[i];
    t = t * dh_transform(row);
    out.origins[i + 1] = t.block<3, 1>(0, 3);
  }
  out.capsules.reserve(out.origins.size() - 1);
  for (std::size_t i = 0; i + 1 < out.origins.size(); ++i) {
    out.capsules.push_back(Capsule{out.origins[i], out.origins[i + 1], capsule_radius});
  }
  out.flange.rotation = t.block<3, 3>(0, 0);
  out.flange.translation = t.block<3, 1>(0, 3);
  return out;
}

double segment_point_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

double capsule_sphere_clearance(const Capsule& capsule, const Sphere& sphere) {
  return segment_point_distance(capsule.a, capsule.b, sphere.center) -
         (capsule.radius + sphere.radius);
}

Vec2 bezier_point(const CubicBezier& b, double t) {
  const double u = 1.0 - t;
  return u * u * u * b.p[0] + 3.0 * u * u * t * b.p[1] + 3.0 * u * t * t * b.p[2] +
         t * t * t * b.p[3];
}

Vec2 bezier_derivative(const CubicBezier& b, double t) {
  const double u = 1.0 - t;
  return 3.0 * u * u * (b.p[1] - b.p[0]) + 6.0 * u * t * (b.p[2] - b.p[1]) +
         3.0 * t * t * (b.p[3] - b.p[2]);
}

Vec2 bezier_second_derivative(const CubicBezier& b, double t) {
  return 6.0 * (1.0 - t) * (b.p[2] - 2.0 * b.p[1] + b.p[0]) +
         6.0 * t * (b.p[3] - 2.0 * b.p[2] + b.p[1]);
}

double bezier_curvature(const CubicBezier& b, double t) {
  const Vec2 d1 = bezier_derivative(b, t);
  const Vec2 d2 = bezier_second_derivative(b, t);
  const double speed2 = d1.squaredNorm();
  if (speed2 == 0.0) return std::numeric_limits<double>::infinity();
  const double cross = d1.x() * d2.y() - d1.y() * d2.x();
  return std::abs(cross) / std::pow(speed2, 1.5);
}

std::vector<Vec2> bezier_samples(const CubicBezier& b, std::size_t samples) {
  if (samples < 2) throw UsageError("need at least two spline samples");
  std::vector<Vec2> pts;
  pts.reserve(samples);
  const double denom = static_cast<double>(samples - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    pts.push_back(bezier_point(b, static_cast<double>(i) / denom));
  }
  return pts;
}

double polyline_length(const CubicBezier& b, std::size_t samples) {
  const auto pts = bezier_samples(b, samples);
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

}  // namespace actmap
