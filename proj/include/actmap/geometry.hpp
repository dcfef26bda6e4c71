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

#ifndef ACTMAP_GEOMETRY_HPP_
#define ACTMAP_GEOMETRY_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Geometry>

namespace actmap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Transform = Eigen::Matrix4d;

inline constexpr std::size_t kArmJoints = 7;

/// One row of a Denavit-Hartenberg table (modified / Craig convention).
struct DHRow {
  double a = 0.0;      // m
  double d = 0.0;      // m
  double alpha = 0.0;  // rad
  double theta = 0.0;  // rad, added to the joint angle
};

/// RotX(alpha) * TransX(a) * RotZ(theta) * TransZ(d).
Transform dh_transform(const DHRow& row);

/// 7 joint rows followed by the fixed flange row.
const std::array<DHRow, kArmJoints + 1>& arm_dh_table();

struct JointLimits {
  std::array<double, kArmJoints> lower;
  std::array<double, kArmJoints> upper;
};

const JointLimits& arm_joint_limits();

struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.06;
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.1;
};

struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();
};

struct ArmKinematics {
  // Base origin followed by the origin of each DH frame (joints 1..7, flange).
  std::array<Vec3, kArmJoints + 2> origins;
  std::vector<Capsule> capsules;
  Pose flange;
};

ArmKinematics forward_kinematics(std::span<const double> joints, double capsule_radius = 0.06);

double segment_point_distance(const Vec3& a, const Vec3& b, const Vec3& p);

/// Distance between the capsule core segment and the sphere center minus both
/// radii. Negative means the shapes overlap.
double capsule_sphere_clearance(const Capsule& capsule, const Sphere& sphere);

struct CubicBezier {
  std::array<Vec2, 4> p;
};

Vec2 bezier_point(const CubicBezier& b, double t);
Vec2 bezier_derivative(const CubicBezier& b, double t);
Vec2 bezier_second_derivative(const CubicBezier& b, double t);

/// Unsigned curvature; +infinity where the first derivative vanishes.
double bezier_curvature(const CubicBezier& b, double t);

/// Points at S equidistant parameter values t = i / (S - 1).
std::vector<Vec2> bezier_samples(const CubicBezier& b, std::size_t samples);

/// Chord length through S equidistant parameter samples. Throws UsageError
/// for S < 2.
double polyline_length(const CubicBezier& b, std::size_t samples);

}  // namespace actmap

#endif  // ACTMAP_GEOMETRY_HPP_
