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

#include "actmap/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "actmap/error.hpp"

namespace actmap {
namespace {

// Obstacle terms are summed in sorted order so the result does not depend
// on the order obstacles are listed in.
double canonical_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

double over(double value, double bound) { return std::max(0.0, value - bound); }

double arena_penetration(const Vec2& p, double arena) {
  return over(-p.x(), 0.0) + over(p.x(), arena) + over(-p.y(), 0.0) + over(p.y(), arena);
}

double rect_penetration(const Rect& r, const Vec2& p, double margin) {
  return over(margin, rect_signed_distance(r, p));
}

std::array<double, kArmJoints> predict_joints(const RobotPartialState& s,
                                              std::span<const double> deltas,
                                              const RobotConfig& config) {
  if (deltas.size() != kArmJoints) throw ConfigError("robot action must have 7 joint deltas");
  std::array<double, kArmJoints> q{};
  for (std::size_t i = 0; i < kArmJoints; ++i) {
    q[i] = s.joints[i] + std::clamp(deltas[i], -config.max_delta, config.max_delta);
  }
  return q;
}

}  // namespace

double joint_cost(std::span<const double> costs, std::span<const double> bounds) {
  if (costs.size() != bounds.size()) {
    throw UsageError("joint_cost: " + std::to_string(costs.size()) + " costs but " +
                     std::to_string(bounds.size()) + " bounds");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) total += std::max(0.0, costs[i] - bounds[i]);
  return total;
}

void CostSpec::validate() const {
  for (const auto& t : terms) {
    if (!std::isfinite(t.bound)) throw ConfigError("cost bound for '" + t.id + "' is not finite");
  }
}

double CostSpec::evaluate(std::span<const double> costs) const {
  std::vector<double> bounds;
  bounds.reserve(terms.size());
  for (const auto& t : terms) bounds.push_back(t.bound);
  return joint_cost(costs, bounds);
}

RobotCheck robot_check(const RobotPartialState& s, std::span<const double> deltas,
                       const RobotConfig& config) {
  RobotCheck out;
  out.predicted = predict_joints(s, deltas, config);
  const auto& limits = arm_joint_limits();
  for (std::size_t i = 0; i < kArmJoints; ++i) {
    out.joint_limit += over(out.predicted[i], limits.upper[i]) + over(limits.lower[i], out.predicted[i]);
  }
  const ArmKinematics now = forward_kinematics(s.joints, config.capsule_radius);
  const ArmKinematics next = forward_kinematics(out.predicted, config.capsule_radius);
  for (std::size_t k = 1; k < now.origins.size(); ++k) {
    const double speed = (next.origins[k] - now.origins[k]).norm() / config.dt;
    out.joint_speed += over(speed, config.max_joint_speed);
  }
  std::vector<double> terms;
  for (const Capsule& c : next.capsules) {
    for (const Sphere& o : s.obstacles) {
      const double pen = over(0.0, capsule_sphere_clearance(c, o));
      if (pen > 0.0) terms.push_back(pen);
    }
  }
  out.collision = canonical_sum(terms);
  if (out.joint_limit > 0.0) {
    out.first = Constraint::joint_limit;
  } else if (out.joint_speed > 0.0) {
    out.first = Constraint::joint_speed;
  } else if (out.collision > 0.0) {
    out.first = Constraint::collision;
  }
  return out;
}

bool robot_g(const RobotPartialState& s, std::span<const double> deltas, const RobotConfig& config) {
  const auto q = predict_joints(s, deltas, config);
  const auto& limits = arm_joint_limits();
  for (std::size_t i = 0; i < kArmJoints; ++i) {
    if (over(q[i], limits.upper[i]) > 0.0 || over(limits.lower[i], q[i]) > 0.0) return false;
  }
  const ArmKinematics now = forward_kinematics(s.joints, config.capsule_radius);
  const ArmKinematics next = forward_kinematics(q, config.capsule_radius);
  for (std::size_t k = 1; k < now.origins.size(); ++k) {
    const double speed = (next.origins[k] - now.origins[k]).norm() / config.dt;
    if (over(speed, config.max_joint_speed) > 0.0) return false;
  }
  for (const Capsule& c : next.capsules) {
    for (const Sphere& o : s.obstacles) {
      if (over(0.0, capsule_sphere_clearance(c, o)) > 0.0) return false;
    }
  }
  return true;
}

double robot_G(const RobotPartialState& s, std::span<const double> deltas,
               const RobotConfig& config) {
  return robot_check(s, deltas, config).total();
}

PathCheck path_check(const PathPartialState& s, std::span<const double> action,
                     const PathConfig& config, std::size_t points) {
  if (points < 2) throw UsageError("path feasibility needs at least two points");
  const CubicBezier spline = decode_spline(s.position, s.heading, action, config);
  PathCheck out;
  std::vector<double> obstacle_terms;
  Vec2 prev;
  const double denom = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / denom;
    const Vec2 p = bezier_point(spline, t);
    if (i > 0) out.length += (p - prev).norm();
    prev = p;
    out.out_of_bounds += arena_penetration(p, config.arena);
    for (const Rect& r : s.obstacles) {
      const double pen = rect_penetration(r, p, config.obstacle_margin);
      if (pen > 0.0) obstacle_terms.push_back(pen);
    }
    out.curvature += over(bezier_curvature(spline, t), config.curvature_max);
  }
  out.obstacle = canonical_sum(obstacle_terms);
  const double lo = config.min_length_factor * config.step_distance;
  const double hi = config.max_length_factor * config.step_distance;
  out.length_bound = over(lo, out.length) + over(out.length, hi);
  if (out.out_of_bounds > 0.0) {
    out.first = Constraint::out_of_bounds;
  } else if (out.obstacle > 0.0) {
    out.first = Constraint::collision;
  } else if (out.curvature > 0.0) {
    out.first = Constraint::curvature;
  } else if (out.length_bound > 0.0) {
    out.first = Constraint::spline_end;
  }
  return out;
}

bool path_g(const PathPartialState& s, std::span<const double> action, const PathConfig& config,
            std::size_t points) {
  if (points < 2) throw UsageError("path feasibility needs at least two points");
  const CubicBezier spline = decode_spline(s.position, s.heading, action, config);
  double length = 0.0;
  Vec2 prev;
  const double denom = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / denom;
    const Vec2 p = bezier_point(spline, t);
    if (i > 0) length += (p - prev).norm();
    prev = p;
    if (arena_penetration(p, config.arena) > 0.0) return false;
    if (over(bezier_curvature(spline, t), config.curvature_max) > 0.0) return false;
    for (const Rect& r : s.obstacles) {
      if (rect_penetration(r, p, config.obstacle_margin) > 0.0) return false;
    }
  }
  const double lo = config.min_length_factor * config.step_distance;
  const double hi = config.max_length_factor * config.step_distance;
  return over(lo, length) + over(length, hi) == 0.0;
}

double path_G(const PathPartialState& s, std::span<const double> action,
              const PathConfig& config, std::size_t points) {
  return path_check(s, action, config, points).total();
}

std::vector<std::uint8_t> FeasibilityModel::g_batch(const PartialState& s,
                                                    const Matrix& actions) const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(actions.rows()));
  Vector row;
  for (Eigen::Index i = 0; i < actions.rows(); ++i) {
    row = actions.row(i).transpose();
    out[static_cast<std::size_t>(i)] = g(s, std::span<const double>(row.data(), row.size())) ? 1 : 0;
  }
  return out;
}

std::vector<double> FeasibilityModel::G_batch(const PartialState& s, const Matrix& actions) const {
  std::vector<double> out(static_cast<std::size_t>(actions.rows()));
  Vector row;
  for (Eigen::Index i = 0; i < actions.rows(); ++i) {
    row = actions.row(i).transpose();
    out[static_cast<std::size_t>(i)] = G(s, std::span<const double>(row.data(), row.size()));
  }
  return out;
}

namespace {

template <class State>
const State& expect(const PartialState& s) {
  if (const auto* p = std::get_if<State>(&s)) return *p;
  throw ConfigError("feasibility model received a state of the wrong environment");
}

class RobotModel final : public FeasibilityModel {
 public:
  explicit RobotModel(RobotConfig config) : config_(std::move(config)) {}
  EnvKind kind() const override { return EnvKind::robot; }
  bool g(const PartialState& s, std::span<const double> a) const override {
    return robot_g(expect<RobotPartialState>(s), a, config_);
  }
  double G(const PartialState& s, std::span<const double> a) const override {
    return robot_G(expect<RobotPartialState>(s), a, config_);
  }

 private:
  RobotConfig config_;
};

class PathModel final : public FeasibilityModel {
 public:
  PathModel(PathConfig config, std::size_t points) : config_(std::move(config)), points_(points) {}
  EnvKind kind() const override { return EnvKind::path; }
  bool g(const PartialState& s, std::span<const double> a) const override {
    return path_g(expect<PathPartialState>(s), a, config_, points_);
  }
  double G(const PartialState& s, std::span<const double> a) const override {
    return path_G(expect<PathPartialState>(s), a, config_, points_);
  }

 private:
  PathConfig config_;
  std::size_t points_;
};

class ToyModel final : public FeasibilityModel {
 public:
  EnvKind kind() const override { return EnvKind::toy; }
  bool g(const PartialState& s, std::span<const double> a) const override {
    return toy_feasible(expect<ToyDiskState>(s), a);
  }
  double G(const PartialState& s, std::span<const double> a) const override {
    return toy_violation(expect<ToyDiskState>(s), a);
  }
};

}  // namespace

std::unique_ptr<FeasibilityModel> make_feasibility_model(EnvKind kind, const EnvConfig& config,
                                                         const FeasibilityOptions& options) {
  switch (kind) {
    case EnvKind::robot: return std::make_unique<RobotModel>(config.robot);
    case EnvKind::path: {
      PathConfig pc = config.path;
      if (options.obstacle_margin >= 0.0) pc.obstacle_margin = options.obstacle_margin;
      pc.curvature_max *= options.curvature_scale;
      const std::size_t points =
          options.path_points > 0 ? options.path_points : pc.feasibility_points;
      if (points < 2) throw ConfigError("path feasibility points must be >= 2");
      return std::make_unique<PathModel>(pc, points);
    }
    case EnvKind::toy: return std::make_unique<ToyModel>();
  }
  throw ConfigError("unknown environment kind");
}

double trajectory_cost(Environment& env, const ActionPolicy& policy, std::uint64_t seed,
                       std::size_t max_steps) {
  env.reset(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < max_steps; ++t) {
    const Vector a = policy(env);
    const StepResult r = env.step(std::span<const double>(a.data(), a.size()));
    worst = std::max(worst, r.info.joint_cost);
    if (r.done) break;
  }
  return worst;
}

}  // namespace actmap
