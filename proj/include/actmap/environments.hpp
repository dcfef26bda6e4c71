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

#ifndef ACTMAP_ENVIRONMENTS_HPP_
#define ACTMAP_ENVIRONMENTS_HPP_

#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "actmap/autodiff.hpp"
#include "actmap/geometry.hpp"

namespace actmap {

enum class EnvKind { robot, path, toy };

std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

enum class Constraint {
  none,
  joint_limit,
  joint_speed,
  collision,
  out_of_bounds,
  curvature,
  spline_end,
  outside_disks,
};

std::string_view to_string(Constraint c);

// ---------------------------------------------------------------------------
// Configuration. Values without a published source are marked "default".

struct RobotConfig {
  double dt = 0.5;                              // s per step
  double max_joint_speed = 0.3;                 // m/s, any frame origin
  double max_delta = std::numbers::pi / 2.0;    // rad per step
  std::size_t timeout = 100;
  std::size_t candidate_obstacles = 30;
  std::size_t max_obstacles = 20;
  double w_pos = 1.0;  // default, per meter
  double w_rot = 0.5;  // default, per radian
  double capsule_radius = 0.06;
  double sphere_radius_min = 0.05;
  double sphere_radius_max = 0.12;
  Vec3 workspace_min = Vec3(-0.8, -0.8, 0.0);
  Vec3 workspace_max = Vec3(0.8, 0.8, 1.2);
  double min_flange_height = 0.05;
  // Partial-state generator: more candidates, half of them placed near the arm.
  std::size_t partial_candidates = 40;
  double partial_near_arm_offset = 0.25;
};

struct PathConfig {
  double arena = 1.0;
  double step_distance = 0.05;
  std::size_t obstacles = 30;
  std::size_t targets = 10;
  double target_radius_min = 0.02;
  double target_radius_max = 0.05;
  double rect_side_min = 0.03;
  double rect_side_max = 0.15;
  std::size_t timeout = 200;
  double curvature_max = 1.0 / (3.0 * 0.05);
  double min_length_factor = 2.5;
  double max_length_factor = 3.5;
  std::size_t feasibility_points = 64;
  // Dense samples used by the environment to follow and check the spline.
  std::size_t follow_points = 256;
  double spawn_clearance = 0.02;
  double spawn_wall_margin = 0.1;
  std::size_t partial_obstacles = 45;
  // Extra obstacle inflation used by the conservative projection model.
  double obstacle_margin = 0.0;
  double target_reward = 0.1;
  double completion_reward = 1.0;
};

struct ToyConfig {
  double disk_offset = 0.55;
  double disk_radius = 0.3;
  std::size_t episode_length = 10;
};

struct EnvConfig {
  RobotConfig robot;
  PathConfig path;
  ToyConfig toy;
};

// ---------------------------------------------------------------------------
// States

struct RobotPartialState {
  std::array<double, kArmJoints> joints{};
  std::vector<Sphere> obstacles;
};

struct RobotState {
  std::array<double, kArmJoints> joints{};
  Eigen::Quaterniond target_rotation = Eigen::Quaterniond::Identity();
  Vec3 target_translation = Vec3::Zero();
  std::vector<Sphere> obstacles;
  std::size_t step = 0;

  RobotPartialState partial() const { return {joints, obstacles}; }
};

struct Rect {
  Vec2 center = Vec2::Zero();
  Vec2 half = Vec2::Zero();
};

/// Negative inside, zero on the boundary, positive outside.
double rect_signed_distance(const Rect& r, const Vec2& p);

struct TargetCircle {
  Vec2 center = Vec2::Zero();
  double radius = 0.03;
  bool collected = false;
};

struct PathPartialState {
  Vec2 position = Vec2::Zero();
  Vec2 heading = Vec2::UnitX();  // unit direction of travel
  std::vector<Rect> obstacles;
};

struct PathState {
  Vec2 position = Vec2::Zero();
  Vec2 heading = Vec2::UnitX();
  double speed = 0.05;  // arena units per step
  std::vector<Rect> obstacles;
  std::vector<TargetCircle> targets;
  std::size_t step = 0;

  Vec2 velocity() const { return heading * speed; }
  PathPartialState partial() const { return {position, heading, obstacles}; }
};

struct Disk {
  Vec2 center = Vec2::Zero();
  double radius = 0.3;
};

struct ToyDiskState {
  std::array<Disk, 2> disks;
  Vec2 target = Vec2::Zero();  // objective-only
  std::size_t step = 0;
};

using PartialState = std::variant<RobotPartialState, PathPartialState, ToyDiskState>;

EnvKind kind_of(const PartialState& s);

// ---------------------------------------------------------------------------
// Observations

/// Network input: fixed ego features plus one row-per-element matrix for
/// every variable-length set (obstacles, targets).
struct Observation {
  Vector ego;
  std::vector<Matrix> sets;
};

struct ObservationSpec {
  std::size_t ego_dim = 0;
  std::vector<std::size_t> set_dims;

  friend bool operator==(const ObservationSpec&, const ObservationSpec&) = default;
};

ObservationSpec observation_spec(EnvKind kind, bool feasibility_only);

/// Feasibility-relevant encoding of a partial state.
Observation encode_partial(const PartialState& s, const EnvConfig& config);

struct ActionBox {
  Vector low;
  Vector high;

  std::size_t dim() const { return static_cast<std::size_t>(low.size()); }
  /// Affine map from [-1, 1]^d onto the box.
  Vector from_unit(std::span<const double> u) const;
  Vector to_unit(std::span<const double> a) const;
  Vector clip(std::span<const double> a) const;
};

ActionBox action_box(EnvKind kind, const EnvConfig& config);

// ---------------------------------------------------------------------------
// Transitions

struct StepInfo {
  bool violation = false;
  Constraint constraint = Constraint::none;
  double joint_cost = 0.0;  // sum of clipped constraint violations
  bool timeout = false;
  std::size_t targets_collected = 0;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

template <class State>
struct Transition {
  State next_state;
  StepResult result;
};

RobotState reset_robot(std::uint64_t seed, const RobotConfig& config);
Transition<RobotState> step_robot(const RobotState& s, std::span<const double> deltas,
                                  const RobotConfig& config);
/// Distance and rotation angle from the flange to the target pose.
std::pair<double, double> robot_target_error(const RobotState& s, const RobotConfig& config);

PathState reset_path(std::uint64_t seed, const PathConfig& config);
Transition<PathState> step_path(const PathState& s, std::span<const double> action,
                                const PathConfig& config);

/// Maps 5 parameters in [-1, 1] to a spline anchored at `position` whose
/// initial tangent follows `heading`.
CubicBezier decode_spline(const Vec2& position, const Vec2& heading,
                          std::span<const double> action, const PathConfig& config);

ToyDiskState reset_toy(Rng& rng, const ToyConfig& config);
bool toy_feasible(const ToyDiskState& s, std::span<const double> action);
/// Distance from the action to the nearer disk (0 inside either).
double toy_violation(const ToyDiskState& s, std::span<const double> action);

PartialState generate_partial_state(EnvKind kind, const EnvConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------

class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvKind kind() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual ActionBox action_box() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  /// Action in environment units (inside action_box()).
  virtual StepResult step(std::span<const double> action) = 0;
  virtual Observation observe() const = 0;
  virtual PartialState partial_state() const = 0;
  /// A known always-feasible action, when one exists.
  virtual std::optional<Vector> safe_action() const { return std::nullopt; }
  virtual std::string scene_text() const = 0;
  virtual void load_scene(std::string_view text) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  const EnvConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

 protected:
  explicit Environment(EnvConfig config) : config_(std::move(config)) {}

  EnvConfig config_;
  std::uint64_t seed_ = 0;
};

class RobotEnv final : public Environment {
 public:
  explicit RobotEnv(EnvConfig config = {});

  EnvKind kind() const override { return EnvKind::robot; }
  std::size_t action_dim() const override { return kArmJoints; }
  ActionBox action_box() const override;
  void reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  Observation observe() const override;
  PartialState partial_state() const override { return state_.partial(); }
  std::optional<Vector> safe_action() const override { return Vector::Zero(kArmJoints); }
  std::string scene_text() const override;
  void load_scene(std::string_view text) override;
  std::unique_ptr<Environment> clone() const override;

  const RobotState& state() const { return state_; }
  void set_state(RobotState s) { state_ = std::move(s); }

 private:
  RobotState state_;
};

class PathEnv final : public Environment {
 public:
  explicit PathEnv(EnvConfig config = {});

  EnvKind kind() const override { return EnvKind::path; }
  std::size_t action_dim() const override { return 5; }
  ActionBox action_box() const override;
  void reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  Observation observe() const override;
  PartialState partial_state() const override { return state_.partial(); }
  std::string scene_text() const override;
  void load_scene(std::string_view text) override;
  std::unique_ptr<Environment> clone() const override;

  const PathState& state() const { return state_; }
  void set_state(PathState s) { state_ = std::move(s); }

 private:
  PathState state_;
};

/// Two-disk environment: each step presents two disjoint disks of feasible
/// actions and a target point; actions outside both disks end the episode.
class ToyEnv final : public Environment {
 public:
  explicit ToyEnv(EnvConfig config = {});

  EnvKind kind() const override { return EnvKind::toy; }
  std::size_t action_dim() const override { return 2; }
  ActionBox action_box() const override;
  void reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  Observation observe() const override;
  PartialState partial_state() const override { return state_; }
  /// Center of the first disk.
  std::optional<Vector> safe_action() const override { return Vector(state_.disks[0].center); }
  std::string scene_text() const override;
  void load_scene(std::string_view text) override;
  std::unique_ptr<Environment> clone() const override;

  const ToyDiskState& state() const { return state_; }
  void set_state(ToyDiskState s) { state_ = std::move(s); }

 private:
  ToyDiskState state_;
  Rng rng_;
};

std::unique_ptr<Environment> make_environment(EnvKind kind, const EnvConfig& config);

/// splitmix64 step, used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace actmap

#endif  // ACTMAP_ENVIRONMENTS_HPP_
