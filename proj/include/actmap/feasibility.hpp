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

#ifndef ACTMAP_FEASIBILITY_HPP_
#define ACTMAP_FEASIBILITY_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "actmap/environments.hpp"

namespace actmap {

/// Sum over i of max(0, cost_i - bound_i).
double joint_cost(std::span<const double> costs, std::span<const double> bounds);

struct CostTerm {
  std::string id;
  double bound = 0.0;
};

struct CostSpec {
  std::vector<CostTerm> terms;

  void validate() const;
  double evaluate(std::span<const double> costs) const;
};

/// Per-constraint breakdown of the robot one-step prediction.
struct RobotCheck {
  std::array<double, kArmJoints> predicted{};
  double joint_limit = 0.0;
  double joint_speed = 0.0;
  double collision = 0.0;
  Constraint first = Constraint::none;

  double total() const { return joint_limit + joint_speed + collision; }
};

RobotCheck robot_check(const RobotPartialState& s, std::span<const double> deltas,
                       const RobotConfig& config);
bool robot_g(const RobotPartialState& s, std::span<const double> deltas, const RobotConfig& config);
double robot_G(const RobotPartialState& s, std::span<const double> deltas,
               const RobotConfig& config);

struct PathCheck {
  double out_of_bounds = 0.0;
  double obstacle = 0.0;
  double curvature = 0.0;
  double length_bound = 0.0;
  double length = 0.0;
  Constraint first = Constraint::none;

  double total() const { return out_of_bounds + obstacle + curvature + length_bound; }
};

/// Approximate spline check at `points` equidistant parameter values.
PathCheck path_check(const PathPartialState& s, std::span<const double> action,
                     const PathConfig& config, std::size_t points);
bool path_g(const PathPartialState& s, std::span<const double> action, const PathConfig& config,
            std::size_t points);
double path_G(const PathPartialState& s, std::span<const double> action,
              const PathConfig& config, std::size_t points);

/// Boolean g and continuous violation G over (partial state, action) with
/// g(s, a) == (G(s, a) == 0). Actions are in environment units.
class FeasibilityModel {
 public:
  virtual ~FeasibilityModel() = default;

  virtual EnvKind kind() const = 0;
  virtual bool g(const PartialState& s, std::span<const double> action) const = 0;
  virtual double G(const PartialState& s, std::span<const double> action) const = 0;

  /// One action per row.
  std::vector<std::uint8_t> g_batch(const PartialState& s, const Matrix& actions) const;
  std::vector<double> G_batch(const PartialState& s, const Matrix& actions) const;
};

struct FeasibilityOptions {
  std::size_t path_points = 0;     // 0 keeps PathConfig::feasibility_points
  double obstacle_margin = -1.0;   // < 0 keeps PathConfig::obstacle_margin
  double curvature_scale = 1.0;    // multiplies the curvature bound
};

std::unique_ptr<FeasibilityModel> make_feasibility_model(EnvKind kind, const EnvConfig& config,
                                                         const FeasibilityOptions& options = {});

using ActionPolicy = std::function<Vector(const Environment&)>;

/// Highest per-step joint cost along one rolled-out trajectory from
/// env.reset(seed). Ends at termination or after `max_steps`.
double trajectory_cost(Environment& env, const ActionPolicy& policy, std::uint64_t seed,
                       std::size_t max_steps = 100000);

}  // namespace actmap

#endif  // ACTMAP_FEASIBILITY_HPP_
