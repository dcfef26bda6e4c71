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
#include <numbers>
#include <random>

#include "actmap/environments.hpp"
#include "actmap/error.hpp"
#include "scene_text.hpp"

namespace actmap {
namespace {

constexpr std::size_t kResetAttempts = 1000;

double lerp_unit(double a, double lo, double hi) {
  return lo + 0.5 * (std::clamp(a, -1.0, 1.0) + 1.0) * (hi - lo);
}

Vec2 random_heading(Rng& rng) {
  const double phi = std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
  return {std::cos(phi), std::sin(phi)};
}

Rect random_rect(Rng& rng, const PathConfig& c) {
  std::uniform_real_distribution<double> pos(0.0, c.arena);
  std::uniform_real_distribution<double> side(c.rect_side_min, c.rect_side_max);
  Rect r;
  r.center = Vec2(pos(rng), pos(rng));
  r.half = 0.5 * Vec2(side(rng), side(rng));
  return r;
}

bool inside_any(const std::vector<Rect>& rects, const Vec2& p, double clearance) {
  return std::any_of(rects.begin(), rects.end(),
                     [&](const Rect& r) { return rect_signed_distance(r, p) < clearance; });
}

double segment_distance_2d(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

double over(double value, double bound) { return std::max(0.0, value - bound); }

}  // namespace

CubicBezier decode_spline(const Vec2& position, const Vec2& heading,
                          std::span<const double> action, const PathConfig& config) {
  if (action.size() != 5) throw ConfigError("path action must have 5 parameters");
  const double L = config.step_distance;
  const Vec2 h = heading.normalized();
  const Vec2 left(-h.y(), h.x());
  const auto world = [&](double x, double y) { return Vec2(position + x * h + y * left); };
  CubicBezier b;
  b.p[0] = position;
  // The zero action decodes to a straight, uniformly parameterized spline of length 3 L.
  b.p[1] = world(lerp_unit(action[0], 0.25, 1.75) * L, 0.0);
  b.p[2] = world(lerp_unit(action[1], 1.0, 3.0) * L, lerp_unit(action[2], -1.5, 1.5) * L);
  b.p[3] = world(lerp_unit(action[3], 2.0, 4.0) * L, lerp_unit(action[4], -2.0, 2.0) * L);
  return b;
}

PathState reset_path(std::uint64_t seed, const PathConfig& config) {
  for (std::uint64_t round = 0; round < 16; ++round) {
    Rng rng(round == 0 ? seed : derive_seed(seed, round));
    PathState s;
    s.speed = config.step_distance;
    for (std::size_t i = 0; i < config.obstacles; ++i) s.obstacles.push_back(random_rect(rng, config));

    std::size_t attempts = 0;
    std::uniform_real_distribution<double> radius(config.target_radius_min, config.target_radius_max);
    while (s.targets.size() < config.targets && attempts < kResetAttempts) {
      ++attempts;
      TargetCircle t;
      t.radius = radius(rng);
      std::uniform_real_distribution<double> pos(t.radius, config.arena - t.radius);
      t.center = Vec2(pos(rng), pos(rng));
      if (!inside_any(s.obstacles, t.center, 0.0)) s.targets.push_back(t);
    }
    if (s.targets.size() < config.targets) continue;

    bool placed = false;
    std::uniform_real_distribution<double> spawn(config.spawn_wall_margin,
                                                 config.arena - config.spawn_wall_margin);
    for (std::size_t k = 0; k < kResetAttempts && !placed; ++k) {
      const Vec2 p(spawn(rng), spawn(rng));
      if (inside_any(s.obstacles, p, config.spawn_clearance)) continue;
      s.position = p;
      s.heading = random_heading(rng);
      placed = true;
    }
    if (placed) return s;
  }
  throw Error("path reset could not place the agent");
}

Transition<PathState> step_path(const PathState& s, std::span<const double> action,
                                const PathConfig& config) {
  if (config.follow_points < 2) throw ConfigError("path follow_points must be >= 2");
  const CubicBezier spline = decode_spline(s.position, s.heading, action, config);
  const std::size_t M = config.follow_points;
  const std::vector<Vec2> pts = bezier_samples(spline, M);
  std::vector<double> arc(M, 0.0);
  for (std::size_t k = 1; k < M; ++k) arc[k] = arc[k - 1] + (pts[k] - pts[k - 1]).norm();

  Transition<PathState> t{s, {}};
  StepResult& r = t.result;
  const double travel = s.speed;

  // Parameter where the traveled arc length reaches `travel`.
  double t_end = 1.0;
  std::size_t k_end = M - 1;
  const bool reaches_end = arc.back() <= travel;
  if (!reaches_end) {
    k_end = static_cast<std::size_t>(std::lower_bound(arc.begin(), arc.end(), travel) - arc.begin());
    const double seg = arc[k_end] - arc[k_end - 1];
    const double frac = seg > 0.0 ? (travel - arc[k_end - 1]) / seg : 0.0;
    t_end = (static_cast<double>(k_end - 1) + frac) / static_cast<double>(M - 1);
  }
  std::vector<Vec2> traveled(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(k_end));
  traveled.push_back(bezier_point(spline, t_end));

  double bounds = 0.0, obstacle = 0.0, curvature = 0.0;
  for (std::size_t k = 0; k < traveled.size(); ++k) {
    const Vec2& p = traveled[k];
    bounds += over(-p.x(), 0.0) + over(p.x(), config.arena) + over(-p.y(), 0.0) +
              over(p.y(), config.arena);
    for (const Rect& rect : s.obstacles) obstacle += over(0.0, rect_signed_distance(rect, p));
    const double tk = k + 1 < traveled.size()
                          ? static_cast<double>(k) / static_cast<double>(M - 1)
                          : t_end;
    curvature += over(bezier_curvature(spline, tk), config.curvature_max);
  }
  const double shortfall = reaches_end ? travel - arc.back() : 0.0;
  r.info.joint_cost = bounds + obstacle + curvature + shortfall;
  if (bounds > 0.0) {
    r.info.constraint = Constraint::out_of_bounds;
  } else if (obstacle > 0.0) {
    r.info.constraint = Constraint::collision;
  } else if (curvature > 0.0) {
    r.info.constraint = Constraint::curvature;
  } else if (reaches_end) {
    r.info.constraint = Constraint::spline_end;
  }
  t.next_state.step = s.step + 1;
  if (r.info.constraint != Constraint::none) {
    r.info.violation = true;
    r.done = true;
    return t;
  }

  for (TargetCircle& target : t.next_state.targets) {
    if (target.collected) continue;
    for (std::size_t k = 1; k < traveled.size(); ++k) {
      if (segment_distance_2d(traveled[k - 1], traveled[k], target.center) <= target.radius) {
        target.collected = true;
        ++r.info.targets_collected;
        r.reward += config.target_reward;
        break;
      }
    }
  }
  t.next_state.position = traveled.back();
  const Vec2 tangent = bezier_derivative(spline, t_end);
  if (tangent.norm() > 0.0) t.next_state.heading = tangent.normalized();

  const bool all = std::all_of(t.next_state.targets.begin(), t.next_state.targets.end(),
                               [](const TargetCircle& c) { return c.collected; });
  if (all) {
    r.reward += config.completion_reward;
    r.done = true;
  } else if (t.next_state.step >= config.timeout) {
    r.done = true;
    r.info.timeout = true;
  }
  return t;
}

PathEnv::PathEnv(EnvConfig config) : Environment(std::move(config)) { reset(0); }

ActionBox PathEnv::action_box() const { return actmap::action_box(EnvKind::path, config_); }

void PathEnv::reset(std::uint64_t seed) {
  seed_ = seed;
  state_ = reset_path(seed, config_.path);
}

StepResult PathEnv::step(std::span<const double> action) {
  auto t = step_path(state_, action, config_.path);
  state_ = std::move(t.next_state);
  return t.result;
}

std::string PathEnv::scene_text() const {
  detail::SceneWriter w("path");
  w.record("position", state_.position.x(), state_.position.y());
  w.record("heading", state_.heading.x(), state_.heading.y());
  w.record("speed", state_.speed);
  w.record("step", state_.step);
  for (const Rect& r : state_.obstacles) {
    w.record("rect", r.center.x(), r.center.y(), r.half.x(), r.half.y());
  }
  for (const TargetCircle& t : state_.targets) {
    w.record("target", t.center.x(), t.center.y(), t.radius, t.collected ? 1 : 0);
  }
  return w.str();
}

void PathEnv::load_scene(std::string_view text) {
  PathState s;
  s.speed = config_.path.step_distance;
  for (const auto& r : detail::parse_scene(text, "path")) {
    const auto& v = r.values;
    if (r.key == "position") {
      detail::expect_count(r, 2);
      s.position = Vec2(v[0], v[1]);
    } else if (r.key == "heading") {
      detail::expect_count(r, 2);
      s.heading = Vec2(v[0], v[1]);
      if (s.heading.norm() == 0.0) throw ConfigError("path scene heading must be non-zero");
      s.heading.normalize();
    } else if (r.key == "speed") {
      detail::expect_count(r, 1);
      s.speed = v[0];
    } else if (r.key == "step") {
      detail::expect_count(r, 1);
      s.step = static_cast<std::size_t>(v[0]);
    } else if (r.key == "rect") {
      detail::expect_count(r, 4);
      s.obstacles.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3])});
    } else if (r.key == "target") {
      detail::expect_count(r, 4);
      s.targets.push_back({Vec2(v[0], v[1]), v[2], v[3] != 0.0});
    } else {
      throw ConfigError("unknown path scene record '" + r.key + "'");
    }
  }
  state_ = std::move(s);
}

std::unique_ptr<Environment> PathEnv::clone() const { return std::make_unique<PathEnv>(*this); }

PartialState generate_path_partial(const PathConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  PathPartialState s;
  std::uniform_real_distribution<double> pos(0.0, config.arena);
  s.position = Vec2(pos(rng), pos(rng));
  s.heading = random_heading(rng);
  for (std::size_t i = 0; i < config.partial_obstacles; ++i) {
    const Rect r = random_rect(rng, config);
    if (rect_signed_distance(r, s.position) > 0.0) s.obstacles.push_back(r);
  }
  return s;
}

}  // namespace actmap
