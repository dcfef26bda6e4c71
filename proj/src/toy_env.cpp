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
#include <limits>
#include <numbers>
#include <random>

#include "actmap/environments.hpp"
#include "actmap/error.hpp"
#include "scene_text.hpp"

namespace actmap {

ToyDiskState reset_toy(Rng& rng, const ToyConfig& config) {
  ToyDiskState s;
  const double phi =
      std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
  const Vec2 offset = config.disk_offset * Vec2(std::cos(phi), std::sin(phi));
  s.disks[0] = {offset, config.disk_radius};
  s.disks[1] = {-offset, config.disk_radius};
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  s.target = Vec2(unit(rng), unit(rng));
  return s;
}

double toy_violation(const ToyDiskState& s, std::span<const double> action) {
  if (action.size() != 2) throw ConfigError("toy action must have 2 components");
  const Vec2 a(action[0], action[1]);
  double best = std::numeric_limits<double>::infinity();
  for (const Disk& d : s.disks) best = std::min(best, (a - d.center).norm() - d.radius);
  return std::max(0.0, best);
}

bool toy_feasible(const ToyDiskState& s, std::span<const double> action) {
  return toy_violation(s, action) == 0.0;
}

ToyEnv::ToyEnv(EnvConfig config) : Environment(std::move(config)) { reset(0); }

ActionBox ToyEnv::action_box() const { return actmap::action_box(EnvKind::toy, config_); }

void ToyEnv::reset(std::uint64_t seed) {
  seed_ = seed;
  rng_.seed(seed);
  state_ = reset_toy(rng_, config_.toy);
}

StepResult ToyEnv::step(std::span<const double> action) {
  StepResult r;
  const double violation = toy_violation(state_, action);
  const std::size_t step = state_.step + 1;
  r.info.joint_cost = violation;
  if (violation > 0.0) {
    r.info.violation = true;
    r.info.constraint = Constraint::outside_disks;
    r.done = true;
    state_.step = step;
    return r;
  }
  const Vec2 a(action[0], action[1]);
  r.reward = 1.0 - (a - state_.target).norm() / std::sqrt(8.0);
  state_ = reset_toy(rng_, config_.toy);
  state_.step = step;
  if (step >= config_.toy.episode_length) {
    r.done = true;
    r.info.timeout = true;
  }
  return r;
}

std::string ToyEnv::scene_text() const {
  detail::SceneWriter w("toy");
  for (const Disk& d : state_.disks) w.record("disk", d.center.x(), d.center.y(), d.radius);
  w.record("target", state_.target.x(), state_.target.y());
  w.record("step", state_.step);
  return w.str();
}

void ToyEnv::load_scene(std::string_view text) {
  ToyDiskState s;
  std::size_t disks = 0;
  for (const auto& r : detail::parse_scene(text, "toy")) {
    const auto& v = r.values;
    if (r.key == "disk") {
      detail::expect_count(r, 3);
      if (disks >= 2) throw ConfigError("toy scene has more than two disks");
      s.disks[disks++] = {Vec2(v[0], v[1]), v[2]};
    } else if (r.key == "target") {
      detail::expect_count(r, 2);
      s.target = Vec2(v[0], v[1]);
    } else if (r.key == "step") {
      detail::expect_count(r, 1);
      s.step = static_cast<std::size_t>(v[0]);
    } else {
      throw ConfigError("unknown toy scene record '" + r.key + "'");
    }
  }
  if (disks != 2) throw ConfigError("toy scene needs exactly two disks");
  state_ = s;
}

std::unique_ptr<Environment> ToyEnv::clone() const { return std::make_unique<ToyEnv>(*this); }

PartialState generate_toy_partial(const ToyConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return reset_toy(rng, config);
}

}  // namespace actmap
