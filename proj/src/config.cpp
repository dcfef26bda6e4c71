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

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "actmap/config.hpp"
#include "actmap/error.hpp"

namespace actmap {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_value(const std::string& s);

template <>
double parse_value<double>(const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a finite number");
  }
  return v;
}

template <>
std::size_t parse_value<std::size_t>(const std::string& s) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::invalid_argument("expected a non-negative integer");
  }
  return v;
}

template <>
bool parse_value<bool>(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("expected true or false");
}

template <>
std::string parse_value<std::string>(const std::string& s) {
  return s;
}

template <>
std::vector<std::size_t> parse_value<std::vector<std::size_t>>(const std::string& s) {
  std::vector<std::size_t> out;
  for (const std::string& item : split_list(s)) out.push_back(parse_value<std::size_t>(item));
  return out;
}

template <>
EnvKind parse_value<EnvKind>(const std::string& s) {
  return env_kind_from_string(s);
}

template <>
Preset parse_value<Preset>(const std::string& s) {
  return preset_from_string(s);
}

template <>
AlgorithmId parse_value<AlgorithmId>(const std::string& s) {
  return parse_algorithm_id(s);
}

std::string format_value(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}
std::string format_value(std::size_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(const std::string& v) { return v; }
std::string format_value(EnvKind v) { return std::string(to_string(v)); }
std::string format_value(Preset v) { return std::string(to_string(v)); }
std::string format_value(const AlgorithmId& v) { return v.name(); }
std::string format_value(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(v[i]);
  }
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(RunConfig&)> get;
};

template <class Access>
Field field(std::string section, std::string key, Access access) {
  using T = std::remove_cvref_t<decltype(access(std::declval<RunConfig&>()))>;
  return {std::move(section), std::move(key),
          [access](RunConfig& c, const std::string& s) { access(c) = parse_value<T>(s); },
          [access](RunConfig& c) { return format_value(access(c)); }};
}

#define ACTMAP_FIELD(section, key, expr) field(section, key, [](RunConfig& c) -> auto& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      ACTMAP_FIELD("run", "name", c.name),
      ACTMAP_FIELD("run", "preset", c.preset),
      ACTMAP_FIELD("run", "env", c.env),
      ACTMAP_FIELD("run", "algorithm", c.algorithm),
      ACTMAP_FIELD("run", "seeds", c.seeds),
      ACTMAP_FIELD("run", "total_steps", c.total_steps),
      ACTMAP_FIELD("run", "num_envs", c.num_envs),
      ACTMAP_FIELD("run", "progress_interval", c.progress_interval),
      ACTMAP_FIELD("run", "checkpoint_interval", c.checkpoint_interval),
      ACTMAP_FIELD("run", "eval_episodes", c.eval_episodes),
      ACTMAP_FIELD("run", "workers", c.workers),
      ACTMAP_FIELD("run", "output_dir", c.output_dir),
      ACTMAP_FIELD("run", "feasibility_checkpoint", c.feasibility_checkpoint),

      ACTMAP_FIELD("robot", "dt", c.env_config.robot.dt),
      ACTMAP_FIELD("robot", "max_joint_speed", c.env_config.robot.max_joint_speed),
      ACTMAP_FIELD("robot", "max_delta", c.env_config.robot.max_delta),
      ACTMAP_FIELD("robot", "timeout", c.env_config.robot.timeout),
      ACTMAP_FIELD("robot", "candidate_obstacles", c.env_config.robot.candidate_obstacles),
      ACTMAP_FIELD("robot", "max_obstacles", c.env_config.robot.max_obstacles),
      ACTMAP_FIELD("robot", "w_pos", c.env_config.robot.w_pos),
      ACTMAP_FIELD("robot", "w_rot", c.env_config.robot.w_rot),
      ACTMAP_FIELD("robot", "capsule_radius", c.env_config.robot.capsule_radius),
      ACTMAP_FIELD("robot", "sphere_radius_min", c.env_config.robot.sphere_radius_min),
      ACTMAP_FIELD("robot", "sphere_radius_max", c.env_config.robot.sphere_radius_max),
      ACTMAP_FIELD("robot", "min_flange_height", c.env_config.robot.min_flange_height),
      ACTMAP_FIELD("robot", "partial_candidates", c.env_config.robot.partial_candidates),
      ACTMAP_FIELD("robot", "partial_near_arm_offset", c.env_config.robot.partial_near_arm_offset),

      ACTMAP_FIELD("path", "arena", c.env_config.path.arena),
      ACTMAP_FIELD("path", "step_distance", c.env_config.path.step_distance),
      ACTMAP_FIELD("path", "obstacles", c.env_config.path.obstacles),
      ACTMAP_FIELD("path", "targets", c.env_config.path.targets),
      ACTMAP_FIELD("path", "target_radius_min", c.env_config.path.target_radius_min),
      ACTMAP_FIELD("path", "target_radius_max", c.env_config.path.target_radius_max),
      ACTMAP_FIELD("path", "rect_side_min", c.env_config.path.rect_side_min),
      ACTMAP_FIELD("path", "rect_side_max", c.env_config.path.rect_side_max),
      ACTMAP_FIELD("path", "timeout", c.env_config.path.timeout),
      ACTMAP_FIELD("path", "curvature_max", c.env_config.path.curvature_max),
      ACTMAP_FIELD("path", "min_length_factor", c.env_config.path.min_length_factor),
      ACTMAP_FIELD("path", "max_length_factor", c.env_config.path.max_length_factor),
      ACTMAP_FIELD("path", "feasibility_points", c.env_config.path.feasibility_points),
      ACTMAP_FIELD("path", "follow_points", c.env_config.path.follow_points),
      ACTMAP_FIELD("path", "spawn_clearance", c.env_config.path.spawn_clearance),
      ACTMAP_FIELD("path", "spawn_wall_margin", c.env_config.path.spawn_wall_margin),
      ACTMAP_FIELD("path", "partial_obstacles", c.env_config.path.partial_obstacles),
      ACTMAP_FIELD("path", "obstacle_margin", c.env_config.path.obstacle_margin),
      ACTMAP_FIELD("path", "target_reward", c.env_config.path.target_reward),
      ACTMAP_FIELD("path", "completion_reward", c.env_config.path.completion_reward),

      ACTMAP_FIELD("toy", "disk_offset", c.env_config.toy.disk_offset),
      ACTMAP_FIELD("toy", "disk_radius", c.env_config.toy.disk_radius),
      ACTMAP_FIELD("toy", "episode_length", c.env_config.toy.episode_length),

      ACTMAP_FIELD("agent", "gamma", c.agent.gamma),
      ACTMAP_FIELD("agent", "actor_lr", c.agent.actor_lr),
      ACTMAP_FIELD("agent", "critic_lr", c.agent.critic_lr),
      ACTMAP_FIELD("agent", "entropy", c.agent.entropy),
      ACTMAP_FIELD("agent", "tau", c.agent.tau),
      ACTMAP_FIELD("agent", "policy_delay", c.agent.policy_delay),
      ACTMAP_FIELD("agent", "batch", c.agent.batch),
      ACTMAP_FIELD("agent", "train_steps", c.agent.train_steps),
      ACTMAP_FIELD("agent", "train_every", c.agent.train_every),
      ACTMAP_FIELD("agent", "replay_capacity", c.agent.replay_capacity),
      ACTMAP_FIELD("agent", "rollout_size", c.agent.rollout_size),
      ACTMAP_FIELD("agent", "epochs", c.agent.epochs),
      ACTMAP_FIELD("agent", "gae_lambda", c.agent.gae_lambda),
      ACTMAP_FIELD("agent", "clip", c.agent.clip),
      ACTMAP_FIELD("agent", "normalize_advantages", c.agent.normalize_advantages),
      ACTMAP_FIELD("agent", "log_std_min", c.agent.log_std_min),
      ACTMAP_FIELD("agent", "log_std_max", c.agent.log_std_max),
      ACTMAP_FIELD("agent", "cost_gamma", c.agent.cost_gamma),
      ACTMAP_FIELD("agent", "cost_threshold", c.agent.cost_threshold),
      ACTMAP_FIELD("agent", "safety_lr", c.agent.safety_lr),
      ACTMAP_FIELD("agent", "multiplier_lr", c.agent.multiplier_lr),
      ACTMAP_FIELD("agent", "initial_multiplier", c.agent.initial_multiplier),
      ACTMAP_FIELD("agent", "set_hidden", c.agent.set_hidden),
      ACTMAP_FIELD("agent", "trunk_hidden", c.agent.trunk_hidden),

      ACTMAP_FIELD("feasibility", "samples", c.feasibility.samples),
      ACTMAP_FIELD("feasibility", "states_per_batch", c.feasibility.states_per_batch),
      ACTMAP_FIELD("feasibility", "sigma", c.feasibility.sigma),
      ACTMAP_FIELD("feasibility", "sigma_prime_factor", c.feasibility.sigma_prime_factor),
      ACTMAP_FIELD("feasibility", "steps", c.feasibility.steps),
      ACTMAP_FIELD("feasibility", "learning_rate", c.feasibility.learning_rate),
      ACTMAP_FIELD("feasibility", "eval_interval", c.feasibility.eval_interval),
      ACTMAP_FIELD("feasibility", "eval_states", c.feasibility.eval_states),
      ACTMAP_FIELD("feasibility", "eval_samples", c.feasibility.eval_samples),
      ACTMAP_FIELD("feasibility", "set_hidden", c.feasibility.set_hidden),
      ACTMAP_FIELD("feasibility", "trunk_hidden", c.feasibility.trunk_hidden),

      ACTMAP_FIELD("wrappers", "resample_budget", c.resample_budget),
      ACTMAP_FIELD("wrappers", "projection_step", c.projection.step),
      ACTMAP_FIELD("wrappers", "projection_iterations", c.projection.iterations),
      ACTMAP_FIELD("wrappers", "projection_overshoot", c.projection.overshoot),
      ACTMAP_FIELD("wrappers", "projection_fd_step", c.projection.fd_step),
      ACTMAP_FIELD("wrappers", "projection_path_points", c.projection_model.path_points),
      ACTMAP_FIELD("wrappers", "projection_obstacle_margin", c.projection_model.obstacle_margin),
      ACTMAP_FIELD("wrappers", "projection_curvature_scale", c.projection_model.curvature_scale),

      ACTMAP_FIELD("harness", "timing_decisions", c.timing_decisions),
      ACTMAP_FIELD("harness", "sweep_points", c.sweep_points),
      ACTMAP_FIELD("harness", "sweep_pairs", c.sweep_pairs),
      ACTMAP_FIELD("harness", "sweep_reference", c.sweep_reference),
  };
  return all;
}

#undef ACTMAP_FIELD

const Field* find_field(const std::string& section, const std::string& key) {
  for (const Field& f : fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

void collect(std::vector<std::string>& out, const std::function<void()>& check) {
  try {
    check();
  } catch (const ConfigError& e) {
    if (e.fields().empty()) {
      out.emplace_back(e.what());
    } else {
      out.insert(out.end(), e.fields().begin(), e.fields().end());
    }
  }
}

}  // namespace

std::string AlgorithmId::name() const {
  const std::string b(to_string(base));
  if (lagrangian) return "lag-" + b;
  switch (wrapper) {
    case Wrapper::none: return b;
    case Wrapper::action_mapping: return "am-" + b;
    default: return b + "+" + std::string(to_string(wrapper));
  }
}

AlgorithmId parse_algorithm_id(std::string_view id) {
  AlgorithmId out;
  std::string s = trim(id);
  const auto plus = s.find('+');
  std::string suffix;
  if (plus != std::string::npos) {
    suffix = s.substr(plus + 1);
    s = s.substr(0, plus);
    if (s.empty()) s = "sac";
  }
  if (s.rfind("am-", 0) == 0) {
    out.wrapper = Wrapper::action_mapping;
    s = s.substr(3);
  } else if (s.rfind("lag-", 0) == 0) {
    out.lagrangian = true;
    s = s.substr(4);
  }
  if (s != "sac" && s != "ppo") throw ConfigError("unknown algorithm '" + std::string(id) + "'");
  out.base = algorithm_from_string(s);
  if (!suffix.empty()) {
    if (out.wrapper != Wrapper::none || out.lagrangian) {
      throw ConfigError("algorithm '" + std::string(id) + "' combines incompatible variants");
    }
    if (suffix == "replacement") {
      out.wrapper = Wrapper::replacement;
    } else if (suffix == "resampling") {
      out.wrapper = Wrapper::resampling;
    } else if (suffix == "projection") {
      out.wrapper = Wrapper::projection;
    } else {
      throw ConfigError("unknown wrapper '" + suffix + "'");
    }
  }
  return out;
}

std::string_view to_string(Preset p) { return p == Preset::desk ? "desk" : "full"; }

Preset preset_from_string(std::string_view name) {
  if (name == "desk") return Preset::desk;
  if (name == "full") return Preset::full;
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

RunConfig preset_config(Preset preset, EnvKind env, const AlgorithmId& algorithm) {
  RunConfig c;
  c.preset = preset;
  c.env = env;
  c.algorithm = algorithm;
  c.agent = algorithm.base == Algorithm::ppo ? AgentConfig::ppo_defaults()
                                             : AgentConfig::sac_defaults();
  if (preset == Preset::full) {
    c.total_steps = env == EnvKind::path ? 100000000 : 25000000;
    c.feasibility.steps = algorithm.base == Algorithm::ppo ? 1000000 : 500000;
    return c;
  }
  // Desk scale: minutes on one core.
  c.total_steps = 100000;
  c.agent.replay_capacity = 100000;
  c.feasibility.samples = 256;
  c.feasibility.states_per_batch = 4;
  c.feasibility.learning_rate = 1e-3;
  c.feasibility.steps = env == EnvKind::toy ? 10000 : 2000;
  c.feasibility.eval_interval = 1000;
  c.feasibility.eval_samples = 256;
  return c;
}

void RunConfig::validate() const {
  std::vector<std::string> bad;
  if (name.empty() || name.find('/') != std::string::npos) {
    bad.push_back("run.name: must be a non-empty file name");
  }
  if (seeds.empty()) bad.push_back("run.seeds: at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    bad.push_back("run.seeds: duplicate seed");
  }
  if (checkpoint_interval == 0) bad.push_back("run.checkpoint_interval: must be positive");
  if (output_dir.empty()) bad.push_back("run.output_dir: must not be empty");
  if (env_config.path.feasibility_points < 2) bad.push_back("path.feasibility_points: must be >= 2");
  if (timing_decisions == 0) bad.push_back("harness.timing_decisions: must be positive");
  if (sweep_pairs == 0) bad.push_back("harness.sweep_pairs: must be positive");
  for (std::size_t s : sweep_points) {
    if (s < 2) bad.push_back("harness.sweep_points: every value must be >= 2");
  }
  if (sweep_reference < 2) bad.push_back("harness.sweep_reference: must be >= 2");
  collect(bad, [&] { train_config(seeds.empty() ? 0 : seeds.front()).validate(); });
  collect(bad, [&] { feasibility.validate(); });
  if (!bad.empty()) throw ConfigError("invalid configuration", bad);
}

TrainConfig RunConfig::train_config(std::uint64_t seed) const {
  TrainConfig t;
  t.env = env;
  t.env_config = env_config;
  t.algorithm = algorithm.base;
  t.wrapper = algorithm.wrapper;
  t.lagrangian = algorithm.lagrangian;
  t.agent = agent;
  t.total_steps = total_steps;
  t.num_envs = num_envs;
  t.progress_interval = progress_interval;
  t.eval_episodes = eval_episodes;
  t.seed = seed;
  t.projection = projection;
  t.projection_model = projection_model;
  t.resample_budget = resample_budget;
  t.workers = workers;
  return t;
}

RunConfig parse_config(std::string_view text) { return parse_config(text, {}); }

RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " +
                      e.message());
  }

  std::vector<std::string> bad;
  for (const auto& [where, value] : overrides) {
    const auto dot = where.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == where.size() ||
        where.find('.', dot + 1) != std::string::npos) {
      bad.push_back(where + ": overrides take the form section.key=value");
      continue;
    }
    tree.put(pt::ptree::path_type(where, '.'), value);
  }
  if (!bad.empty()) throw ConfigError("invalid configuration", bad);
  const auto read = [&](const char* key, const std::string& fallback) {
    return tree.get<std::string>(std::string("run.") + key, fallback);
  };
  Preset preset = Preset::desk;
  EnvKind env = EnvKind::toy;
  AlgorithmId algorithm;
  collect(bad, [&] { preset = preset_from_string(trim(read("preset", "desk"))); });
  collect(bad, [&] {
    try {
      env = env_kind_from_string(trim(read("env", "toy")));
    } catch (const Error& e) {
      throw ConfigError(std::string("run.env: ") + e.what());
    }
  });
  collect(bad, [&] { algorithm = parse_algorithm_id(read("algorithm", "sac")); });
  if (!bad.empty()) throw ConfigError("invalid configuration", bad);

  RunConfig c = preset_config(preset, env, algorithm);
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      if (body.data().empty()) continue;  // empty section
      bad.push_back(section + ": keys must appear inside a [section]");
      continue;
    }
    for (const auto& [key, value] : body) {
      const Field* f = find_field(section, key);
      const std::string where = section + "." + key;
      if (f == nullptr) {
        bad.push_back(where + ": unknown key");
        continue;
      }
      const std::string raw = trim(value.data());
      try {
        f->set(c, raw);
      } catch (const std::exception& e) {
        bad.push_back(where + ": invalid value '" + raw + "' (" + e.what() + ")");
      }
    }
  }
  // Keys that failed to parse keep their defaults, so validation still applies.
  collect(bad, [&] { c.validate(); });
  if (!bad.empty()) throw ConfigError("invalid configuration", bad);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string effective_config(const RunConfig& config) {
  RunConfig c = config;
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(c) << '\n';
  }
  return out.str();
}

}  // namespace actmap
