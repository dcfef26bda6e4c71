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
#include <ostream>

#include "actmap/error.hpp"
#include "actmap/parallel.hpp"
#include "actmap/training.hpp"

namespace actmap {
namespace {

// Seed streams. Lane l, episode k resets with derive(derive(seed, kLaneEnv + l), k).
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kUpdateStream = 2;
constexpr std::uint64_t kEvalStream = 4;
constexpr std::uint64_t kLaneEnv = 100;
constexpr std::uint64_t kLaneAct = 100000;

std::unique_ptr<FeasibilityModel> wrapper_model(const TrainConfig& c) {
  switch (c.wrapper) {
    case Wrapper::replacement:
    case Wrapper::resampling:
      return make_feasibility_model(c.env, c.env_config);
    case Wrapper::projection:
      return make_feasibility_model(c.env, c.env_config, c.projection_model);
    default:
      return nullptr;
  }
}

void check_mapping(const TrainConfig& c, const FeasibilityPolicy* mapping) {
  if (c.wrapper != Wrapper::action_mapping) return;
  if (mapping == nullptr) throw ConfigError("action mapping needs a pretrained feasibility policy");
  if (mapping->kind() != c.env) {
    throw ConfigError("feasibility policy was trained for the " +
                      std::string(to_string(mapping->kind())) + " environment");
  }
}

std::uint64_t lane_reset_seed(std::uint64_t seed, std::size_t lane, std::size_t episode) {
  return derive_seed(derive_seed(seed, kLaneEnv + lane), episode);
}

struct Lane {
  std::unique_ptr<Environment> env;
  Rng rng;
  Observation obs;
  std::size_t episode = 0;
  double ret = 0.0;
  std::size_t length = 0;
  std::size_t interventions = 0;
  std::size_t targets = 0;
  double max_joint_cost = 0.0;
};

struct LaneStep {
  Record rec;
  StepResult result;
  Decision decision;
};

struct Window {
  std::size_t episodes = 0;
  double returns = 0.0;
  std::size_t transitions = 0;
  std::size_t violations = 0;
  std::size_t updates = 0;
  double critic = 0.0, actor = 0.0, safety = 0.0;

  void add(const UpdateStats& s) {
    ++updates;
    critic += s.critic_loss;
    actor += s.actor_loss;
    safety += s.safety_loss;
  }
};

double mean_or_nan(double sum, std::size_t n) {
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

void write_number(std::ostream& out, double v) {
  if (std::isfinite(v)) out << v;
}

}  // namespace

void TrainConfig::validate() const {
  std::vector<std::string> fields;
  if (total_steps == 0) fields.push_back("run.total_steps: must be positive");
  if (num_envs == 0) fields.push_back("run.num_envs: must be positive");
  if (progress_interval == 0) fields.push_back("run.progress_interval: must be positive");
  if (wrapper == Wrapper::resampling && resample_budget == 0) {
    fields.push_back("agent.resample_budget: must be positive");
  }
  if (wrapper == Wrapper::replacement && env == EnvKind::path) {
    fields.push_back("run.algorithm: replacement needs a known safe action; the path environment has none");
  }
  if (lagrangian && wrapper != Wrapper::none) {
    fields.push_back("run.algorithm: the Lagrangian variant runs without an action wrapper");
  }
  if (!fields.empty()) throw ConfigError("invalid training configuration", fields);
  agent.validate();
}

ActorSetup actor_setup(EnvKind env, const EnvConfig& config) {
  return {observation_spec(env, false), action_box(env, config).dim()};
}

TrainResult train(const TrainConfig& config, const FeasibilityPolicy* mapping,
                  const TrainSinks& sinks, std::unique_ptr<Agent> resume, std::size_t start_step) {
  config.validate();
  check_mapping(config, mapping);
  const ActorSetup setup = actor_setup(config.env, config.env_config);

  TrainResult result;
  if (resume) {
    if (resume->algorithm() != config.algorithm || resume->dim() != setup.dim ||
        !(resume->setup().obs == setup.obs) || resume->lagrangian() != config.lagrangian) {
      throw ConfigError("checkpoint does not match the configured agent");
    }
    result.agent = std::move(resume);
  } else {
    Rng init(derive_seed(config.seed, kInitStream));
    result.agent = make_agent(config.algorithm, setup, config.agent, config.lagrangian, init);
  }
  Agent& agent = *result.agent;
  const auto model = wrapper_model(config);
  const DecisionPipeline pipeline(config.wrapper, agent, mapping, model.get(), config.projection,
                                  config.resample_budget);

  std::vector<Lane> lanes(config.num_envs);
  for (std::size_t l = 0; l < lanes.size(); ++l) {
    Lane& lane = lanes[l];
    lane.env = make_environment(config.env, config.env_config);
    lane.env->reset(lane_reset_seed(config.seed, l, 0));
    lane.rng.seed(derive_seed(config.seed, kLaneAct + l));
    lane.obs = lane.env->observe();
  }

  const bool is_sac = config.algorithm == Algorithm::sac;
  auto* sac = dynamic_cast<SacAgent*>(&agent);
  auto* ppo = dynamic_cast<PpoAgent*>(&agent);
  ReplayBuffer replay(is_sac ? config.agent.replay_capacity : 1);
  RolloutBuffer rollout(is_sac ? 1 : config.agent.rollout_size);
  Rng update_rng(derive_seed(config.seed, kUpdateStream));

  std::size_t step = start_step;
  std::size_t since_update = 0;
  std::size_t total_updates = 0;
  std::size_t skipped = 0, projection_failures = 0, exhausted = 0;
  Window window;
  std::vector<LaneStep> batch;

  while (step < config.total_steps) {
    const std::size_t n = std::min(config.num_envs, config.total_steps - step);
    batch.assign(n, LaneStep{});
    parallel_for(n, config.workers, [&](std::size_t i) {
      Lane& lane = lanes[i];
      LaneStep& out = batch[i];
      out.rec.obs = lane.obs;
      out.rec.lane = i;
      out.decision = pipeline.decide(*lane.env, lane.obs, lane.rng, out.rec);
      out.result = lane.env->step(view(out.decision.action));
      out.rec.reward = out.result.reward;
      out.rec.cost = out.result.info.violation ? 1.0 : 0.0;
      out.rec.terminal = out.result.done && !out.result.info.timeout;
      out.rec.end = out.result.done;
      out.rec.next_obs = lane.env->observe();
    });

    for (std::size_t i = 0; i < n; ++i) {
      Lane& lane = lanes[i];
      LaneStep& ls = batch[i];
      const StepInfo& info = ls.result.info;
      ++step;
      lane.ret += ls.result.reward;
      ++lane.length;
      lane.interventions += ls.decision.intervened ? 1 : 0;
      lane.targets += info.targets_collected;
      lane.max_joint_cost = std::max(lane.max_joint_cost, info.joint_cost);
      projection_failures += ls.decision.projection_failed ? 1 : 0;
      exhausted += ls.decision.resample_exhausted ? 1 : 0;
      ++window.transitions;
      window.violations += info.violation ? 1 : 0;

      if (ls.result.done) {
        EpisodeRow row;
        row.step = step;
        row.lane = i;
        row.episode = lane.episode;
        row.episode_return = lane.ret;
        row.length = lane.length;
        row.violation = info.violation;
        row.constraint = info.constraint;
        row.targets = lane.targets;
        row.max_joint_cost = lane.max_joint_cost;
        row.interventions = lane.interventions;
        if (sinks.on_episode) sinks.on_episode(row);
        result.episodes.push_back(row);
        ++window.episodes;
        window.returns += lane.ret;

        ++lane.episode;
        lane.env->reset(lane_reset_seed(config.seed, i, lane.episode));
        lane.obs = lane.env->observe();
        lane.ret = 0.0;
        lane.length = 0;
        lane.interventions = 0;
        lane.targets = 0;
        lane.max_joint_cost = 0.0;
      } else {
        lane.obs = ls.rec.next_obs;
      }

      if (is_sac) {
        replay.push(std::move(ls.rec));
        if (++since_update >= config.agent.train_every) {
          since_update = 0;
          if (replay.size() >= config.agent.batch) {
            for (std::size_t k = 0; k < config.agent.train_steps; ++k) {
              const auto picked = replay.sample(config.agent.batch, update_rng);
              window.add(sac->update(SacBatch::from(picked), update_rng));
              ++total_updates;
            }
          }
        }
      } else {
        rollout.push(std::move(ls.rec));
        if (rollout.full()) {
          const UpdateStats s = ppo->update(rollout, update_rng);
          skipped += s.skipped;
          window.add(s);
          ++total_updates;
        }
      }

      if (step % config.progress_interval == 0 || step == config.total_steps) {
        ProgressRow row;
        row.step = step;
        row.episodes = window.episodes;
        row.mean_return = mean_or_nan(window.returns, window.episodes);
        row.violation_rate = static_cast<double>(window.violations) /
                             static_cast<double>(std::max<std::size_t>(1, window.transitions));
        row.updates = total_updates;
        row.critic_loss = mean_or_nan(window.critic, window.updates);
        row.actor_loss = mean_or_nan(window.actor, window.updates);
        row.safety_loss = mean_or_nan(window.safety, window.updates);
        row.multiplier = agent.multiplier();
        row.buffer_size = is_sac ? replay.size() : rollout.size();
        row.skipped_samples = skipped;
        row.projection_failures = projection_failures;
        row.resample_exhausted = exhausted;
        if (sinks.on_progress) sinks.on_progress(row);
        result.progress.push_back(row);
        window = Window{};
        if (sinks.on_checkpoint) sinks.on_checkpoint(step, agent);
      }
    }
  }

  if (config.eval_episodes > 0) {
    result.evaluation = evaluate_agent(agent, config, mapping, config.eval_episodes,
                                       derive_seed(config.seed, kEvalStream));
  }
  return result;
}

EvalSummary evaluate_agent(const Agent& agent, const TrainConfig& config,
                           const FeasibilityPolicy* mapping, std::size_t episodes,
                           std::uint64_t seed) {
  check_mapping(config, mapping);
  const auto model = wrapper_model(config);
  const DecisionPipeline pipeline(config.wrapper, agent, mapping, model.get(), config.projection,
                                  config.resample_budget);
  auto env = make_environment(config.env, config.env_config);
  Rng rng(derive_seed(seed, 1));
  EvalSummary out;
  double returns = 0.0;
  std::size_t violations = 0, violating_episodes = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    env->reset(derive_seed(seed, kLaneEnv + e));
    Observation obs = env->observe();
    bool done = false, violated = false;
    while (!done) {
      Record rec;
      const Decision d = pipeline.decide(*env, obs, rng, rec);
      const StepResult r = env->step(view(d.action));
      returns += r.reward;
      ++out.transitions;
      violations += r.info.violation ? 1 : 0;
      violated = violated || r.info.violation;
      done = r.done;
      if (!done) obs = env->observe();
    }
    violating_episodes += violated ? 1 : 0;
  }
  out.episodes = episodes;
  if (episodes > 0) {
    const auto ne = static_cast<double>(episodes);
    out.mean_return = returns / ne;
    out.episode_violation_rate = static_cast<double>(violating_episodes) / ne;
    out.mean_length = static_cast<double>(out.transitions) / ne;
  }
  if (out.transitions > 0) {
    out.violation_rate = static_cast<double>(violations) / static_cast<double>(out.transitions);
  }
  return out;
}

void write_episode_header(std::ostream& out) {
  out << "step,lane,episode,return,length,violation,constraint,targets,max_joint_cost,"
         "interventions\n";
}

void write_episode_row(std::ostream& out, const EpisodeRow& r) {
  out << r.step << ',' << r.lane << ',' << r.episode << ',' << r.episode_return << ','
      << r.length << ',' << (r.violation ? 1 : 0) << ',' << to_string(r.constraint) << ','
      << r.targets << ',' << r.max_joint_cost << ',' << r.interventions << '\n';
}

void write_progress_header(std::ostream& out) {
  out << "step,episodes,mean_return,violation_rate,updates,critic_loss,actor_loss,safety_loss,"
         "multiplier,buffer_size,skipped_samples,projection_failures,resample_exhausted\n";
}

void write_progress_row(std::ostream& out, const ProgressRow& r) {
  out << r.step << ',' << r.episodes << ',';
  write_number(out, r.mean_return);
  out << ',' << r.violation_rate << ',' << r.updates << ',';
  write_number(out, r.critic_loss);
  out << ',';
  write_number(out, r.actor_loss);
  out << ',';
  write_number(out, r.safety_loss);
  out << ',' << r.multiplier << ',' << r.buffer_size << ',' << r.skipped_samples << ','
      << r.projection_failures << ',' << r.resample_exhausted << '\n';
}

}  // namespace actmap
