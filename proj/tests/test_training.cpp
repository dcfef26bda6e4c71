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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "actmap/error.hpp"
#include "actmap/training.hpp"
#include "fixtures.hpp"

using namespace actmap;

namespace {

TrainConfig small_run(Algorithm alg) {
  TrainConfig c;
  c.env = EnvKind::toy;
  c.algorithm = alg;
  c.agent = fixture::tiny_config(alg == Algorithm::sac ? AgentConfig::sac_defaults()
                                                       : AgentConfig::ppo_defaults());
  c.agent.batch = 32;
  c.agent.train_every = 10;
  c.agent.train_steps = 1;
  c.agent.policy_delay = 0;
  c.agent.replay_capacity = 1000;
  c.agent.rollout_size = 200;
  c.agent.epochs = 1;
  c.agent.actor_lr = 1e-3;
  c.agent.critic_lr = 1e-3;
  c.total_steps = 600;
  c.num_envs = 4;
  c.progress_interval = 100;
  c.eval_episodes = 5;
  c.seed = 11;
  return c;
}

bool same_episodes(const std::vector<EpisodeRow>& a, const std::vector<EpisodeRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].step != b[i].step || a[i].lane != b[i].lane || a[i].length != b[i].length ||
        a[i].episode_return != b[i].episode_return || a[i].violation != b[i].violation) {
      return false;
    }
  }
  return true;
}

bool same_progress(const std::vector<ProgressRow>& a, const std::vector<ProgressRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto eq = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    if (a[i].step != b[i].step || a[i].updates != b[i].updates ||
        !eq(a[i].mean_return, b[i].mean_return) || !eq(a[i].critic_loss, b[i].critic_loss) ||
        !eq(a[i].actor_loss, b[i].actor_loss) || a[i].violation_rate != b[i].violation_rate) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("training settings are validated") {
  TrainConfig c = small_run(Algorithm::sac);
  CHECK_NOTHROW(c.validate());
  c.env = EnvKind::path;
  c.wrapper = Wrapper::replacement;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_run(Algorithm::sac);
  c.lagrangian = true;
  c.wrapper = Wrapper::projection;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_run(Algorithm::sac);
  c.total_steps = 0;
  c.progress_interval = 0;
  try {
    c.validate();
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.fields().size() == 2);
  }
  c = small_run(Algorithm::sac);
  c.wrapper = Wrapper::action_mapping;
  CHECK_THROWS_AS(train(c, nullptr), ConfigError);
}

TEST_CASE("progress rows and episodes are well formed") {
  for (Algorithm alg : {Algorithm::sac, Algorithm::ppo}) {
    CAPTURE(to_string(alg));
    TrainConfig c = small_run(alg);
    c.total_steps = 650;
    std::size_t checkpoints = 0, streamed = 0;
    TrainSinks sinks;
    sinks.on_episode = [&](const EpisodeRow&) { ++streamed; };
    sinks.on_checkpoint = [&](std::size_t, const Agent&) { ++checkpoints; };
    const TrainResult r = train(c, nullptr, sinks);
    REQUIRE(r.progress.size() == 7);
    for (std::size_t i = 0; i < 6; ++i) CHECK(r.progress[i].step == 100 * (i + 1));
    CHECK(r.progress.back().step == 650);
    CHECK(checkpoints == r.progress.size());
    CHECK(streamed == r.episodes.size());
    CHECK(r.progress.back().updates > 0);
    std::size_t episodes = 0;
    for (const ProgressRow& p : r.progress) {
      episodes += p.episodes;
      CHECK(p.violation_rate >= 0.0);
      CHECK(p.violation_rate <= 1.0);
    }
    CHECK(episodes == r.episodes.size());
    std::size_t last = 0;
    for (const EpisodeRow& e : r.episodes) {
      CHECK(e.step >= last);
      last = e.step;
      CHECK(e.length >= 1);
      CHECK(e.length <= 10);
      CHECK(e.lane < c.num_envs);
      CHECK(e.violation == (e.constraint != Constraint::none));
      if (!e.violation) CHECK(e.length == 10);
    }
    CHECK(r.evaluation.episodes == 5);
    CHECK(r.evaluation.transitions >= 5);
    CHECK(r.evaluation.violation_rate <= r.evaluation.episode_violation_rate);
  }
}

TEST_CASE("training is deterministic for a seed") {
  for (Algorithm alg : {Algorithm::sac, Algorithm::ppo}) {
    const TrainConfig c = small_run(alg);
    const TrainResult a = train(c, nullptr);
    const TrainResult b = train(c, nullptr);
    CHECK(same_episodes(a.episodes, b.episodes));
    CHECK(same_progress(a.progress, b.progress));
    CHECK(a.agent->actor() == b.agent->actor());
    CHECK(a.evaluation.mean_return == b.evaluation.mean_return);

    TrainConfig d = c;
    d.seed = 12;
    CHECK_FALSE(train(d, nullptr).agent->actor() == a.agent->actor());

    TrainConfig w = c;
    w.workers = 2;
    const TrainResult p = train(w, nullptr);
    CHECK(same_episodes(a.episodes, p.episodes));
    CHECK(p.agent->actor() == a.agent->actor());
  }
}

TEST_CASE("a Lagrangian agent with a frozen zero multiplier matches the base agent") {
  for (Algorithm alg : {Algorithm::sac, Algorithm::ppo}) {
    CAPTURE(to_string(alg));
    const TrainConfig base = small_run(alg);
    TrainConfig lag = base;
    lag.lagrangian = true;
    lag.agent.initial_multiplier = 0.0;
    lag.agent.multiplier_lr = 0.0;
    const TrainResult a = train(base, nullptr);
    const TrainResult b = train(lag, nullptr);
    CHECK(same_episodes(a.episodes, b.episodes));
    CHECK(a.agent->actor() == b.agent->actor());
    CHECK(b.agent->multiplier() == 0.0);
  }
}

TEST_CASE("the multiplier grows while violations exceed the threshold") {
  TrainConfig c = small_run(Algorithm::sac);
  c.lagrangian = true;
  c.agent.multiplier_lr = 0.5;
  c.agent.cost_threshold = -1.0;
  const TrainResult r = train(c, nullptr);
  CHECK(r.agent->multiplier() > 0.0);
  CHECK(r.progress.back().multiplier == r.agent->multiplier());
}

TEST_CASE("resumed training continues from the given step") {
  TrainConfig c = small_run(Algorithm::sac);
  const TrainResult first = train(c, nullptr);
  Rng rng(0);
  auto agent = make_agent(c.algorithm, actor_setup(c.env, c.env_config), c.agent, false, rng);
  for (std::size_t i = 0; i < agent->actor().size(); ++i) {
    agent->actor().values()[i] = first.agent->actor().values()[i];
  }
  const TrainResult more = train(c, nullptr, {}, std::move(agent), 400);
  REQUIRE(more.progress.size() == 2);
  CHECK(more.progress.front().step == 500);
  CHECK(more.progress.back().step == 600);
  for (const EpisodeRow& e : more.episodes) CHECK(e.step > 400);

  auto wrong = make_agent(Algorithm::ppo, actor_setup(c.env, c.env_config), c.agent, false, rng);
  CHECK_THROWS_AS(train(c, nullptr, {}, std::move(wrong), 100), ConfigError);
}

TEST_CASE("wrapped training records interventions") {
  TrainConfig c = small_run(Algorithm::sac);
  c.wrapper = Wrapper::replacement;
  const TrainResult r = train(c, nullptr);
  std::size_t interventions = 0;
  for (const EpisodeRow& e : r.episodes) {
    CHECK_FALSE(e.violation);
    interventions += e.interventions;
  }
  CHECK(interventions > 0);
  CHECK(r.evaluation.violation_rate == 0.0);
}

TEST_CASE("evaluation is reproducible") {
  const TrainConfig c = small_run(Algorithm::ppo);
  Rng rng(1);
  const auto agent = make_agent(c.algorithm, actor_setup(c.env, c.env_config), c.agent, false, rng);
  const EvalSummary a = evaluate_agent(*agent, c, nullptr, 8, 3);
  const EvalSummary b = evaluate_agent(*agent, c, nullptr, 8, 3);
  CHECK(a.episodes == 8);
  CHECK(a.mean_return == b.mean_return);
  CHECK(a.violation_rate == b.violation_rate);
  CHECK(a.mean_length == doctest::Approx(static_cast<double>(a.transitions) / 8.0));
}

TEST_CASE("csv writers") {
  std::ostringstream ep, pr;
  write_episode_header(ep);
  EpisodeRow e;
  e.step = 10;
  e.episode_return = 0.5;
  e.length = 10;
  write_episode_row(ep, e);
  CHECK(ep.str() ==
        "step,lane,episode,return,length,violation,constraint,targets,max_joint_cost,interventions\n"
        "10,0,0,0.5,10,0,none,0,0,0\n");
  write_progress_header(pr);
  ProgressRow p;
  p.step = 100;
  p.mean_return = std::nan("");
  write_progress_row(pr, p);
  const std::string text = pr.str();
  CHECK(text.rfind("step,episodes,mean_return,violation_rate,updates,critic_loss,actor_loss,"
                   "safety_loss,multiplier,buffer_size,skipped_samples,projection_failures,"
                   "resample_exhausted\n", 0) == 0);
  CHECK(text.find("\n100,0,,0,") != std::string::npos);
}
