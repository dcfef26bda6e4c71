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

// Exercises the shared library through its C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "actmap/actmap.h"

namespace {

am_config* load(const std::vector<std::string>& overrides) {
  std::vector<const char*> ptrs;
  for (const auto& s : overrides) ptrs.push_back(s.c_str());
  am_config* cfg = nullptr;
  REQUIRE(am_config_load(nullptr, ptrs.data(), ptrs.size(), &cfg) == AM_OK);
  return cfg;
}

std::string effective(const am_config* cfg) {
  size_t needed = 0;
  CHECK(am_config_effective(cfg, nullptr, 0, &needed) == AM_OK);
  std::string buf(needed, '\0');
  CHECK(am_config_effective(cfg, buf.data(), buf.size(), &needed) == AM_OK);
  buf.resize(needed - 1);
  return buf;
}

const std::vector<std::string> kSmallRun{
    "run.name=capi",           "run.output_dir=capi_runs",  "run.env=toy",
    "run.algorithm=am-sac",    "run.seeds=0",               "run.total_steps=300",
    "run.num_envs=3",          "run.progress_interval=100", "run.eval_episodes=2",
    "agent.batch=16",          "agent.set_hidden=4",        "agent.trunk_hidden=8",
    "feasibility.steps=20",    "feasibility.samples=16",    "feasibility.eval_interval=10",
    "feasibility.eval_samples=16", "feasibility.set_hidden=4", "feasibility.trunk_hidden=8"};

}  // namespace

TEST_CASE("version and error state") {
  CHECK(std::string(am_version()).size() > 0);
  am_config* cfg = nullptr;
  const char* bad[] = {"agent.gamma=2", "agent.nope=1"};
  CHECK(am_config_load(nullptr, bad, 2, &cfg) == AM_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(am_last_error()).size() > 0);
  REQUIRE(am_last_error_field_count() == 2);
  std::vector<std::string> fields{am_last_error_field(0), am_last_error_field(1)};
  CHECK(fields[0].rfind("agent.", 0) == 0);
  CHECK(am_last_error_field(5) == nullptr);

  const char* malformed[] = {"novalue"};
  CHECK(am_config_load(nullptr, malformed, 1, &cfg) == AM_ERR_CONFIG);
  CHECK(am_config_load("does-not-exist.ini", nullptr, 0, &cfg) == AM_ERR_CONFIG);
  CHECK(am_config_load(nullptr, nullptr, 0, nullptr) == AM_ERR_USAGE);
}

TEST_CASE("config text round trip") {
  am_config* cfg = load({"run.env=path", "agent.gamma=0.9"});
  const std::string text = effective(cfg);
  CHECK(text.find("gamma = 0.9") != std::string::npos);
  am_config* back = nullptr;
  REQUIRE(am_config_parse(text.c_str(), &back) == AM_OK);
  CHECK(effective(back) == text);

  char small[4];
  size_t needed = 0;
  CHECK(am_config_effective(cfg, small, sizeof small, &needed) == AM_ERR_USAGE);
  CHECK(needed == text.size() + 1);

  char dir[256];
  REQUIRE(am_config_run_directory(cfg, dir, sizeof dir, &needed) == AM_OK);
  CHECK(std::string(dir) == "runs/run");
  am_config_free(back);
  am_config_free(cfg);
  am_config_free(nullptr);
}

TEST_CASE("environments through the C interface") {
  am_env* env = nullptr;
  CHECK(am_env_create("moon", nullptr, &env) == AM_ERR_CONFIG);
  REQUIRE(am_env_create("toy", nullptr, &env) == AM_OK);
  CHECK(am_env_action_dim(env) == 2);
  REQUIRE(am_env_reset(env, 4) == AM_OK);
  const double origin[2] = {0.0, 0.0};
  int feasible = 1;
  REQUIRE(am_env_feasible(env, origin, 2, &feasible) == AM_OK);
  CHECK(feasible == 0);
  double reward = -1.0;
  int done = 0, violation = 0;
  REQUIRE(am_env_step(env, origin, 2, &reward, &done, &violation) == AM_OK);
  CHECK(done == 1);
  CHECK(violation == 1);
  CHECK(reward == 0.0);
  CHECK(am_env_step(env, origin, 3, nullptr, nullptr, nullptr) == AM_ERR_USAGE);
  am_env_free(env);

  am_config* cfg = load({"robot.max_joint_speed=0.2"});
  REQUIRE(am_env_create("robot", cfg, &env) == AM_OK);
  CHECK(am_env_action_dim(env) == 7);
  const double still[7] = {0, 0, 0, 0, 0, 0, 0};
  REQUIRE(am_env_step(env, still, 7, nullptr, &done, &violation) == AM_OK);
  CHECK(violation == 0);
  am_env_free(env);
  am_config_free(cfg);
}

TEST_CASE("kernel density") {
  const double support[4] = {0.0, 0.0, 1.0, 0.0};
  const double query[2] = {0.5, 0.0};
  double density = 0.0;
  REQUIRE(am_kde_eval(support, 2, 2, 0.5, query, &density) == AM_OK);
  const double expected = std::exp(-0.5) / (2.0 * M_PI * 0.25);
  CHECK(density == doctest::Approx(expected).epsilon(1e-12));
  CHECK(am_kde_eval(support, 2, 2, 0.0, query, &density) == AM_ERR_USAGE);
  CHECK(am_kde_eval(nullptr, 2, 2, 0.5, query, &density) == AM_ERR_USAGE);
}

TEST_CASE("a small run end to end") {
  std::filesystem::remove_all("capi_runs");
  am_config* cfg = load(kSmallRun);
  REQUIRE(am_train(cfg, 0, 0) == AM_OK);
  CHECK(am_train(cfg, 0, 0) == AM_ERR_CONFIG);
  CHECK(am_eval(cfg, 2, 0) == AM_OK);
  CHECK(am_timing(cfg, "capi_runs/timing.csv", 0) == AM_OK);
  CHECK(std::filesystem::exists("capi_runs/timing.csv"));
  CHECK(am_s_sweep(cfg, nullptr, 0) == AM_ERR_CONFIG);

  am_config* recorded = nullptr;
  REQUIRE(am_config_from_manifest("capi_runs/capi/manifest.json", &recorded) == AM_OK);
  CHECK(effective(recorded) == effective(cfg));

  am_feas_policy* policy = nullptr;
  REQUIRE(am_feas_load("capi_runs/capi/seed-0/feasibility.ckpt", "toy", cfg, &policy) == AM_OK);
  am_env* env = nullptr;
  REQUIRE(am_env_create("toy", cfg, &env) == AM_OK);
  const double latent[2] = {0.3, -0.2};
  double action[2] = {9.0, 9.0};
  REQUIRE(am_feas_map(policy, env, latent, 2, action) == AM_OK);
  CHECK(std::abs(action[0]) <= 1.0);
  CHECK(std::abs(action[1]) <= 1.0);
  CHECK(am_feas_map(policy, env, latent, 1, action) == AM_ERR_USAGE);

  const char* runs[] = {"capi_runs/capi"};
  CHECK(am_export_plots(runs, 1, "capi_runs/plots", 50.0) == AM_OK);
  CHECK(std::filesystem::exists("capi_runs/plots/capi-return.csv"));
  CHECK(am_feas_load("missing.ckpt", "toy", cfg, &policy) != AM_OK);

  am_feas_free(policy);
  am_env_free(env);
  am_config_free(recorded);
  am_config_free(cfg);
}
