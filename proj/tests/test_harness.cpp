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

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "actmap/error.hpp"
#include "actmap/harness.hpp"

using namespace actmap;

namespace {

const fs::path kRoot = "harness_runs";

RunConfig small_config(const std::string& name, const std::string& algorithm = "am-sac") {
  return parse_config("", {{"run.name", name},
                           {"run.env", "toy"},
                           {"run.algorithm", algorithm},
                           {"run.seeds", "0, 1"},
                           {"run.total_steps", "500"},
                           {"run.num_envs", "4"},
                           {"run.progress_interval", "100"},
                           {"run.checkpoint_interval", "200"},
                           {"run.eval_episodes", "3"},
                           {"run.output_dir", kRoot.string()},
                           {"agent.batch", "16"},
                           {"agent.policy_delay", "0"},
                           {"agent.train_every", "20"},
                           {"agent.set_hidden", "4"},
                           {"agent.trunk_hidden", "8"},
                           {"feasibility.steps", "40"},
                           {"feasibility.samples", "16"},
                           {"feasibility.eval_interval", "20"},
                           {"feasibility.eval_samples", "16"},
                           {"feasibility.eval_states", "2"},
                           {"feasibility.set_hidden", "4"},
                           {"feasibility.trunk_hidden", "8"}});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

struct CleanRoot {
  CleanRoot() { fs::remove_all(kRoot); }
};

}  // namespace

TEST_CASE("interpolation and bands") {
  const Curve c{{0.0, 10.0, 20.0}, {0.0, 1.0, 3.0}};
  CHECK(interpolate(c, -5.0) == 0.0);
  CHECK(interpolate(c, 5.0) == doctest::Approx(0.5));
  CHECK(interpolate(c, 15.0) == doctest::Approx(2.0));
  CHECK(interpolate(c, 99.0) == 3.0);

  const Band same = band({c, c, c}, 5.0);
  REQUIRE(same.step.size() == 4);
  for (std::size_t i = 0; i < same.step.size(); ++i) {
    CHECK(same.step[i] == doctest::Approx(5.0 * (i + 1)));
    CHECK(same.median[i] == same.min[i]);
    CHECK(same.max[i] == same.min[i]);
  }

  const Curve a{{0.0, 100.0}, {0.0, 100.0}};
  const Curve b{{0.0, 100.0}, {0.0, 200.0}};
  const Curve d{{0.0, 50.0}, {0.0, 25.0}};
  const Band mixed = band({a, b, d}, 25.0);
  REQUIRE(mixed.step.size() == 2);  // up to the shortest curve
  CHECK(mixed.min[1] == doctest::Approx(25.0));
  CHECK(mixed.median[1] == doctest::Approx(50.0));
  CHECK(mixed.max[1] == doctest::Approx(100.0));

  const Band own = band({c}, 0.0);
  CHECK(own.step == c.step);
  CHECK(own.median == c.value);
}

TEST_CASE("a run writes its directory layout and reruns identically") {
  CleanRoot clean;
  const RunConfig cfg = small_config("layout");
  const auto summaries = train_run(cfg);
  REQUIRE(summaries.size() == 2);
  const fs::path dir = run_directory(cfg);
  CHECK(dir == kRoot / "layout");
  for (const char* f : {"manifest.json", "status.json", "effective.ini"}) CHECK(fs::exists(dir / f));
  for (std::uint64_t s : cfg.seeds) {
    const fs::path sd = seed_directory(cfg, s);
    for (const char* f : {"feasibility.ckpt", "pretrain.csv", "metrics.csv", "progress.csv",
                          "eval.csv", "checkpoint/state.txt", "checkpoint/actor.ckpt"}) {
      CAPTURE(f);
      CHECK(fs::exists(sd / f));
    }
    CHECK(lines(sd / "progress.csv").size() == 6);
  }

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["name"] == "layout");
  CHECK(manifest["seeds"] == nlohmann::json::array({0, 1}));
  CHECK(manifest.contains("revision"));
  CHECK(manifest.contains("started"));
  CHECK(effective_config(manifest_config(dir / "manifest.json")) == effective_config(cfg));
  const auto status = nlohmann::json::parse(slurp(dir / "status.json"));
  CHECK(status["state"] == "finished");

  CHECK_THROWS_AS(train_run(cfg), ConfigError);

  const RunConfig again = small_config("layout-again");
  train_run(again);
  for (std::uint64_t s : cfg.seeds) {
    CHECK(slurp(seed_directory(cfg, s) / "metrics.csv") ==
          slurp(seed_directory(again, s) / "metrics.csv"));
    CHECK(slurp(seed_directory(cfg, s) / "eval.csv") == slurp(seed_directory(again, s) / "eval.csv"));
  }

  // Evaluation from checkpoints reproduces the final evaluation.
  const auto evals = eval_run(cfg);
  REQUIRE(evals.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(evals[i].evaluation.mean_return == summaries[i].evaluation.mean_return);
    CHECK(evals[i].evaluation.violation_rate == summaries[i].evaluation.violation_rate);
  }
}

TEST_CASE("resume truncates logs to the checkpoint and continues") {
  CleanRoot clean;
  const RunConfig cfg = small_config("resume", "sac");
  train_run(cfg);
  const fs::path sd = seed_directory(cfg, 0);
  const auto full = lines(sd / "progress.csv");
  {
    std::ofstream state(sd / "checkpoint" / "state.txt");
    state << "step 200\nmultiplier 0\n";
  }
  train_run(cfg, true);
  const auto resumed = lines(sd / "progress.csv");
  REQUIRE(resumed.size() == full.size());
  CHECK(resumed[0] == full[0]);
  for (std::size_t i = 1; i < resumed.size(); ++i) {
    CHECK(resumed[i].substr(0, resumed[i].find(',')) == std::to_string(100 * i));
  }
  for (std::size_t i = 1; i <= 2; ++i) CHECK(resumed[i] == full[i]);

  RunConfig changed = cfg;
  changed.agent.gamma = 0.5;
  CHECK_THROWS_AS(train_run(changed, true), ConfigError);
}

TEST_CASE("evaluation without a run fails cleanly") {
  CleanRoot clean;
  CHECK_THROWS_AS(eval_run(small_config("missing", "sac")), Error);
  CHECK_THROWS_AS(manifest_config(kRoot / "missing" / "manifest.json"), IoError);
}

TEST_CASE("pretraining alone") {
  CleanRoot clean;
  const RunConfig cfg = small_config("pre");
  const auto r = pretrain_run(cfg);
  REQUIRE(r.size() == 2);
  CHECK(r[0].last.step == 40);
  CHECK(fs::exists(r[1].checkpoint));
  CHECK(lines(seed_directory(cfg, 0) / "pretrain.csv").size() == 3);
}

TEST_CASE("plot export") {
  CleanRoot clean;
  const RunConfig cfg = small_config("plots", "sac");
  train_run(cfg);
  const auto files = export_plots({run_directory(cfg)}, kRoot / "plots", 50.0);
  REQUIRE(files.size() == 2);
  for (const fs::path& f : files) {
    const auto rows = lines(f);
    CHECK(rows.front() == "step,median,min,max");
    CHECK(rows.size() == 11);
  }
  CHECK(files[0].filename() == "plots-return.csv");
  CHECK_THROWS(export_plots({kRoot / "nothing"}, kRoot / "plots", 50.0));
}

TEST_CASE("sample-count sweep") {
  RunConfig cfg = parse_config("", {{"run.env", "path"}, {"harness.sweep_points", "4, 16, 32"},
                                    {"harness.sweep_reference", "32"}, {"harness.sweep_pairs", "300"}});
  const SweepReport r = s_sweep(cfg);
  REQUIRE(r.points == std::vector<std::size_t>{4, 16, 32});
  CHECK(r.pairs == 300);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.agreement[i][i] == 1.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(r.agreement[i][j] == r.agreement[j][i]);
    CHECK(r.feasible_share[i] >= 0.0);
    CHECK(r.feasible_share[i] <= 1.0);
  }
  CHECK(r.agreement[1][2] >= r.agreement[0][2]);
  std::ostringstream out;
  write_sweep_csv(out, r);
  CHECK(out.str().rfind("points,wall_ms,feasible_share,agree_4,agree_16,agree_32\n", 0) == 0);
  CHECK_THROWS_AS(s_sweep(small_config("x")), ConfigError);
}

TEST_CASE("decision timing") {
  CleanRoot clean;
  RunConfig cfg = small_config("timing");
  cfg.timing_decisions = 40;
  const auto rows = timing(cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].configuration == "base");
  CHECK(rows[1].configuration == "action_mapping");
  CHECK(rows[2].configuration == "projection");
  CHECK(rows[3].configuration == "projection-feasible");
  CHECK(rows[0].decisions == 40);
  CHECK(rows[0].forwards_per_decision == 1.0);
  CHECK(rows[1].forwards_per_decision == 2.0);
  for (const TimingRow& r : rows) CHECK(r.mean_ms >= 0.0);
  std::ostringstream out;
  write_timing_csv(out, rows);
  CHECK(out.str().rfind("configuration,decisions,mean_ms", 0) == 0);
}
