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

// Command-line front end. Talks to the library only through actmap.h.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "actmap/actmap.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string env, algorithm, preset, name, output_dir, seeds;
  long long steps = -1;
  bool verbose = false;
  bool print_config = false;
};

int exit_code(am_status s) {
  switch (s) {
    case AM_OK: return kExitOk;
    case AM_ERR_CONFIG:
    case AM_ERR_USAGE: return kExitConfig;
    default: return kExitRuntime;
  }
}

int report(am_status s) {
  if (s == AM_OK) return kExitOk;
  std::cerr << "error: " << am_last_error() << "\n";
  for (size_t i = 0; i < am_last_error_field_count(); ++i) {
    std::cerr << "  " << am_last_error_field(i) << "\n";
  }
  return exit_code(s);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "INI config file (defaults apply when omitted)");
  cmd->add_option("-s,--set", c.overrides, "Override a field: section.key=value (repeatable)");
  cmd->add_option("--env", c.env, "Environment: robot | path | toy");
  cmd->add_option("--algorithm", c.algorithm,
                  "sac | ppo | am-sac | am-ppo | lag-sac | lag-ppo | <base>+replacement | "
                  "<base>+resampling | <base>+projection");
  cmd->add_option("--preset", c.preset, "desk | full");
  cmd->add_option("--name", c.name, "Run name (directory under the output dir)");
  cmd->add_option("--output-dir", c.output_dir, "Parent directory for runs");
  cmd->add_option("--seeds", c.seeds, "Comma-separated seeds");
  cmd->add_option("--steps", c.steps, "Total environment steps per seed");
  cmd->add_flag("-v,--verbose", c.verbose, "Log progress to stderr");
  cmd->add_flag("--print-config", c.print_config, "Print the effective config before running");
}

// Builds the config; returns nullptr after reporting on failure.
am_config* load(const Common& c, int& code) {
  std::vector<std::string> all;
  const auto add = [&](const char* key, const std::string& v) {
    if (!v.empty()) all.push_back(std::string(key) + "=" + v);
  };
  add("run.env", c.env);
  add("run.algorithm", c.algorithm);
  add("run.preset", c.preset);
  add("run.name", c.name);
  add("run.output_dir", c.output_dir);
  add("run.seeds", c.seeds);
  if (c.steps >= 0) add("run.total_steps", std::to_string(c.steps));
  all.insert(all.end(), c.overrides.begin(), c.overrides.end());
  std::vector<const char*> ptrs;
  for (const std::string& s : all) ptrs.push_back(s.c_str());

  am_config* cfg = nullptr;
  const am_status s = am_config_load(c.config_path.empty() ? nullptr : c.config_path.c_str(),
                                     ptrs.data(), ptrs.size(), &cfg);
  if (s != AM_OK) {
    code = report(s);
    return nullptr;
  }
  if (c.print_config) {
    size_t needed = 0;
    am_config_effective(cfg, nullptr, 0, &needed);
    std::string text(needed, '\0');
    am_config_effective(cfg, text.data(), text.size(), &needed);
    text.pop_back();
    std::cout << text;
  }
  return cfg;
}

template <class Fn>
int with_config(const Common& c, Fn&& fn) {
  int code = kExitOk;
  am_config* cfg = load(c, code);
  if (cfg == nullptr) return code;
  code = report(fn(cfg));
  am_config_free(cfg);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action-mapping reinforcement learning experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", am_version());

  Common pre, tr, ev, ti, sw;
  bool resume = false;
  std::size_t episodes = 0;
  std::string timing_csv, sweep_csv;
  std::vector<std::string> runs;
  std::string plots_out = "plots";
  double bin = 0.0;

  auto* c_pre = app.add_subcommand("pretrain", "Pretrain the feasibility policy for each seed");
  add_common(c_pre, pre);
  auto* c_tr = app.add_subcommand("train", "Train and evaluate every seed");
  add_common(c_tr, tr);
  c_tr->add_flag("--resume", resume, "Continue from the last checkpoints");
  auto* c_ev = app.add_subcommand("eval", "Evaluate final checkpoints");
  add_common(c_ev, ev);
  c_ev->add_option("--episodes", episodes, "Episodes per seed (default run.eval_episodes)");
  auto* c_ti = app.add_subcommand("timing", "Per-decision latency of base, AM and projection");
  add_common(c_ti, ti);
  c_ti->add_option("--csv", timing_csv, "Write the table here instead of stdout");
  auto* c_sw = app.add_subcommand("s-sweep", "Feasibility agreement across sample counts");
  add_common(c_sw, sw);
  c_sw->add_option("--csv", sweep_csv, "Write the table here instead of stdout");
  auto* c_ex = app.add_subcommand("export-plots", "Median and min/max bands across seeds");
  c_ex->add_option("runs", runs, "Run directories")->required();
  c_ex->add_option("-o,--out", plots_out, "Output directory");
  c_ex->add_option("--bin", bin, "Step grid spacing (0 keeps the logged steps)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto path_or_null = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
  if (*c_pre) {
    return with_config(pre, [&](am_config* c) { return am_pretrain(c, pre.verbose); });
  }
  if (*c_tr) {
    return with_config(tr, [&](am_config* c) { return am_train(c, resume, tr.verbose); });
  }
  if (*c_ev) {
    return with_config(ev, [&](am_config* c) { return am_eval(c, episodes, ev.verbose); });
  }
  if (*c_ti) {
    return with_config(ti, [&](am_config* c) {
      return am_timing(c, path_or_null(timing_csv), ti.verbose);
    });
  }
  if (*c_sw) {
    return with_config(sw, [&](am_config* c) {
      return am_s_sweep(c, path_or_null(sweep_csv), sw.verbose);
    });
  }
  std::vector<const char*> dirs;
  for (const std::string& r : runs) dirs.push_back(r.c_str());
  return report(am_export_plots(dirs.data(), dirs.size(), plots_out.c_str(), bin));
}
