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
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "actmap/error.hpp"
#include "actmap/harness.hpp"

#ifndef ACTMAP_SOURCE_REVISION
#define ACTMAP_SOURCE_REVISION "unknown"
#endif

namespace actmap {
namespace {

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const fs::path& from) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError(from.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
    if (t.rows.back().size() != t.header.size()) {
      throw IoError(path.string() + ": row " + std::to_string(t.rows.size()) +
                    " has the wrong number of columns");
    }
  }
  return t;
}

/// Keeps the header and rows whose first column is at most `step`.
void truncate_csv(const fs::path& path, std::size_t step) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::string line, kept;
  if (std::getline(in, line)) kept = line + "\n";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (std::stoull(line.substr(0, line.find(','))) <= step) kept += line + "\n";
  }
  in.close();
  write_file(path, kept);
}

void say(std::ostream* log, const std::string& msg) {
  if (log != nullptr) *log << msg << std::endl;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// --- checkpoints -----------------------------------------------------------

fs::path checkpoint_dir(const fs::path& seed_dir) { return seed_dir / "checkpoint"; }

void save_agent(const fs::path& seed_dir, const Agent& agent, std::size_t step) {
  const fs::path dir = checkpoint_dir(seed_dir);
  const fs::path tmp = seed_dir / "checkpoint.tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  for (const auto& [name, params] : agent.parameter_sets()) {
    save_checkpoint((tmp / (name + ".ckpt")).string(), *params);
  }
  std::ostringstream state;
  state.precision(17);
  state << "step " << step << "\nmultiplier " << agent.multiplier() << "\n";
  write_file(tmp / "state.txt", state.str());
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

struct LoadedAgent {
  std::unique_ptr<Agent> agent;
  std::size_t step = 0;
};

LoadedAgent load_agent(const fs::path& seed_dir, const TrainConfig& tc) {
  const fs::path dir = checkpoint_dir(seed_dir);
  if (!fs::exists(dir / "state.txt")) {
    throw IoError("no agent checkpoint in " + seed_dir.string());
  }
  Rng rng(0);
  LoadedAgent out;
  out.agent = make_agent(tc.algorithm, actor_setup(tc.env, tc.env_config), tc.agent,
                         tc.lagrangian, rng);
  for (const auto& [name, params] : out.agent->parameter_sets()) {
    const NetworkParams loaded = load_checkpoint((dir / (name + ".ckpt")).string());
    if (loaded.shapes() != params->shapes()) {
      throw ConfigError("checkpoint network '" + name + "' does not match the configured agent");
    }
    // The agent owns these parameters; parameter_sets only exposes them const.
    auto* target = const_cast<NetworkParams*>(params);
    std::copy(loaded.values().begin(), loaded.values().end(), target->values().begin());
  }
  std::istringstream state(read_file(dir / "state.txt"));
  std::string key;
  double multiplier = 0.0;
  while (state >> key) {
    if (key == "step") {
      state >> out.step;
    } else if (key == "multiplier") {
      state >> multiplier;
    }
  }
  out.agent->set_multiplier(multiplier);
  return out;
}

// --- feasibility policies --------------------------------------------------

StateGenerator state_generator(const RunConfig& c) {
  return [kind = c.env, env = c.env_config](std::uint64_t seed) {
    return generate_partial_state(kind, env, seed);
  };
}

FeasTrainConfig feas_config(const RunConfig& c, std::uint64_t seed) {
  FeasTrainConfig f = c.feasibility;
  f.seed = seed;
  f.workers = c.workers;
  return f;
}

PretrainSummary pretrain_seed(const RunConfig& c, std::uint64_t seed, std::ostream* log) {
  const fs::path dir = seed_directory(c, seed);
  fs::create_directories(dir);
  const auto model = make_feasibility_model(c.env, c.env_config);
  std::ofstream csv(dir / "pretrain.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (dir / "pretrain.csv").string());
  write_feas_eval_header(csv);
  const fs::path ckpt = dir / "feasibility.ckpt";
  const PretrainCallback on_eval = [&](const FeasHistoryRow& row, const FeasibilityPolicy& p) {
    write_feas_eval_row(csv, row);
    csv.flush();
    p.save(ckpt.string());
    say(log, "pretrain seed " + std::to_string(seed) + " step " + std::to_string(row.step) +
                 " precision " + fmt(row.report.precision, 4));
  };
  PretrainResult r = pretrain(feas_config(c, seed), c.env, c.env_config, *model,
                              state_generator(c), on_eval);
  r.policy.save(ckpt.string());
  PretrainSummary s;
  s.seed = seed;
  s.checkpoint = ckpt;
  if (!r.history.empty()) s.last = r.history.back();
  return s;
}

std::optional<FeasibilityPolicy> mapping_for_seed(const RunConfig& c, std::uint64_t seed,
                                                  bool allow_pretrain, std::ostream* log) {
  if (c.algorithm.wrapper != Wrapper::action_mapping) return std::nullopt;
  if (!c.feasibility_checkpoint.empty()) {
    return FeasibilityPolicy::load(c.feasibility_checkpoint, c.env, c.env_config);
  }
  const fs::path ckpt = seed_directory(c, seed) / "feasibility.ckpt";
  const fs::path history = seed_directory(c, seed) / "pretrain.csv";
  // A checkpoint is complete once its final evaluation row has been logged.
  bool complete = false;
  if (fs::exists(ckpt) && fs::exists(history)) {
    const CsvTable t = read_csv(history);
    complete = !t.rows.empty() && std::stoull(t.rows.back().at(0)) == c.feasibility.steps;
  }
  if (!complete) {
    if (!allow_pretrain) throw IoError("no pretrained feasibility policy in " + ckpt.string());
    pretrain_seed(c, seed, log);
  }
  return FeasibilityPolicy::load(ckpt.string(), c.env, c.env_config);
}

void write_eval_csv(const fs::path& path, const EvalSummary& e) {
  std::ostringstream out;
  out.precision(10);
  out << "episodes,transitions,mean_return,violation_rate,episode_violation_rate,mean_length\n"
      << e.episodes << ',' << e.transitions << ',' << e.mean_return << ',' << e.violation_rate
      << ',' << e.episode_violation_rate << ',' << e.mean_length << '\n';
  write_file(path, out.str());
}

void write_manifest(const RunConfig& c) {
  const fs::path dir = run_directory(c);
  const fs::path path = dir / "manifest.json";
  if (fs::exists(path)) return;  // immutable once written
  nlohmann::json j;
  j["format"] = 1;
  j["name"] = c.name;
  j["revision"] = ACTMAP_SOURCE_REVISION;
  j["seeds"] = c.seeds;
  j["started"] = utc_now();
  j["config"] = effective_config(c);
  nlohmann::json outputs = nlohmann::json::object();
  for (std::uint64_t s : c.seeds) {
    const fs::path sd = fs::relative(seed_directory(c, s), dir);
    outputs[std::to_string(s)] = {{"metrics", (sd / "metrics.csv").string()},
                                  {"progress", (sd / "progress.csv").string()},
                                  {"eval", (sd / "eval.csv").string()},
                                  {"checkpoint", (sd / "checkpoint").string()}};
  }
  j["outputs"] = outputs;
  write_file(path, j.dump(2) + "\n");
}

void write_status(const RunConfig& c, const std::string& state) {
  nlohmann::json j;
  j["state"] = state;
  j["updated"] = utc_now();
  if (state == "finished") j["finished"] = j["updated"];
  write_file(run_directory(c) / "status.json", j.dump(2) + "\n");
}

SeedSummary train_seed(const RunConfig& c, std::uint64_t seed, bool resume, std::ostream* log) {
  const fs::path dir = seed_directory(c, seed);
  fs::create_directories(dir);
  const TrainConfig tc = c.train_config(seed);
  const auto mapping = mapping_for_seed(c, seed, true, log);
  const FeasibilityPolicy* pf = mapping ? &*mapping : nullptr;

  std::unique_ptr<Agent> start;
  std::size_t start_step = 0;
  if (resume && fs::exists(checkpoint_dir(dir) / "state.txt")) {
    LoadedAgent loaded = load_agent(dir, tc);
    start = std::move(loaded.agent);
    start_step = loaded.step;
    truncate_csv(dir / "metrics.csv", start_step);
    truncate_csv(dir / "progress.csv", start_step);
    say(log, "seed " + std::to_string(seed) + ": resuming at step " + std::to_string(start_step));
  }
  const bool append = start_step > 0;
  const auto mode = append ? std::ios::app : std::ios::trunc;
  std::ofstream metrics(dir / "metrics.csv", mode);
  std::ofstream progress(dir / "progress.csv", mode);
  if (!metrics || !progress) throw IoError("cannot write metrics in " + dir.string());
  metrics.precision(10);
  progress.precision(10);
  if (!append) {
    write_episode_header(metrics);
    write_progress_header(progress);
  }

  SeedSummary summary;
  summary.seed = seed;
  TrainSinks sinks;
  sinks.on_episode = [&](const EpisodeRow& row) {
    write_episode_row(metrics, row);
    ++summary.episodes;
  };
  sinks.on_progress = [&](const ProgressRow& row) {
    write_progress_row(progress, row);
    metrics.flush();
    progress.flush();
    say(log, "seed " + std::to_string(seed) + " step " + std::to_string(row.step) +
                 " episodes " + std::to_string(row.episodes) + " return " +
                 fmt(row.mean_return, 4) + " violation_rate " + fmt(row.violation_rate, 4));
  };
  sinks.on_checkpoint = [&](std::size_t step, const Agent& agent) {
    if (step % c.checkpoint_interval == 0) save_agent(dir, agent, step);
  };

  TrainResult r = train(tc, pf, sinks, std::move(start), start_step);
  metrics.close();
  progress.close();
  save_agent(dir, *r.agent, c.total_steps);
  write_eval_csv(dir / "eval.csv", r.evaluation);
  summary.evaluation = r.evaluation;
  say(log, "seed " + std::to_string(seed) + " evaluation: return " +
               fmt(r.evaluation.mean_return, 4) + " violation_rate " +
               fmt(r.evaluation.violation_rate, 4));
  return summary;
}

}  // namespace

fs::path run_directory(const RunConfig& config) { return fs::path(config.output_dir) / config.name; }

fs::path seed_directory(const RunConfig& config, std::uint64_t seed) {
  return run_directory(config) / ("seed-" + std::to_string(seed));
}

std::vector<PretrainSummary> pretrain_run(const RunConfig& config, std::ostream* log) {
  config.validate();
  fs::create_directories(run_directory(config));
  write_file(run_directory(config) / "effective.ini", effective_config(config));
  std::vector<PretrainSummary> out;
  for (std::uint64_t seed : config.seeds) out.push_back(pretrain_seed(config, seed, log));
  return out;
}

std::vector<SeedSummary> train_run(const RunConfig& config, bool resume, std::ostream* log) {
  config.validate();
  const fs::path dir = run_directory(config);
  if (!resume && fs::exists(dir / "manifest.json")) {
    throw ConfigError("run directory " + dir.string() +
                      " already holds a run; resume it or choose another run.name");
  }
  if (resume && fs::exists(dir / "manifest.json")) {
    const RunConfig recorded = manifest_config(dir / "manifest.json");
    if (effective_config(recorded) != effective_config(config)) {
      throw ConfigError("configuration differs from the manifest of " + dir.string());
    }
  }
  fs::create_directories(dir);
  write_manifest(config);
  write_file(dir / "effective.ini", effective_config(config));
  write_status(config, "running");
  std::vector<SeedSummary> out;
  try {
    for (std::uint64_t seed : config.seeds) out.push_back(train_seed(config, seed, resume, log));
  } catch (...) {
    write_status(config, "failed");
    throw;
  }
  write_status(config, "finished");
  return out;
}

std::vector<SeedSummary> eval_run(const RunConfig& config, std::size_t episodes,
                                  std::ostream* log) {
  config.validate();
  const std::size_t n = episodes == 0 ? config.eval_episodes : episodes;
  std::vector<SeedSummary> out;
  for (std::uint64_t seed : config.seeds) {
    const fs::path dir = seed_directory(config, seed);
    const TrainConfig tc = config.train_config(seed);
    const LoadedAgent loaded = load_agent(dir, tc);
    const auto mapping = mapping_for_seed(config, seed, false, log);
    SeedSummary s;
    s.seed = seed;
    s.evaluation = evaluate_agent(*loaded.agent, tc, mapping ? &*mapping : nullptr, n,
                                  derive_seed(seed, 4));
    s.episodes = s.evaluation.episodes;
    write_eval_csv(dir / "eval.csv", s.evaluation);
    say(log, "seed " + std::to_string(seed) + ": return " + fmt(s.evaluation.mean_return, 4) +
                 " violation_rate " + fmt(s.evaluation.violation_rate, 4));
    out.push_back(s);
  }
  return out;
}

RunConfig manifest_config(const fs::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(manifest.string() + ": " + e.what());
  }
  if (!j.contains("config") || !j["config"].is_string()) {
    throw ConfigError(manifest.string() + ": no recorded config");
  }
  return parse_config(j["config"].get<std::string>());
}

// --- timing ------------------------------------------------------------------

std::vector<TimingRow> timing(const RunConfig& config, std::ostream* log) {
  config.validate();
  const std::uint64_t seed = config.seeds.front();
  const fs::path dir = seed_directory(config, seed);
  TrainConfig tc = config.train_config(seed);

  std::unique_ptr<Agent> agent;
  if (fs::exists(checkpoint_dir(dir) / "state.txt")) {
    agent = load_agent(dir, tc).agent;
    say(log, "timing: using checkpoint in " + dir.string());
  } else {
    Rng rng(derive_seed(seed, 1));
    agent = make_agent(tc.algorithm, actor_setup(tc.env, tc.env_config), tc.agent, false, rng);
    say(log, "timing: no checkpoint, using initialized networks");
  }
  std::optional<FeasibilityPolicy> mapping;
  if (fs::exists(dir / "feasibility.ckpt")) {
    mapping = FeasibilityPolicy::load((dir / "feasibility.ckpt").string(), tc.env, tc.env_config);
  } else if (!config.feasibility_checkpoint.empty()) {
    mapping = FeasibilityPolicy::load(config.feasibility_checkpoint, tc.env, tc.env_config);
  } else {
    Rng rng(derive_seed(seed, 0));
    mapping = make_feasibility_policy(tc.env, tc.env_config, feas_config(config, seed), rng);
  }
  const auto projection_model =
      make_feasibility_model(tc.env, tc.env_config, config.projection_model);

  // The same sequence of states for every configuration.
  auto env = make_environment(tc.env, tc.env_config);
  const std::size_t n = config.timing_decisions;
  std::vector<std::string> scenes;
  scenes.reserve(n);
  {
    Rng rng(derive_seed(seed, 9));
    const DecisionPipeline walker(Wrapper::none, *agent, nullptr, nullptr);
    env->reset(derive_seed(seed, 10));
    for (std::size_t i = 0; i < n; ++i) {
      scenes.push_back(env->scene_text());
      Record rec;
      const Decision d = walker.decide(*env, env->observe(), rng, rec);
      if (env->step(view(d.action)).done) env->reset(derive_seed(seed, 11 + i));
    }
  }

  struct Case {
    std::string name;
    Wrapper wrapper;
  };
  const std::vector<Case> cases = {{"base", Wrapper::none},
                                   {"action_mapping", Wrapper::action_mapping},
                                   {"projection", Wrapper::projection}};
  std::vector<TimingRow> rows;
  TimingRow feasible_only{"projection-feasible"};
  double feasible_ms = 0.0;
  for (const Case& k : cases) {
    const DecisionPipeline pipeline(k.wrapper, *agent, &*mapping, projection_model.get(),
                                    config.projection, config.resample_budget);
    Rng rng(derive_seed(seed, 12));
    TimingRow row;
    row.configuration = k.name;
    double total_ms = 0.0, forwards = 0.0, iterations = 0.0, interventions = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      env->load_scene(scenes[i]);
      const Observation obs = env->observe();
      Record rec;
      const auto t0 = Clock::now();
      const Decision d = pipeline.decide(*env, obs, rng, rec);
      const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      total_ms += ms;
      forwards += static_cast<double>(d.network_forwards);
      interventions += d.intervened ? 1.0 : 0.0;
      if (k.wrapper == Wrapper::projection) {
        iterations += static_cast<double>(d.attempts - 1);
        if (d.attempts == 1) {
          ++feasible_only.decisions;
          feasible_ms += ms;
        }
      }
    }
    const auto dn = static_cast<double>(n);
    row.decisions = n;
    row.mean_ms = total_ms / dn;
    row.forwards_per_decision = forwards / dn;
    row.mean_iterations = iterations / dn;
    row.intervention_rate = interventions / dn;
    rows.push_back(row);
    say(log, "timing " + row.configuration + ": " + fmt(row.mean_ms, 4) + " ms/decision");
  }
  if (feasible_only.decisions > 0) {
    feasible_only.mean_ms = feasible_ms / static_cast<double>(feasible_only.decisions);
    feasible_only.forwards_per_decision = 1.0;
  }
  rows.push_back(feasible_only);
  return rows;
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "configuration,decisions,mean_ms,forwards_per_decision,mean_iterations,"
         "intervention_rate\n";
  for (const TimingRow& r : rows) {
    out << r.configuration << ',' << r.decisions << ',' << r.mean_ms << ','
        << r.forwards_per_decision << ',' << r.mean_iterations << ',' << r.intervention_rate
        << '\n';
  }
}

// --- feasibility sample sweep ------------------------------------------------

SweepReport s_sweep(const RunConfig& config, std::ostream* log) {
  config.validate();
  if (config.env != EnvKind::path) {
    throw ConfigError("run.env: the sample-count sweep needs the path environment");
  }
  SweepReport rep;
  rep.points = config.sweep_points;
  rep.pairs = config.sweep_pairs;
  const ActionBox box = action_box(EnvKind::path, config.env_config);
  const std::uint64_t seed = config.seeds.front();

  std::vector<PartialState> states;
  std::vector<Vector> actions;
  Rng rng(derive_seed(seed, 20));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t i = 0; i < rep.pairs; ++i) {
    states.push_back(generate_partial_state(EnvKind::path, config.env_config,
                                            derive_seed(seed, 1000 + i)));
    Vector u(static_cast<Eigen::Index>(box.dim()));
    for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = unit(rng);
    actions.push_back(box.from_unit(view(u)));
  }

  const std::size_t m = rep.points.size();
  std::vector<std::vector<std::uint8_t>> decisions(m);
  for (std::size_t i = 0; i < m; ++i) {
    FeasibilityOptions opt;
    opt.path_points = rep.points[i];
    const auto model = make_feasibility_model(EnvKind::path, config.env_config, opt);
    decisions[i].resize(rep.pairs);
    const auto t0 = Clock::now();
    for (std::size_t p = 0; p < rep.pairs; ++p) {
      decisions[i][p] = model->g(states[p], view(actions[p])) ? 1 : 0;
    }
    rep.wall_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    const auto feasible = std::count(decisions[i].begin(), decisions[i].end(), 1);
    rep.feasible_share.push_back(static_cast<double>(feasible) / static_cast<double>(rep.pairs));
    say(log, "S=" + std::to_string(rep.points[i]) + ": " + fmt(rep.wall_ms.back(), 4) + " ms");
  }
  rep.agreement.assign(m, std::vector<double>(m, 1.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t same = 0;
      for (std::size_t p = 0; p < rep.pairs; ++p) same += decisions[i][p] == decisions[j][p];
      rep.agreement[i][j] = static_cast<double>(same) / static_cast<double>(rep.pairs);
    }
  }
  return rep;
}

void write_sweep_csv(std::ostream& out, const SweepReport& r) {
  out << "points,wall_ms,feasible_share";
  for (std::size_t s : r.points) out << ",agree_" << s;
  out << '\n';
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    out << r.points[i] << ',' << r.wall_ms[i] << ',' << r.feasible_share[i];
    for (double a : r.agreement[i]) out << ',' << a;
    out << '\n';
  }
}

// --- plot export -------------------------------------------------------------

double interpolate(const Curve& c, double step) {
  if (c.step.empty()) throw UsageError("interpolate: empty curve");
  if (step <= c.step.front()) return c.value.front();
  if (step >= c.step.back()) return c.value.back();
  const auto hi = std::lower_bound(c.step.begin(), c.step.end(), step);
  const auto j = static_cast<std::size_t>(hi - c.step.begin());
  if (c.step[j] == step) return c.value[j];
  const double t = (step - c.step[j - 1]) / (c.step[j] - c.step[j - 1]);
  return c.value[j - 1] + t * (c.value[j] - c.value[j - 1]);
}

Band band(const std::vector<Curve>& curves, double bin) {
  if (curves.empty()) throw UsageError("band: no curves");
  double last = std::numeric_limits<double>::infinity();
  for (const Curve& c : curves) {
    if (c.step.empty() || c.step.size() != c.value.size()) {
      throw UsageError("band: every curve needs matching, non-empty columns");
    }
    if (!std::is_sorted(c.step.begin(), c.step.end())) {
      throw UsageError("band: steps must be sorted");
    }
    last = std::min(last, c.step.back());
  }
  std::vector<double> grid;
  if (bin > 0.0) {
    for (std::size_t k = 1; static_cast<double>(k) * bin <= last; ++k) {
      grid.push_back(static_cast<double>(k) * bin);
    }
  } else {
    for (double s : curves.front().step) {
      if (s <= last) grid.push_back(s);
    }
  }
  Band b;
  std::vector<double> at(curves.size());
  for (double s : grid) {
    for (std::size_t i = 0; i < curves.size(); ++i) at[i] = interpolate(curves[i], s);
    std::sort(at.begin(), at.end());
    const std::size_t n = at.size();
    const double median = n % 2 == 1 ? at[n / 2] : 0.5 * (at[n / 2 - 1] + at[n / 2]);
    b.step.push_back(s);
    b.median.push_back(median);
    b.min.push_back(at.front());
    b.max.push_back(at.back());
  }
  return b;
}

std::vector<fs::path> export_plots(const std::vector<fs::path>& runs, const fs::path& out_dir,
                                   double bin) {
  if (runs.empty()) throw UsageError("export_plots: no run directories");
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const fs::path& run : runs) {
    std::vector<Curve> returns, violations;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(run)) {
      const fs::path progress = entry.path() / "progress.csv";
      if (entry.is_directory() && entry.path().filename().string().rfind("seed-", 0) == 0 &&
          fs::exists(progress)) {
        files.push_back(progress);
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError(run.string() + ": no seed-*/progress.csv found");
    for (const fs::path& f : files) {
      const CsvTable t = read_csv(f);
      const std::size_t cs = t.column("step", f);
      const std::size_t cr = t.column("mean_return", f);
      const std::size_t cv = t.column("violation_rate", f);
      Curve r, v;
      for (const auto& row : t.rows) {
        const double step = std::stod(row[cs]);
        if (!row[cr].empty()) {
          r.step.push_back(step);
          r.value.push_back(std::stod(row[cr]));
        }
        v.step.push_back(step);
        v.value.push_back(std::stod(row[cv]));
      }
      if (!r.step.empty()) returns.push_back(std::move(r));
      if (!v.step.empty()) violations.push_back(std::move(v));
    }
    const std::string name = run.filename().empty() ? run.parent_path().filename().string()
                                                    : run.filename().string();
    const auto emit = [&](const std::vector<Curve>& curves, const std::string& what) {
      if (curves.empty()) return;
      const Band b = band(curves, bin);
      std::ostringstream out;
      out.precision(10);
      out << "step,median,min,max\n";
      for (std::size_t i = 0; i < b.step.size(); ++i) {
        out << b.step[i] << ',' << b.median[i] << ',' << b.min[i] << ',' << b.max[i] << '\n';
      }
      const fs::path path = out_dir / (name + "-" + what + ".csv");
      write_file(path, out.str());
      written.push_back(path);
    };
    emit(returns, "return");
    emit(violations, "violation");
  }
  return written;
}

}  // namespace actmap
