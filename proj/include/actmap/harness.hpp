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

#ifndef ACTMAP_HARNESS_HPP_
#define ACTMAP_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "actmap/config.hpp"

namespace actmap {

namespace fs = std::filesystem;

/// Layout of a run directory:
///   manifest.json, status.json, effective.ini
///   seed-<s>/feasibility.ckpt, pretrain.csv
///   seed-<s>/metrics.csv, progress.csv, eval.csv
///   seed-<s>/checkpoint/<network>.ckpt, checkpoint/state.txt
fs::path run_directory(const RunConfig& config);
fs::path seed_directory(const RunConfig& config, std::uint64_t seed);

struct PretrainSummary {
  std::uint64_t seed = 0;
  FeasHistoryRow last;
  fs::path checkpoint;
};

/// Pretrains one generator per seed.
std::vector<PretrainSummary> pretrain_run(const RunConfig& config, std::ostream* log = nullptr);

struct SeedSummary {
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  EvalSummary evaluation;
};

/// Pretrains (or loads) the generator when action mapping is used, then
/// trains and evaluates every seed. With `resume`, continues each seed from
/// its last checkpoint; seeds without one start over.
std::vector<SeedSummary> train_run(const RunConfig& config, bool resume = false,
                                   std::ostream* log = nullptr);

/// Reloads final checkpoints and evaluates `episodes` episodes per seed
/// (0 uses run.eval_episodes).
std::vector<SeedSummary> eval_run(const RunConfig& config, std::size_t episodes = 0,
                                  std::ostream* log = nullptr);

/// Config recorded in a run manifest.
RunConfig manifest_config(const fs::path& manifest);

struct TimingRow {
  std::string configuration;
  std::size_t decisions = 0;
  double mean_ms = 0.0;
  double forwards_per_decision = 0.0;
  double mean_iterations = 0.0;  // projection only
  double intervention_rate = 0.0;
};

/// Per-decision latency of base, action-mapping and projection decisions on
/// the same states. Uses checkpoints from the run directory when present,
/// otherwise freshly initialized networks. The "projection-feasible" row
/// only counts proposals that needed no projection step.
std::vector<TimingRow> timing(const RunConfig& config, std::ostream* log = nullptr);
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

struct SweepReport {
  std::vector<std::size_t> points;
  std::vector<std::vector<double>> agreement;  // [i][j]: share of equal decisions
  std::vector<double> wall_ms;                 // time to evaluate all pairs
  std::vector<double> feasible_share;
  std::size_t pairs = 0;
};

/// Path environment only: agreement of g between sample counts on random
/// (state, action) pairs.
SweepReport s_sweep(const RunConfig& config, std::ostream* log = nullptr);
void write_sweep_csv(std::ostream& out, const SweepReport& report);

struct Curve {
  std::vector<double> step;
  std::vector<double> value;
};

/// Linear interpolation between logged points; constant before the first
/// and after the last.
double interpolate(const Curve& curve, double step);

struct Band {
  std::vector<double> step;
  std::vector<double> median;
  std::vector<double> min;
  std::vector<double> max;
};

/// Resamples every curve at bin, 2 bin, ... up to the shortest curve's last
/// step (bin 0 uses the first curve's own steps) and takes the median and
/// extremes across curves.
Band band(const std::vector<Curve>& curves, double bin);

/// Reads seed-*/progress.csv under each run directory and writes
/// <run>-return.csv and <run>-violation.csv into `out_dir`. Returns the
/// written files.
std::vector<fs::path> export_plots(const std::vector<fs::path>& runs, const fs::path& out_dir,
                                   double bin);

}  // namespace actmap

#endif  // ACTMAP_HARNESS_HPP_
