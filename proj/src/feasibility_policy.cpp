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

#include "actmap/feasibility_policy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "actmap/density.hpp"
#include "actmap/error.hpp"
#include "actmap/parallel.hpp"

namespace actmap {

void FeasTrainConfig::validate() const {
  std::vector<std::string> bad;
  if (samples < 2) bad.push_back("feasibility.samples");
  if (states_per_batch < 1) bad.push_back("feasibility.states_per_batch");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) bad.push_back("feasibility.sigma");
  if (!(sigma_prime_factor >= 1.0) || !std::isfinite(sigma_prime_factor)) {
    bad.push_back("feasibility.sigma_prime_factor");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    bad.push_back("feasibility.learning_rate");
  }
  if (eval_samples < 2) bad.push_back("feasibility.eval_samples");
  if (eval_states < 1) bad.push_back("feasibility.eval_states");
  if (trunk_hidden.empty()) bad.push_back("feasibility.trunk_hidden");
  if (!bad.empty()) throw ConfigError("invalid feasibility training settings", bad);
}

double FeasEvalReport::min_mode_share() const {
  double m = mode_share.empty() ? 0.0 : 1.0;
  for (const auto& s : mode_share) m = std::min(m, std::min(s[0], s[1]));
  return m;
}

double FeasEvalReport::median_mode_share() const {
  if (mode_share.empty()) return 0.0;
  std::vector<double> v;
  for (const auto& s : mode_share) v.push_back(std::min(s[0], s[1]));
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

FeasibilityPolicy::FeasibilityPolicy(EnvKind kind, EnvConfig config, SetNet net,
                                     NetworkParams params)
    : kind_(kind),
      config_(std::move(config)),
      box_(action_box(kind, config_)),
      net_(std::move(net)),
      params_(std::move(params)) {
  if (params_.shapes() != net_.shapes()) {
    throw ConfigError("feasibility policy parameters do not match the network layout");
  }
  if (net_.spec().extra_dim != box_.dim() || net_.spec().output_dim != box_.dim()) {
    throw ConfigError("feasibility policy latent and output sizes must equal the action size");
  }
}

NetworkSpec FeasibilityPolicy::network_spec(EnvKind kind, std::vector<std::size_t> set_hidden,
                                            std::vector<std::size_t> trunk_hidden) {
  NetworkSpec spec;
  spec.obs = observation_spec(kind, true);
  const std::size_t d = action_box(kind, EnvConfig{}).dim();
  spec.extra_dim = d;
  spec.output_dim = d;
  spec.set_hidden = std::move(set_hidden);
  spec.trunk_hidden = std::move(trunk_hidden);
  spec.hidden = Activation::tanh;
  spec.output = Activation::tanh;
  // Starts close to tanh(1.5 z), which spreads the latent cube over the box.
  spec.extra_skip = 1.5;
  spec.output_init_scale = 0.1;
  return spec;
}

Matrix FeasibilityPolicy::map_unit(const Observation& partial_obs, const Matrix& latents) const {
  return net_.forward(params_, ObsBatch::single(partial_obs), latents);
}

Matrix FeasibilityPolicy::map(const PartialState& s, const Matrix& latents) const {
  Matrix u = map_unit(encode_partial(s, config_), latents);
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
      u(i, k) = box_.low[k] + 0.5 * (u(i, k) + 1.0) * (box_.high[k] - box_.low[k]);
    }
  }
  return u;
}

Vector FeasibilityPolicy::map_latent(const PartialState& s, std::span<const double> latent) const {
  if (latent.size() != action_dim()) throw ConfigError("latent size must equal the action size");
  const Matrix z = Eigen::Map<const Eigen::RowVectorXd>(latent.data(),
                                                        static_cast<Eigen::Index>(latent.size()));
  return map(s, z).row(0).transpose();
}

void FeasibilityPolicy::save(const std::string& path) const { save_checkpoint(path, params_); }

FeasibilityPolicy FeasibilityPolicy::load(const std::string& path, EnvKind kind,
                                          const EnvConfig& config) {
  NetworkParams params = load_checkpoint(path);
  const auto& shapes = params.shapes();
  const std::size_t sets = observation_spec(kind, true).set_dims.size();
  const std::size_t layers = shapes.size();
  // The encoder depth is not stored; try each split and keep the one whose
  // layout reproduces the checkpoint exactly.
  const std::size_t max_depth = sets == 0 ? 0 : (layers - 2) / sets;
  for (std::size_t depth = (sets == 0 ? 0 : 1); depth <= max_depth; ++depth) {
    std::vector<std::size_t> set_hidden, trunk_hidden;
    for (std::size_t l = 0; l < depth; ++l) set_hidden.push_back(shapes[l].rows);
    for (std::size_t l = sets * depth; l + 1 < layers; ++l) trunk_hidden.push_back(shapes[l].rows);
    if (trunk_hidden.empty()) continue;
    try {
      SetNet net(network_spec(kind, set_hidden, trunk_hidden));
      if (net.shapes() == shapes) return FeasibilityPolicy(kind, config, net, std::move(params));
    } catch (const ConfigError&) {
    }
  }
  throw ConfigError("checkpoint '" + path + "' does not hold a " + std::string(to_string(kind)) +
                    " feasibility policy");
}

FeasibilityPolicy make_feasibility_policy(EnvKind kind, const EnvConfig& config,
                                          const FeasTrainConfig& train, Rng& rng) {
  SetNet net(FeasibilityPolicy::network_spec(kind, train.set_hidden, train.trunk_hidden));
  NetworkParams params = net.init(rng);
  return FeasibilityPolicy(kind, config, std::move(net), std::move(params));
}

namespace {

Matrix uniform_latents(std::size_t n, std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) z(i, k) = u(rng);
  }
  return z;
}

struct StateStep {
  std::vector<double> gradient;
  std::size_t dropped = 0;
  bool skipped = false;
};

StateStep state_gradient(const FeasTrainConfig& cfg, const FeasibilityPolicy& policy,
                         const FeasibilityModel& model, const PartialState& state, Rng& rng,
                         std::size_t state_id) {
  const std::size_t d = policy.action_dim();
  const Matrix z = uniform_latents(cfg.samples, d, rng);
  Tape tape;
  const Tape::Binding binding = tape.bind(policy.params());
  const Var support = policy.net().forward(
      tape, binding, ObsBatch::single(encode_partial(state, policy.config())), tape.constant(z));
  SampleBatch batch = make_sample_batch(support.value(), cfg.sigma,
                                        cfg.sigma * cfg.sigma_prime_factor, rng, state_id);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto row = batch.noisy.row(static_cast<Eigen::Index>(j));
    bool ok = (row.array().abs() <= 1.0).all();
    if (ok) {
      const Vector u = row.transpose();
      const Vector a = policy.box().from_unit(std::span<const double>(u.data(), u.size()));
      ok = model.g(state, std::span<const double>(a.data(), a.size()));
    }
    batch.feasible[j] = ok ? 1 : 0;
  }
  estimate_partition(batch);
  StateStep out;
  if (batch.flagged) {
    out.skipped = true;
    return out;
  }
  JsGradient g = js_gradient(tape, binding, support, batch);
  out.gradient = std::move(g.gradient);
  out.dropped = g.dropped;
  return out;
}

}  // namespace

PretrainResult pretrain(const FeasTrainConfig& config, EnvKind kind, const EnvConfig& env,
                        const FeasibilityModel& model, const StateGenerator& states,
                        const PretrainCallback& on_eval) {
  config.validate();
  Rng init_rng(derive_seed(config.seed, 0));
  return pretrain(config, make_feasibility_policy(kind, env, config, init_rng), model, states,
                  on_eval);
}

PretrainResult pretrain(const FeasTrainConfig& config, FeasibilityPolicy policy,
                        const FeasibilityModel& model, const StateGenerator& states,
                        const PretrainCallback& on_eval) {
  config.validate();
  if (model.kind() != policy.kind()) throw ConfigError("feasibility model and policy disagree");
  const std::uint64_t train_stream = derive_seed(config.seed, 1);
  const std::uint64_t eval_stream = derive_seed(config.seed, 2);
  std::vector<PartialState> eval_states;
  for (std::size_t i = 0; i < config.eval_states; ++i) {
    eval_states.push_back(states(derive_seed(eval_stream, i)));
  }

  PretrainResult result{std::move(policy), {}};
  FeasibilityPolicy& pol = result.policy;
  AdamState adam(pol.params().size());
  std::size_t dropped = 0, skipped = 0;
  const std::size_t K = config.states_per_batch;
  std::vector<StateStep> per_state(K);

  const auto record = [&](std::size_t step) {
    FeasHistoryRow row;
    row.step = step;
    row.report = evaluate(pol, eval_states, config.eval_samples, model, eval_stream);
    row.dropped = dropped;
    row.skipped_states = skipped;
    result.history.push_back(row);
    if (on_eval) on_eval(row, FeasibilityPolicy(pol));
  };

  for (std::size_t step = 0; step < config.steps; ++step) {
    parallel_for(K, config.workers, [&](std::size_t k) {
      const std::uint64_t id = derive_seed(train_stream, step * K + k);
      Rng rng(derive_seed(id, 1));
      per_state[k] = state_gradient(config, pol, model, states(id), rng, k);
    });
    std::vector<double> grad(pol.params().size(), 0.0);
    bool any = false;
    for (const StateStep& s : per_state) {
      dropped += s.dropped;
      if (s.skipped) {
        ++skipped;
        continue;
      }
      any = true;
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += s.gradient[i];
    }
    if (any) {
      for (double& g : grad) g /= static_cast<double>(K);
      adam_step(pol.params(), grad, adam, config.learning_rate);
    }
    if (config.eval_interval > 0 && (step + 1) % config.eval_interval == 0 &&
        step + 1 < config.steps) {
      record(step + 1);
    }
  }
  record(config.steps);
  return result;
}

FeasEvalReport evaluate_sampler(const ActionSampler& sampler, std::span<const PartialState> states,
                                std::size_t samples, const FeasibilityModel& model,
                                std::uint64_t seed) {
  if (samples < 2) throw UsageError("evaluation needs at least two samples per state");
  if (states.empty()) throw UsageError("evaluation needs at least one state");
  FeasEvalReport report;
  report.states = states.size();
  report.samples_per_state = samples;
  std::size_t feasible_total = 0;
  double coverage_sum = 0.0;
  std::size_t coverage_states = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    const Matrix actions = sampler(states[i], samples, rng);
    const std::vector<std::uint8_t> ok = model.g_batch(states[i], actions);
    std::vector<Eigen::Index> feasible;
    for (std::size_t j = 0; j < ok.size(); ++j) {
      if (ok[j]) feasible.push_back(static_cast<Eigen::Index>(j));
    }
    feasible_total += feasible.size();
    if (feasible.size() >= 2) {
      double sum = 0.0;
      for (std::size_t a = 0; a < feasible.size(); ++a) {
        for (std::size_t b = a + 1; b < feasible.size(); ++b) {
          sum += (actions.row(feasible[a]) - actions.row(feasible[b])).norm();
        }
      }
      const double pairs = 0.5 * static_cast<double>(feasible.size()) *
                           static_cast<double>(feasible.size() - 1);
      coverage_sum += sum / pairs;
      ++coverage_states;
    }
    if (const auto* toy = std::get_if<ToyDiskState>(&states[i])) {
      std::array<double, 2> share{0.0, 0.0};
      for (Eigen::Index j : feasible) {
        const Vec2 a(actions(j, 0), actions(j, 1));
        for (int k = 0; k < 2; ++k) {
          if ((a - toy->disks[static_cast<std::size_t>(k)].center).norm() <=
              toy->disks[static_cast<std::size_t>(k)].radius) {
            share[static_cast<std::size_t>(k)] += 1.0;
            break;
          }
        }
      }
      share[0] /= static_cast<double>(samples);
      share[1] /= static_cast<double>(samples);
      report.mode_share.push_back(share);
    }
  }
  report.precision =
      static_cast<double>(feasible_total) / static_cast<double>(samples * states.size());
  if (coverage_states > 0) report.coverage = coverage_sum / static_cast<double>(coverage_states);
  return report;
}

FeasEvalReport evaluate(const FeasibilityPolicy& policy, std::span<const PartialState> states,
                        std::size_t samples, const FeasibilityModel& model, std::uint64_t seed) {
  const ActionSampler sampler = [&](const PartialState& s, std::size_t n, Rng& rng) {
    return policy.map(s, uniform_latents(n, policy.action_dim(), rng));
  };
  return evaluate_sampler(sampler, states, samples, model, seed);
}

void write_feas_eval_header(std::ostream& out) {
  out << "step,precision,coverage,dropped,skipped_states,min_mode_share\n";
}

void write_feas_eval_row(std::ostream& out, const FeasHistoryRow& row) {
  out << row.step << ',' << row.report.precision << ',';
  if (row.report.coverage) out << *row.report.coverage;
  out << ',' << row.dropped << ',' << row.skipped_states << ',';
  if (!row.report.mode_share.empty()) out << row.report.min_mode_share();
  out << '\n';
}

}  // namespace actmap
