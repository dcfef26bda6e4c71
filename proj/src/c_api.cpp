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

#include "actmap/actmap.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "actmap/config.hpp"
#include "actmap/density.hpp"
#include "actmap/error.hpp"
#include "actmap/harness.hpp"

struct am_config {
  actmap::RunConfig config;
};

struct am_env {
  std::unique_ptr<actmap::Environment> env;
  std::unique_ptr<actmap::FeasibilityModel> model;
};

struct am_feas_policy {
  std::optional<actmap::FeasibilityPolicy> policy;
};

namespace {

thread_local std::string g_error;
thread_local std::vector<std::string> g_fields;

am_status fail(am_status code, const std::string& message,
               std::vector<std::string> fields = {}) {
  g_error = message;
  g_fields = std::move(fields);
  return code;
}

// Runs fn and maps exceptions onto status codes.
template <class Fn>
am_status guarded(Fn&& fn) {
  try {
    g_error.clear();
    g_fields.clear();
    fn();
    return AM_OK;
  } catch (const actmap::ConfigError& e) {
    return fail(AM_ERR_CONFIG, e.what(), e.fields());
  } catch (const actmap::UsageError& e) {
    return fail(AM_ERR_USAGE, e.what());
  } catch (const actmap::IoError& e) {
    return fail(AM_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(AM_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(AM_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(AM_ERR_RUNTIME, "unknown error");
  }
}

am_status copy_out(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  if (needed != nullptr) *needed = text.size() + 1;
  if (buffer == nullptr || capacity == 0) return AM_OK;
  if (capacity < text.size() + 1) return fail(AM_ERR_USAGE, "buffer too small");
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  return AM_OK;
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw actmap::UsageError(std::string(what) + " must not be null");
}

std::ostream* log_stream(int verbose) { return verbose != 0 ? &std::cerr : nullptr; }

// Writes to a file, or stdout when no path is given.
template <class Fn>
void emit_csv(const char* path, Fn&& write) {
  if (path == nullptr) {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw actmap::IoError(std::string("cannot write ") + path);
  write(out);
}

}  // namespace

extern "C" {

const char* am_version(void) { return "0.1.0"; }

const char* am_last_error(void) { return g_error.c_str(); }

size_t am_last_error_field_count(void) { return g_fields.size(); }

const char* am_last_error_field(size_t index) {
  return index < g_fields.size() ? g_fields[index].c_str() : nullptr;
}

am_status am_config_load(const char* path, const char* const* overrides, size_t count,
                         am_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    if (count > 0) need(overrides, "overrides");
    actmap::ConfigOverrides pairs;
    for (size_t i = 0; i < count; ++i) {
      need(overrides[i], "override");
      const std::string s = overrides[i];
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw actmap::ConfigError("invalid configuration",
                                  {s + ": overrides take the form section.key=value"});
      }
      pairs.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    std::string text;
    if (path != nullptr) {
      std::ifstream in(path);
      if (!in) throw actmap::ConfigError(std::string("cannot open config file ") + path);
      text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    *out = new am_config{actmap::parse_config(text, pairs)};
  });
}

am_status am_config_parse(const char* text, am_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = nullptr;
    *out = new am_config{actmap::parse_config(text)};
  });
}

am_status am_config_from_manifest(const char* manifest_path, am_config** out) {
  return guarded([&] {
    need(manifest_path, "manifest_path");
    need(out, "out");
    *out = nullptr;
    *out = new am_config{actmap::manifest_config(manifest_path)};
  });
}

am_status am_config_effective(const am_config* config, char* buffer, size_t capacity,
                              size_t* needed) {
  std::string text;
  const am_status s = guarded([&] {
    need(config, "config");
    text = actmap::effective_config(config->config);
  });
  return s != AM_OK ? s : copy_out(text, buffer, capacity, needed);
}

am_status am_config_run_directory(const am_config* config, char* buffer, size_t capacity,
                                  size_t* needed) {
  std::string text;
  const am_status s = guarded([&] {
    need(config, "config");
    text = actmap::run_directory(config->config).string();
  });
  return s != AM_OK ? s : copy_out(text, buffer, capacity, needed);
}

void am_config_free(am_config* config) { delete config; }

am_status am_pretrain(const am_config* config, int verbose) {
  return guarded([&] {
    need(config, "config");
    actmap::pretrain_run(config->config, log_stream(verbose));
  });
}

am_status am_train(const am_config* config, int resume, int verbose) {
  return guarded([&] {
    need(config, "config");
    actmap::train_run(config->config, resume != 0, log_stream(verbose));
  });
}

am_status am_eval(const am_config* config, size_t episodes, int verbose) {
  return guarded([&] {
    need(config, "config");
    actmap::eval_run(config->config, episodes, log_stream(verbose));
  });
}

am_status am_timing(const am_config* config, const char* csv_path, int verbose) {
  return guarded([&] {
    need(config, "config");
    const auto rows = actmap::timing(config->config, log_stream(verbose));
    emit_csv(csv_path, [&](std::ostream& out) { actmap::write_timing_csv(out, rows); });
  });
}

am_status am_s_sweep(const am_config* config, const char* csv_path, int verbose) {
  return guarded([&] {
    need(config, "config");
    const auto report = actmap::s_sweep(config->config, log_stream(verbose));
    emit_csv(csv_path, [&](std::ostream& out) { actmap::write_sweep_csv(out, report); });
  });
}

am_status am_export_plots(const char* const* run_dirs, size_t count, const char* out_dir,
                          double bin) {
  return guarded([&] {
    need(run_dirs, "run_dirs");
    need(out_dir, "out_dir");
    std::vector<std::filesystem::path> runs;
    for (size_t i = 0; i < count; ++i) {
      need(run_dirs[i], "run directory");
      runs.emplace_back(run_dirs[i]);
    }
    actmap::export_plots(runs, out_dir, bin);
  });
}

am_status am_env_create(const char* kind, const am_config* config, am_env** out) {
  return guarded([&] {
    need(kind, "kind");
    need(out, "out");
    *out = nullptr;
    const actmap::EnvKind k = actmap::env_kind_from_string(kind);
    const actmap::EnvConfig ec = config != nullptr ? config->config.env_config
                                                   : actmap::EnvConfig{};
    auto handle = std::make_unique<am_env>();
    handle->env = actmap::make_environment(k, ec);
    handle->model = actmap::make_feasibility_model(k, ec);
    handle->env->reset(0);
    *out = handle.release();
  });
}

am_status am_env_reset(am_env* env, uint64_t seed) {
  return guarded([&] {
    need(env, "env");
    env->env->reset(seed);
  });
}

size_t am_env_action_dim(const am_env* env) { return env != nullptr ? env->env->action_dim() : 0; }

am_status am_env_step(am_env* env, const double* action, size_t dim, double* reward, int* done,
                      int* violation) {
  return guarded([&] {
    need(env, "env");
    need(action, "action");
    if (dim != env->env->action_dim()) throw actmap::UsageError("action has the wrong dimension");
    const actmap::StepResult r = env->env->step(std::span<const double>(action, dim));
    if (reward != nullptr) *reward = r.reward;
    if (done != nullptr) *done = r.done ? 1 : 0;
    if (violation != nullptr) *violation = r.info.violation ? 1 : 0;
  });
}

am_status am_env_feasible(const am_env* env, const double* action, size_t dim, int* feasible) {
  return guarded([&] {
    need(env, "env");
    need(action, "action");
    need(feasible, "feasible");
    if (dim != env->env->action_dim()) throw actmap::UsageError("action has the wrong dimension");
    *feasible = env->model->g(env->env->partial_state(), std::span<const double>(action, dim));
  });
}

void am_env_free(am_env* env) { delete env; }

am_status am_feas_load(const char* path, const char* kind, const am_config* config,
                       am_feas_policy** out) {
  return guarded([&] {
    need(path, "path");
    need(kind, "kind");
    need(out, "out");
    *out = nullptr;
    const actmap::EnvConfig ec = config != nullptr ? config->config.env_config
                                                   : actmap::EnvConfig{};
    auto handle = std::make_unique<am_feas_policy>();
    handle->policy = actmap::FeasibilityPolicy::load(path, actmap::env_kind_from_string(kind), ec);
    *out = handle.release();
  });
}

am_status am_feas_map(const am_feas_policy* policy, const am_env* env, const double* latent,
                      size_t dim, double* action_out) {
  return guarded([&] {
    need(policy, "policy");
    need(env, "env");
    need(latent, "latent");
    need(action_out, "action_out");
    if (policy->policy->kind() != env->env->kind()) {
      throw actmap::ConfigError("policy and environment kinds differ");
    }
    if (dim != policy->policy->action_dim()) {
      throw actmap::UsageError("latent has the wrong dimension");
    }
    const actmap::Vector a = policy->policy->map_latent(env->env->partial_state(),
                                                        std::span<const double>(latent, dim));
    std::copy(a.data(), a.data() + a.size(), action_out);
  });
}

void am_feas_free(am_feas_policy* policy) { delete policy; }

am_status am_kde_eval(const double* support, size_t n, size_t dim, double sigma,
                      const double* query, double* density) {
  return guarded([&] {
    need(support, "support");
    need(query, "query");
    need(density, "density");
    if (n == 0 || dim == 0) throw actmap::UsageError("support must be non-empty");
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(dim);
    const actmap::Matrix s = Eigen::Map<const actmap::RowMatrix>(support, rows, cols);
    *density = actmap::kde_eval(s, std::span<const double>(query, dim), sigma);
  });
}

}  // extern "C"
