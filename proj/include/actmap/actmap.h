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

/* C interface to actmap. All functions return an am_status; on failure
 * am_last_error() describes the problem for the calling thread. Handles are
 * opaque and owned by the caller, who releases them with the matching
 * *_free function. */

#ifndef ACTMAP_ACTMAP_H_
#define ACTMAP_ACTMAP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ACTMAP_BUILDING_LIBRARY)
#define ACTMAP_API __attribute__((visibility("default")))
#else
#define ACTMAP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum am_status {
  AM_OK = 0,
  AM_ERR_CONFIG = 1,  /* invalid configuration or incompatible inputs */
  AM_ERR_RUNTIME = 2, /* numerical or other failure while running */
  AM_ERR_USAGE = 3,   /* bad arguments to this interface */
  AM_ERR_IO = 4       /* file system failure */
} am_status;

typedef struct am_config am_config;
typedef struct am_env am_env;
typedef struct am_feas_policy am_feas_policy;

ACTMAP_API const char* am_version(void);
ACTMAP_API const char* am_last_error(void);
/* Field-level diagnostics ("section.key: message") of the last config error. */
ACTMAP_API size_t am_last_error_field_count(void);
ACTMAP_API const char* am_last_error_field(size_t index);

/* --- configuration ------------------------------------------------------- */

/* `path` may be NULL for pure defaults. `overrides` holds `count` strings of
 * the form "section.key=value". */
ACTMAP_API am_status am_config_load(const char* path, const char* const* overrides, size_t count,
                                    am_config** out);
ACTMAP_API am_status am_config_parse(const char* text, am_config** out);
ACTMAP_API am_status am_config_from_manifest(const char* manifest_path, am_config** out);
/* Copies the effective config (INI text, NUL-terminated) into `buffer` when
 * it fits; `needed` receives the full size including the terminator. */
ACTMAP_API am_status am_config_effective(const am_config* config, char* buffer, size_t capacity,
                                         size_t* needed);
ACTMAP_API am_status am_config_run_directory(const am_config* config, char* buffer,
                                             size_t capacity, size_t* needed);
ACTMAP_API void am_config_free(am_config* config);

/* --- runs (log lines go to stderr when verbose is non-zero) -------------- */

ACTMAP_API am_status am_pretrain(const am_config* config, int verbose);
ACTMAP_API am_status am_train(const am_config* config, int resume, int verbose);
/* episodes == 0 uses run.eval_episodes. */
ACTMAP_API am_status am_eval(const am_config* config, size_t episodes, int verbose);
/* Writes the timing table as CSV to `csv_path` (NULL: stdout). */
ACTMAP_API am_status am_timing(const am_config* config, const char* csv_path, int verbose);
ACTMAP_API am_status am_s_sweep(const am_config* config, const char* csv_path, int verbose);
/* bin <= 0 keeps the logged steps of the first seed. */
ACTMAP_API am_status am_export_plots(const char* const* run_dirs, size_t count,
                                     const char* out_dir, double bin);

/* --- environments -------------------------------------------------------- */

/* kind: "robot", "path" or "toy"; config may be NULL for defaults. */
ACTMAP_API am_status am_env_create(const char* kind, const am_config* config, am_env** out);
ACTMAP_API am_status am_env_reset(am_env* env, uint64_t seed);
ACTMAP_API size_t am_env_action_dim(const am_env* env);
/* Action in environment units. Any output pointer may be NULL. */
ACTMAP_API am_status am_env_step(am_env* env, const double* action, size_t dim, double* reward,
                                 int* done, int* violation);
/* Non-zero when the feasibility model accepts `action` in the current state. */
ACTMAP_API am_status am_env_feasible(const am_env* env, const double* action, size_t dim,
                                     int* feasible);
ACTMAP_API void am_env_free(am_env* env);

/* --- feasibility policies ------------------------------------------------ */

ACTMAP_API am_status am_feas_load(const char* path, const char* kind, const am_config* config,
                                  am_feas_policy** out);
/* Maps a latent in [-1, 1]^dim to an action for the environment's state. */
ACTMAP_API am_status am_feas_map(const am_feas_policy* policy, const am_env* env,
                                 const double* latent, size_t dim, double* action_out);
ACTMAP_API void am_feas_free(am_feas_policy* policy);

/* Gaussian kernel density of `query` (dim values) over `n` support points
 * stored row by row. */
ACTMAP_API am_status am_kde_eval(const double* support, size_t n, size_t dim, double sigma,
                                 const double* query, double* density);

#ifdef __cplusplus
}
#endif

#endif /* ACTMAP_ACTMAP_H_ */
