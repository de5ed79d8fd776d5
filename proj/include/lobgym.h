// Copyright 2026 The lobgym Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*
 * C interface to the lobgym simulator and PPO trainer.
 *
 * Every function that can fail returns a lobgym_status; on failure the
 * message is available from lobgym_last_error() on the same thread until the
 * next failing call. Handles are opaque and owned by the caller.
 */
#ifndef LOBGYM_H
#define LOBGYM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LOBGYM_API __declspec(dllexport)
#else
#define LOBGYM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lobgym_status {
    LOBGYM_OK = 0,
    LOBGYM_ERR_ARG = 1,     /* null handle, short buffer, contract breach */
    LOBGYM_ERR_CONFIG = 2,  /* unreadable or invalid configuration */
    LOBGYM_ERR_RUNTIME = 3  /* numerical, I/O or checkpoint failure */
} lobgym_status;

typedef struct lobgym_config lobgym_config;
typedef struct lobgym_env lobgym_env;

typedef struct lobgym_action {
    double delta_ask; /* half-spreads in price units */
    double delta_bid;
    int64_t q_ask;
    int64_t q_bid;
} lobgym_action;

typedef struct lobgym_step_info {
    double reward;
    double pnl;
    double inventory;
    double mid;
    double mark_to_market;
    int64_t ask_filled;
    int64_t bid_filled;
    int done;
} lobgym_step_info;

/* Receives one progress line at a time; may be null. */
typedef void (*lobgym_log_fn)(const char* line, void* user);

LOBGYM_API const char* lobgym_version(void);
LOBGYM_API const char* lobgym_last_error(void);

LOBGYM_API lobgym_status lobgym_config_default(lobgym_config** out);
LOBGYM_API lobgym_status lobgym_config_load(const char* path, lobgym_config** out);
/* key is `section.name` or `seed`; value uses the config-file syntax. */
LOBGYM_API lobgym_status lobgym_config_set(lobgym_config* config, const char* key, const char* value);
LOBGYM_API lobgym_status lobgym_config_hash(const lobgym_config* config, uint64_t* out);
LOBGYM_API void lobgym_config_free(lobgym_config* config);

/* Command line seed when has_cli_seed, else the config seed, else the
 * LOBGYM_SEED environment variable, else 42. */
LOBGYM_API lobgym_status lobgym_resolve_seed(const lobgym_config* config, int has_cli_seed, uint64_t cli_seed,
                                             uint64_t* out);

LOBGYM_API lobgym_status lobgym_env_create(const lobgym_config* config, lobgym_env** out);
LOBGYM_API lobgym_status lobgym_env_observation_size(const lobgym_env* env, size_t* out);
/* Observations are written flattened: 7 market features, then (delta, Q)
 * pairs for ask levels followed by bid levels. */
LOBGYM_API lobgym_status lobgym_env_reset(lobgym_env* env, uint64_t seed, uint64_t stream, double* obs,
                                          size_t obs_len);
LOBGYM_API lobgym_status lobgym_env_step(lobgym_env* env, const lobgym_action* action, double* obs, size_t obs_len,
                                         lobgym_step_info* info);
LOBGYM_API void lobgym_env_free(lobgym_env* env);

/* Batch commands. Output goes to the config's io.out_dir. */
LOBGYM_API lobgym_status lobgym_simulate(const lobgym_config* config, uint64_t seed, int64_t steps,
                                         lobgym_log_fn log, void* user);
/* episodes < 0 uses ppo.episodes; resume_path may be null. */
LOBGYM_API lobgym_status lobgym_train(const lobgym_config* config, uint64_t seed, int64_t episodes,
                                      const char* resume_path, lobgym_log_fn log, void* user);
/* agent null uses agent.kind; episodes < 1 uses eval.episodes. */
LOBGYM_API lobgym_status lobgym_evaluate(const lobgym_config* config, uint64_t seed, const char* agent,
                                         int64_t episodes, lobgym_log_fn log, void* user);
LOBGYM_API lobgym_status lobgym_compare(const lobgym_config* config, uint64_t seed, int64_t episodes,
                                        lobgym_log_fn log, void* user);

#ifdef __cplusplus
}
#endif

#endif /* LOBGYM_H */
