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

#include "lobgym.h"

#include <cstdlib>
#include <exception>
#include <limits>
#include <new>
#include <optional>
#include <string>

#include "lobgym/commands.hpp"
#include "lobgym/config.hpp"
#include "lobgym/env.hpp"
#include "lobgym/errors.hpp"

struct lobgym_config {
    lobgym::RunConfig cfg;
};

struct lobgym_env {
    explicit lobgym_env(const lobgym::EnvConfig& c) : env(c) {}
    lobgym::MarketEnv env;
    bool started = false;
};

namespace {

thread_local std::string g_last_error;

lobgym_status fail(lobgym_status status, const std::string& msg)
{
    g_last_error = msg;
    return status;
}

// Every entry point funnels through here so no exception crosses the C
// boundary.
template <class F>
lobgym_status guarded(F&& f)
{
    try {
        return f();
    } catch (const lobgym::ConfigError& e) {
        return fail(LOBGYM_ERR_CONFIG, e.what());
    } catch (const lobgym::ContractError& e) {
        return fail(LOBGYM_ERR_ARG, e.what());
    } catch (const std::bad_alloc&) {
        return fail(LOBGYM_ERR_RUNTIME, "out of memory");
    } catch (const std::exception& e) {
        return fail(LOBGYM_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(LOBGYM_ERR_RUNTIME, "unknown error");
    }
}

lobgym::Logger logger(lobgym_log_fn log, void* user)
{
    if (log == nullptr) {
        return {};
    }
    return [log, user](const std::string& line) { log(line.c_str(), user); };
}

lobgym_status copy_obs(const lobgym::Observation& o, double* out, std::size_t len)
{
    if (out == nullptr) {
        return LOBGYM_OK;
    }
    const std::vector<double> flat = lobgym::flatten(o);
    if (len < flat.size()) {
        return fail(LOBGYM_ERR_ARG, "observation buffer too short: need " + std::to_string(flat.size()));
    }
    std::copy(flat.begin(), flat.end(), out);
    return LOBGYM_OK;
}

}  // namespace

extern "C" {

const char* lobgym_version(void)
{
    static const std::string v = lobgym::version_string();
    return v.c_str();
}

const char* lobgym_last_error(void) { return g_last_error.c_str(); }

lobgym_status lobgym_config_default(lobgym_config** out)
{
    if (out == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null output pointer");
    }
    return guarded([&] {
        *out = new lobgym_config{};
        return LOBGYM_OK;
    });
}

lobgym_status lobgym_config_load(const char* path, lobgym_config** out)
{
    if (path == nullptr || out == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null argument");
    }
    return guarded([&] {
        *out = new lobgym_config{lobgym::load_config(path)};
        return LOBGYM_OK;
    });
}

lobgym_status lobgym_config_set(lobgym_config* config, const char* key, const char* value)
{
    if (config == nullptr || key == nullptr || value == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null argument");
    }
    return guarded([&] {
        lobgym::RunConfig updated = config->cfg;
        lobgym::set_config_value(updated, key, value);
        updated.validate();
        config->cfg = std::move(updated);
        return LOBGYM_OK;
    });
}

lobgym_status lobgym_config_hash(const lobgym_config* config, uint64_t* out)
{
    if (config == nullptr || out == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null argument");
    }
    return guarded([&] {
        *out = config->cfg.hash();
        return LOBGYM_OK;
    });
}

void lobgym_config_free(lobgym_config* config) { delete config; }

lobgym_status lobgym_resolve_seed(const lobgym_config* config, int has_cli_seed, uint64_t cli_seed, uint64_t* out)
{
    if (config == nullptr || out == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null argument");
    }
    return guarded([&] {
        const auto cli = has_cli_seed ? std::optional<std::uint64_t>(cli_seed) : std::nullopt;
        *out = lobgym::resolve_seed(cli, config->cfg, std::getenv("LOBGYM_SEED"));
        return LOBGYM_OK;
    });
}

lobgym_status lobgym_env_create(const lobgym_config* config, lobgym_env** out)
{
    if (config == nullptr || out == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null argument");
    }
    return guarded([&] {
        *out = new lobgym_env(config->cfg.env);
        return LOBGYM_OK;
    });
}

lobgym_status lobgym_env_observation_size(const lobgym_env* env, size_t* out)
{
    if (env == nullptr || out == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null argument");
    }
    *out = env->env.observation_size();
    return LOBGYM_OK;
}

lobgym_status lobgym_env_reset(lobgym_env* env, uint64_t seed, uint64_t stream, double* obs, size_t obs_len)
{
    if (env == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null environment");
    }
    return guarded([&] {
        if (obs != nullptr && obs_len < env->env.observation_size()) {
            return fail(LOBGYM_ERR_ARG, "observation buffer too short");
        }
        const lobgym::Observation o = env->env.reset(lobgym::RngStream(seed, stream));
        env->started = true;
        return copy_obs(o, obs, obs_len);
    });
}

lobgym_status lobgym_env_step(lobgym_env* env, const lobgym_action* action, double* obs, size_t obs_len,
                              lobgym_step_info* info)
{
    if (env == nullptr || action == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null argument");
    }
    return guarded([&] {
        if (obs != nullptr && obs_len < env->env.observation_size()) {
            return fail(LOBGYM_ERR_ARG, "observation buffer too short");
        }
        const lobgym::StepResult r =
            env->env.step(lobgym::Action{action->delta_ask, action->delta_bid, action->q_ask, action->q_bid});
        if (info != nullptr) {
            info->reward = r.reward;
            info->pnl = r.pnl.pnl;
            info->inventory = env->env.inventory();
            info->mid = env->env.mid();
            info->mark_to_market = env->env.mark_to_market();
            info->ask_filled = r.pnl.q_ask_filled;
            info->bid_filled = r.pnl.q_bid_filled;
            info->done = r.done ? 1 : 0;
        }
        return copy_obs(r.observation, obs, obs_len);
    });
}

void lobgym_env_free(lobgym_env* env) { delete env; }

lobgym_status lobgym_simulate(const lobgym_config* config, uint64_t seed, int64_t steps, lobgym_log_fn log,
                              void* user)
{
    if (config == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null config");
    }
    return guarded([&] {
        if (steps < 1 || steps > std::numeric_limits<int>::max()) {
            return fail(LOBGYM_ERR_CONFIG, "steps must lie in [1, 2^31)");
        }
        lobgym::cmd_simulate(config->cfg, seed, static_cast<int>(steps), logger(log, user));
        return LOBGYM_OK;
    });
}

lobgym_status lobgym_train(const lobgym_config* config, uint64_t seed, int64_t episodes, const char* resume_path,
                           lobgym_log_fn log, void* user)
{
    if (config == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null config");
    }
    return guarded([&] {
        if (episodes > std::numeric_limits<int>::max()) {
            return fail(LOBGYM_ERR_CONFIG, "too many episodes");
        }
        const auto n = episodes < 0 ? std::nullopt : std::optional<int>(static_cast<int>(episodes));
        std::optional<std::filesystem::path> resume;
        if (resume_path != nullptr && *resume_path != '\0') {
            resume = resume_path;
        }
        lobgym::cmd_train(config->cfg, seed, n, resume, logger(log, user));
        return LOBGYM_OK;
    });
}

lobgym_status lobgym_evaluate(const lobgym_config* config, uint64_t seed, const char* agent, int64_t episodes,
                              lobgym_log_fn log, void* user)
{
    if (config == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null config");
    }
    return guarded([&] {
        const std::string kind = agent != nullptr ? agent : config->cfg.agent.kind;
        const auto n = episodes < 1 ? std::nullopt
                                    : std::optional<int>(static_cast<int>(
                                          std::min<int64_t>(episodes, std::numeric_limits<int>::max())));
        lobgym::cmd_evaluate(config->cfg, seed, kind, n, logger(log, user));
        return LOBGYM_OK;
    });
}

lobgym_status lobgym_compare(const lobgym_config* config, uint64_t seed, int64_t episodes, lobgym_log_fn log,
                             void* user)
{
    if (config == nullptr) {
        return fail(LOBGYM_ERR_ARG, "null config");
    }
    return guarded([&] {
        const auto n = episodes < 1 ? std::nullopt
                                    : std::optional<int>(static_cast<int>(
                                          std::min<int64_t>(episodes, std::numeric_limits<int>::max())));
        lobgym::cmd_compare(config->cfg, seed, n, logger(log, user));
        return LOBGYM_OK;
    });
}

}  // extern "C"
