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

// lobgym command-line front end. Talks to the library only through the C
// interface in lobgym.h.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lobgym.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code(lobgym_status s)
{
    switch (s) {
    case LOBGYM_OK: return 0;
    case LOBGYM_ERR_RUNTIME: return kExitRuntime;
    default: return kExitConfig;  // bad arguments count as bad configuration
    }
}

void print_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

struct ConfigDeleter {
    void operator()(lobgym_config* c) const { lobgym_config_free(c); }
};
using ConfigPtr = std::unique_ptr<lobgym_config, ConfigDeleter>;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<int> workers;
    std::optional<std::int64_t> episodes;
    bool log_events = false;
    std::int64_t steps = 10000;
    std::optional<int> checkpoint_every;
    std::string agent;
    std::string checkpoint;
    std::string resume;
};

// Thrown after the message has been reported.
struct Failure {
    int code;
};

void check(lobgym_status s, const char* what)
{
    if (s != LOBGYM_OK) {
        std::fprintf(stderr, "lobgym: %s: %s\n", what, lobgym_last_error());
        throw Failure{exit_code(s)};
    }
}

void set(lobgym_config* c, const char* key, const std::string& value)
{
    check(lobgym_config_set(c, key, value.c_str()), key);
}

std::string quoted(const std::string& s)
{
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') {
            out.push_back('\\');
        }
        out.push_back(ch);
    }
    return out + "\"";
}

ConfigPtr build_config(const Options& o)
{
    lobgym_config* raw = nullptr;
    if (o.config_path.empty()) {
        check(lobgym_config_default(&raw), "config");
    } else {
        check(lobgym_config_load(o.config_path.c_str(), &raw), "config");
    }
    ConfigPtr c(raw);
    if (!o.out_dir.empty()) {
        set(c.get(), "io.out_dir", quoted(o.out_dir));
    }
    if (o.workers) {
        set(c.get(), "ppo.workers", std::to_string(*o.workers));
    }
    if (o.log_events) {
        set(c.get(), "io.log_events", "true");
    }
    if (o.checkpoint_every) {
        set(c.get(), "ppo.checkpoint_every", std::to_string(*o.checkpoint_every));
    }
    if (!o.checkpoint.empty()) {
        set(c.get(), "agent.checkpoint", quoted(o.checkpoint));
    }
    return c;
}

std::uint64_t seed_for(const lobgym_config* c, const Options& o)
{
    std::uint64_t seed = 0;
    check(lobgym_resolve_seed(c, o.seed.has_value(), o.seed.value_or(0), &seed), "seed");
    return seed;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Limit order book market-making simulator and PPO trainer"};
    app.set_version_flag("--version", std::string(lobgym_version()));
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--config", o.config_path, "Run configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Run seed; overrides the config and LOBGYM_SEED");
    app.add_option("--out", o.out_dir, "Output directory");
    app.add_option("--workers", o.workers, "Parallel rollout workers")->check(CLI::PositiveNumber);
    app.add_option("--episodes", o.episodes, "Episodes to train or evaluate")->check(CLI::NonNegativeNumber);
    app.add_flag("--log-events", o.log_events, "Write events.csv during simulate");

    auto* simulate = app.add_subcommand("simulate", "Market-only run with a stylized-facts report");
    simulate->add_option("--steps", o.steps, "Order-flow events to simulate")->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train", "Train the PPO market maker");
    train->add_option("--checkpoint-every", o.checkpoint_every, "Checkpoint cadence in episodes (0: end only)")
        ->check(CLI::NonNegativeNumber);
    train->add_option("--resume", o.resume, "Continue from this checkpoint")->check(CLI::ExistingFile);

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate one agent");
    evaluate->add_option("--agent", o.agent, "rl, stoikov or long_only")
        ->check(CLI::IsMember({"rl", "stoikov", "long_only"}));
    evaluate->add_option("--checkpoint", o.checkpoint, "Trained policy for the rl agent");

    auto* compare = app.add_subcommand("compare", "Evaluate every agent on shared seeds");
    compare->add_option("--checkpoint", o.checkpoint, "Trained policy for the rl agent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        ConfigPtr config = build_config(o);
        const std::uint64_t seed = seed_for(config.get(), o);
        const std::int64_t episodes = o.episodes ? *o.episodes : -1;
        if (*simulate) {
            check(lobgym_simulate(config.get(), seed, o.steps, print_line, nullptr), "simulate");
        } else if (*train) {
            check(lobgym_train(config.get(), seed, episodes, o.resume.empty() ? nullptr : o.resume.c_str(),
                               print_line, nullptr),
                  "train");
        } else if (*evaluate) {
            check(lobgym_evaluate(config.get(), seed, o.agent.empty() ? nullptr : o.agent.c_str(), episodes,
                                  print_line, nullptr),
                  "evaluate");
        } else if (*compare) {
            check(lobgym_compare(config.get(), seed, episodes, print_line, nullptr), "compare");
        }
    } catch (const Failure& f) {
        return f.code;
    }
    return 0;
}
