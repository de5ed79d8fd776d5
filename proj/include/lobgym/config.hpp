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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "lobgym/env.hpp"
#include "lobgym/ppo.hpp"

namespace lobgym {

struct AgentConfig {
    std::string kind = "rl";  // rl | stoikov | long_only
    std::string checkpoint;
    std::size_t stoikov_window = 30;
};

struct EvalConfig {
    int episodes = 100;
};

struct IoConfig {
    std::string out_dir = "out";
    bool log_events = false;
    bool trajectory_dump = false;
};

inline constexpr std::uint64_t kDefaultSeed = 42;

/// Everything a run needs. Parsed from a small TOML subset: `[section]`
/// headers, `key = value` lines, `#` comments; values are numbers, `true` /
/// `false` or double-quoted strings.
struct RunConfig {
    EnvConfig env;
    PpoConfig ppo;
    AgentConfig agent;
    EvalConfig eval;
    IoConfig io;
    std::optional<std::uint64_t> seed;

    /// Throws ConfigError.
    void validate() const;
    /// Every hashed setting as `section.key = value` lines in a fixed order.
    /// The [io] section and the seed are left out: they do not change what a
    /// run computes.
    std::string canonical() const;
    /// FNV-1a 64 of canonical().
    std::uint64_t hash() const;
    /// Full config in the input format, including [io] and the seed.
    std::string to_toml() const;
};

/// Throws ConfigError with the offending line number.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Set one value by dotted name (`market.hawkes_beta`, `seed`). The value
/// uses the file syntax. Throws ConfigError.
void set_config_value(RunConfig& config, std::string_view dotted_key, std::string_view value);

/// Precedence: command line, then config, then the LOBGYM_SEED value, then
/// kDefaultSeed. `env_value` may be null. Throws ConfigError when
/// `env_value` is not an unsigned integer.
std::uint64_t resolve_seed(std::optional<std::uint64_t> cli, const RunConfig& config, const char* env_value);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t x);

}  // namespace lobgym
