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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lobgym/config.hpp"
#include "lobgym/metrics.hpp"

namespace lobgym {

using Logger = std::function<void(const std::string&)>;

/// `# lobgym <version> config_hash=<hex> seed=<n>`, first line of every
/// output file.
std::string artifact_header(const RunConfig& config, std::uint64_t seed);

std::string version_string();

inline constexpr int kSimulateDefaultSteps = 10000;
/// Events per aggregated return in the normality statistics.
inline constexpr int kReturnBlock = 100;

struct StylizedFacts {
    int steps = 0;
    double per_event_skew = 0.0;
    double per_event_excess_kurtosis = 0.0;
    int block = kReturnBlock;
    std::size_t block_returns = 0;
    double block_skew = 0.0;
    double block_excess_kurtosis = 0.0;
    int two_sided_steps = 0;
    int positive_spread_steps = 0;
    int nonpositive_spread_steps = 0;
    /// Variance over mean of event counts in one-minute windows.
    double dispersion_index = 0.0;
    /// Lag-1 autocorrelation of squared per-event log returns.
    double squared_return_acf1 = 0.0;
};

/// Sample skewness and excess kurtosis (population moments).
struct Moments {
    double skew = 0.0;
    double excess_kurtosis = 0.0;
};
Moments moments(const std::vector<double>& x);
double lag1_autocorrelation(const std::vector<double>& x);
/// Variance over mean of counts of `times` in consecutive windows of `width`
/// starting at 0 and ending at the last full window.
double dispersion_index(const std::vector<double>& times, double width);

/// Market-only run; writes stylized_facts.csv and, when `io.log_events`,
/// events.csv into `io.out_dir`.
StylizedFacts cmd_simulate(const RunConfig& config, std::uint64_t seed, int steps, const Logger& log = {});

struct TrainOutcome {
    std::uint64_t episodes_done = 0;
    double ema_slope = 0.0;
    std::filesystem::path checkpoint;
};

/// PPO training to `episodes` total episodes (the config value when
/// unset). With `resume`, continues from that checkpoint, which must carry
/// the same seed. Writes checkpoint.bin, reward_log.csv and reward_ema.svg.
TrainOutcome cmd_train(const RunConfig& config, std::uint64_t seed, std::optional<int> episodes,
                       const std::optional<std::filesystem::path>& resume, const Logger& log = {});

/// Builds the agent named by `kind`; `rl` loads `config.agent.checkpoint`.
std::unique_ptr<QuotingAgent> make_agent(const RunConfig& config, const std::string& kind);

/// One agent; writes comparison.csv with a single row, returns_<agent>.svg
/// and, when `io.trajectory_dump`, trajectory_<agent>.csv.
ComparisonRow cmd_evaluate(const RunConfig& config, std::uint64_t seed, const std::string& kind,
                           std::optional<int> episodes, const Logger& log = {});

/// rl, stoikov and long_only over the same evaluation streams; writes a
/// three-row comparison.csv and one figure per agent.
std::vector<ComparisonRow> cmd_compare(const RunConfig& config, std::uint64_t seed, std::optional<int> episodes,
                                       const Logger& log = {});

}  // namespace lobgym
