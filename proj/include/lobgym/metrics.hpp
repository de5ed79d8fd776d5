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
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "lobgym/agents.hpp"
#include "lobgym/env.hpp"

namespace lobgym {

inline constexpr double kTradingDaysPerYear = 252.0;

/// (mean - target) / sqrt(mean(min(r - target, 0)^2)). +inf when there is
/// no downside and the mean beats the target, 0 when both vanish. Throws
/// std::invalid_argument on fewer than two returns.
double sortino(const std::vector<double>& returns, double target = 0.0);

/// Daily to annual: x 252.
constexpr double annualize(double mean_daily_return) { return mean_daily_return * kTradingDaysPerYear; }

double mean(const std::vector<double>& x);
/// Sample standard deviation (n - 1).
double stddev(const std::vector<double>& x);

struct EpisodeReport {
    double episode_return = 0.0;  // final mark-to-market PnL / notional
    double reward_sum = 0.0;
    double max_drawdown = 0.0;    // in PnL units
    std::int64_t fill_count = 0;
    double mean_inventory = 0.0;
    /// Mark-to-market return after every step.
    std::vector<double> return_path;
};

/// One evaluation episode with learning disabled.
EpisodeReport run_episode(QuotingAgent& agent, const EnvConfig& config, RngStream rng,
                          const std::function<void(int, const StepResult&, const Action&)>& on_step = {});

struct ComparisonRow {
    std::string agent;
    std::size_t n = 0;
    double mean_return = 0.0;
    double volatility = 0.0;
    double sortino = 0.0;
    double ann_return = 0.0;
    std::size_t warnings = 0;
    std::vector<EpisodeReport> episodes;
};

/// n episodes on the evaluation streams of `seed`; every agent sees the same
/// market randomness for the same episode index.
ComparisonRow evaluate(QuotingAgent& agent, const EnvConfig& config, std::size_t episodes, std::uint64_t seed,
                       const std::function<void(std::size_t, int, const StepResult&, const Action&)>& on_step = {});

/// Per-step mean and standard deviation of the return paths.
struct ReturnBand {
    std::vector<double> mean;
    std::vector<double> sd;
};
ReturnBand return_band(const std::vector<EpisodeReport>& episodes);

}  // namespace lobgym
