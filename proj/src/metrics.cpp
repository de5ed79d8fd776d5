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

#include "lobgym/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lobgym/ppo.hpp"

namespace lobgym {

double mean(const std::vector<double>& x)
{
    if (x.empty()) {
        return 0.0;
    }
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(const std::vector<double>& x)
{
    if (x.size() < 2) {
        return 0.0;
    }
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) {
        ss += (v - m) * (v - m);
    }
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double sortino(const std::vector<double>& returns, double target)
{
    if (returns.size() < 2) {
        throw std::invalid_argument("sortino: need at least two returns");
    }
    const double excess = mean(returns) - target;
    double downside = 0.0;
    for (double r : returns) {
        const double d = std::min(r - target, 0.0);
        downside += d * d;
    }
    const double dd = std::sqrt(downside / static_cast<double>(returns.size()));
    if (dd == 0.0) {
        return excess > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return excess / dd;
}

EpisodeReport run_episode(QuotingAgent& agent, const EnvConfig& config, RngStream rng,
                          const std::function<void(int, const StepResult&, const Action&)>& on_step)
{
    EpisodeReport report;
    MarketEnv env(config);
    agent.reset();
    Observation obs = env.reset(rng);
    const double notional = config.notional();
    double peak = 0.0;
    double inventory_sum = 0.0;
    report.return_path.reserve(static_cast<std::size_t>(config.steps));
    for (int t = 0; !env.done(); ++t) {
        const Action action = agent.act(obs);
        StepResult step = env.step(action);
        report.reward_sum += step.reward;
        report.fill_count += static_cast<std::int64_t>(step.agent_fills.size());
        inventory_sum += env.inventory();
        const double pnl = env.mark_to_market();
        peak = std::max(peak, pnl);
        report.max_drawdown = std::max(report.max_drawdown, peak - pnl);
        report.return_path.push_back(pnl / notional);
        if (on_step) {
            on_step(t, step, action);
        }
        obs = std::move(step.observation);
    }
    report.episode_return = env.mark_to_market() / notional;
    report.mean_inventory = inventory_sum / static_cast<double>(config.steps);
    return report;
}

ComparisonRow evaluate(QuotingAgent& agent, const EnvConfig& config, std::size_t episodes, std::uint64_t seed,
                       const std::function<void(std::size_t, int, const StepResult&, const Action&)>& on_step)
{
    ComparisonRow row;
    row.agent = agent.name();
    row.n = episodes;
    std::vector<double> returns;
    returns.reserve(episodes);
    for (std::size_t i = 0; i < episodes; ++i) {
        std::function<void(int, const StepResult&, const Action&)> hook;
        if (on_step) {
            hook = [&, i](int t, const StepResult& s, const Action& a) { on_step(i, t, s, a); };
        }
        EpisodeReport rep = run_episode(agent, config, RngStream(seed, StreamIds::evaluation(i)), hook);
        row.warnings += agent.warnings();
        returns.push_back(rep.episode_return);
        row.episodes.push_back(std::move(rep));
    }
    row.mean_return = mean(returns);
    row.volatility = stddev(returns);
    row.sortino = returns.size() >= 2 ? sortino(returns) : 0.0;
    row.ann_return = annualize(row.mean_return);
    return row;
}

ReturnBand return_band(const std::vector<EpisodeReport>& episodes)
{
    ReturnBand band;
    if (episodes.empty()) {
        return band;
    }
    const std::size_t steps = episodes.front().return_path.size();
    band.mean.assign(steps, 0.0);
    band.sd.assign(steps, 0.0);
    std::vector<double> column(episodes.size());
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t e = 0; e < episodes.size(); ++e) {
            column[e] = episodes[e].return_path[t];
        }
        band.mean[t] = mean(column);
        band.sd[t] = stddev(column);
    }
    return band;
}

}  // namespace lobgym
