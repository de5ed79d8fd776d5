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

#include "lobgym/agents.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lobgym {

double erf_inv(double x)
{
    if (!(std::fabs(x) < 1.0)) {
        throw std::domain_error("erf_inv: argument must lie in (-1, 1)");
    }
    if (x == 0.0) {
        return 0.0;
    }
    // Giles' single-precision rational approximation as the starting point.
    double w = -std::log((1.0 - x) * (1.0 + x));
    double p;
    if (w < 5.0) {
        w -= 2.5;
        p = 2.81022636e-08;
        p = 3.43273939e-07 + p * w;
        p = -3.5233877e-06 + p * w;
        p = -4.39150654e-06 + p * w;
        p = 0.00021858087 + p * w;
        p = -0.00125372503 + p * w;
        p = -0.00417768164 + p * w;
        p = 0.246640727 + p * w;
        p = 1.50140941 + p * w;
    } else {
        w = std::sqrt(w) - 3.0;
        p = -0.000200214257;
        p = 0.000100950558 + p * w;
        p = 0.00134934322 + p * w;
        p = -0.00367342844 + p * w;
        p = 0.00573950773 + p * w;
        p = -0.0076224613 + p * w;
        p = 0.00943887047 + p * w;
        p = 1.00167406 + p * w;
        p = 2.83297682 + p * w;
    }
    double y = p * x;

    // Halley refinement: f = erf(y) - x, f' = 2/sqrt(pi) e^{-y^2}, f'' = -2y f'.
    const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
    for (int i = 0; i < 8; ++i) {
        const double f = std::erf(y) - x;
        const double df = two_over_sqrt_pi * std::exp(-y * y);
        const double step = f / (df + y * f);
        y -= step;
        if (std::fabs(step) <= 1e-16 * std::fabs(y)) {
            break;
        }
    }
    return y;
}

StoikovSpread stoikov_spread(const StoikovParams& params)
{
    if (!(params.sigma > 0.0)) {
        throw std::invalid_argument("stoikov: sigma must be positive");
    }
    constexpr double kLimit = 1.0 - 1e-6;
    double ratio = params.mu / params.sigma;
    bool clamped = false;
    if (std::fabs(ratio) >= kLimit) {
        ratio = std::copysign(kLimit, ratio);
        clamped = true;
    }
    const double delta = params.sigma / std::numbers::sqrt2 * erf_inv(0.5 * (1.0 + ratio));
    return {delta, clamped};
}

Action stoikov_quotes(const StoikovParams& params, double mid)
{
    const double delta = stoikov_spread(params).delta * mid;
    return Action{delta, delta, 1, 1};
}

StoikovParams estimate_sigma_mu(const std::vector<double>& mids, const EstimatorConfig& cfg)
{
    StoikovParams out{cfg.fallback_sigma, 0.0};
    if (cfg.window < 2 || mids.size() < cfg.window) {
        return out;
    }
    const std::size_t start = mids.size() - cfg.window;
    const auto n = static_cast<double>(cfg.window - 1);
    double mean = 0.0;
    for (std::size_t i = start + 1; i < mids.size(); ++i) {
        mean += mids[i] / mids[i - 1] - 1.0;
    }
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = start + 1; i < mids.size(); ++i) {
        const double d = mids[i] / mids[i - 1] - 1.0 - mean;
        ss += d * d;
    }
    const double sigma = n > 1.0 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    out.mu = std::fabs(mean) < 1e-15 ? 0.0 : mean;
    out.sigma = sigma < 1e-10 ? cfg.fallback_sigma : sigma;
    return out;
}

double unconditional_step_sigma(const MarketConfig& market)
{
    const Garch g(market.garch);
    const double minutes_per_event = 1.0 / market.hawkes.mu;
    return std::sqrt(g.long_run_variance() * minutes_to_days(minutes_per_event)) / market.initial_mid;
}

StoikovAgent::StoikovAgent(EstimatorConfig cfg, double tick) : cfg_(cfg), tick_(tick) {}

void StoikovAgent::reset()
{
    mids_.clear();
    warnings_ = 0;
    floored_ = 0;
}

Action StoikovAgent::act(const Observation& obs)
{
    mids_.push_back(obs.mid);
    if (mids_.size() > 4 * cfg_.window) {
        mids_.erase(mids_.begin(), mids_.end() - static_cast<std::ptrdiff_t>(cfg_.window));
    }
    const StoikovParams params = estimate_sigma_mu(mids_, cfg_);
    const StoikovSpread spread = stoikov_spread(params);
    if (spread.clamped) {
        ++warnings_;
    }
    double delta = spread.delta * obs.mid;
    if (delta < tick_) {
        delta = tick_;
        ++floored_;
    }
    return Action{delta, delta, 1, 1};
}

std::unique_ptr<QuotingAgent> long_only_agent(double tick) { return std::make_unique<LongOnlyAgent>(tick); }

}  // namespace lobgym
