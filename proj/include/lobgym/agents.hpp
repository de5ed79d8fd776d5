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

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "lobgym/env.hpp"
#include "lobgym/features.hpp"

namespace lobgym {

/// Inverse error function, |x| < 1. Rational initial guess refined with
/// Newton steps on std::erf to ~1e-15. Throws std::domain_error otherwise.
double erf_inv(double x);

/// Uniform interface for RL and benchmark quoting strategies.
class QuotingAgent {
public:
    virtual ~QuotingAgent() = default;
    virtual Action act(const Observation& obs) = 0;
    virtual void reset() = 0;
    virtual std::string name() const = 0;
    /// Boundary clamps or floors applied since the last reset.
    virtual std::size_t warnings() const { return 0; }
};

struct StoikovParams {
    double sigma = 1.0;
    double mu = 0.0;
};

struct StoikovSpread {
    double delta;  // may be negative before flooring
    bool clamped;  // |mu/sigma| was pulled inside (-1, 1)
};

/// (sigma / sqrt 2) * erf_inv((1 + mu/sigma) / 2). Throws
/// std::invalid_argument for sigma <= 0.
StoikovSpread stoikov_spread(const StoikovParams& params);

/// Symmetric unit-size quotes at the optimal half-spread. Params are in
/// return units, so the half-spread is scaled by `mid` into price units.
Action stoikov_quotes(const StoikovParams& params, double mid);

struct EstimatorConfig {
    std::size_t window = 30;
    /// Per-step return volatility used when the history is too short or
    /// degenerate.
    double fallback_sigma = 4e-4;
};

/// Mean and standard deviation of per-step simple returns over the last
/// `window` prices.
StoikovParams estimate_sigma_mu(const std::vector<double>& mids, const EstimatorConfig& cfg);

/// Per-step return volatility implied by the GARCH long-run variance.
double unconditional_step_sigma(const MarketConfig& market);

class StoikovAgent : public QuotingAgent {
public:
    StoikovAgent(EstimatorConfig cfg, double tick);

    Action act(const Observation& obs) override;
    void reset() override;
    std::string name() const override { return "stoikov"; }
    std::size_t warnings() const override { return warnings_; }
    std::size_t floored() const { return floored_; }

private:
    EstimatorConfig cfg_;
    double tick_;
    std::vector<double> mids_;
    std::size_t warnings_ = 0;
    std::size_t floored_ = 0;
};

/// Bid-only, one share one tick below mid every step.
class LongOnlyAgent : public QuotingAgent {
public:
    explicit LongOnlyAgent(double tick) : tick_(tick) {}

    Action act(const Observation&) override { return Action{tick_, tick_, 0, 1}; }
    void reset() override {}
    std::string name() const override { return "long_only"; }

private:
    double tick_;
};

std::unique_ptr<QuotingAgent> long_only_agent(double tick);

}  // namespace lobgym
