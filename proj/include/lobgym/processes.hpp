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
#include <vector>

#include "lobgym/rng.hpp"

namespace lobgym {

// The event clock runs in market minutes.
inline constexpr double kMinutesPerDay = 390.0;
inline constexpr double kDaysPerYear = 252.0;

constexpr double minutes_to_days(double minutes) { return minutes / kMinutesPerDay; }

// ---------------------------------------------------------------------------
// Hawkes arrivals
// ---------------------------------------------------------------------------

struct HawkesParams {
    double mu = 1.0;     // baseline intensity, events/minute
    double alpha = 0.1;  // excitation jump
    double beta = 0.1;   // decay rate, 1/minute
    /// Kernel sum is capped at cap_multiple * mu.
    double cap_multiple = 100.0;
};

/// Self-exciting point process with exponential kernel, sampled by Ogata
/// thinning.
///
/// The kernel sum is tracked recursively at the last event time, so the
/// intensity at any later time costs O(1). The full event history is kept
/// for inspection.
class HawkesProcess {
public:
    explicit HawkesProcess(HawkesParams params, double start_time = 0.0);

    /// mu + sum over past events t_i <= t of alpha * exp(-beta (t - t_i)).
    /// Throws std::domain_error if t precedes the last event.
    double intensity(double t) const;

    /// Draw the next event time, record it and advance the clock.
    double next_event(RngStream& rng);

    const HawkesParams& params() const { return params_; }
    const std::vector<double>& event_times() const { return events_; }
    double current_time() const { return now_; }
    /// Branching ratio alpha / beta; the process is stationary below 1.
    double branching_ratio() const { return params_.alpha / params_.beta; }

private:
    double kernel_sum(double t) const;

    HawkesParams params_;
    std::vector<double> events_;
    double now_;
    double excitation_ = 0.0;  // kernel sum at the last event, inclusive
};

// ---------------------------------------------------------------------------
// Regime processes
// ---------------------------------------------------------------------------

struct OuParams {
    double kappa = 1.0;   // 1/day
    double mean = -0.02;  // long-run drift, fraction/year
    double vol = 0.01;    // per sqrt(day)
};

/// Mean-reverting drift. Time unit: trading days.
class OuDrift {
public:
    explicit OuDrift(OuParams params);
    OuDrift(OuParams params, double initial);

    double step(double dt_minutes, RngStream& rng);
    double value() const { return value_; }
    const OuParams& params() const { return params_; }

private:
    OuParams params_;
    double value_;
};

struct CirParams {
    double kappa = 1.0;   // 1/day
    double mean = 0.1;    // long-run spread, price units
    double vol = 0.05;    // per sqrt(day)
    double floor = 1e-4;  // positivity floor, one hundredth of a tick
};

/// 2 kappa mean >= vol^2.
bool feller_condition(const CirParams& p);

/// Square-root diffusion for the spread regime. Full-truncation Euler step
/// followed by a floor, so the value stays strictly positive.
class CirSpread {
public:
    /// Throws std::invalid_argument if the parameters violate the Feller
    /// condition or are non-positive.
    explicit CirSpread(CirParams params);
    CirSpread(CirParams params, double initial);

    double step(double dt_minutes, RngStream& rng);
    double value() const { return value_; }
    const CirParams& params() const { return params_; }

private:
    CirParams params_;
    double value_;
};

struct GarchParams {
    double omega = 0.5;
    double alpha = 0.1;
    double beta = 0.1;
};

struct GarchDraw {
    double sigma;
    double eps;
};

/// GARCH(1,1) variance recursion.
class Garch {
public:
    /// Starts at the long-run variance when it exists, otherwise at omega.
    explicit Garch(GarchParams params);

    GarchDraw step(RngStream& rng);

    double variance() const { return sigma2_; }
    double sigma() const;
    double last_eps() const { return last_eps_; }
    const GarchParams& params() const { return params_; }
    /// omega / (1 - alpha - beta); omega when alpha + beta >= 1.
    double long_run_variance() const;

private:
    GarchParams params_;
    double sigma2_;
    double last_eps_ = 0.0;
};

// ---------------------------------------------------------------------------
// Order prices and sizes
// ---------------------------------------------------------------------------

struct QuotePrices {
    double ask;
    double bid;
};

/// Ask and bid prices for a new order from two GBM increments around the
/// current mid, with independent shocks.
///
/// Time for this process is measured in units of `unit_minutes` market
/// minutes: `dt_minutes` is converted to that unit and `drift_per_year` to a
/// rate per unit. `half_spread` is the spread regime value. Prices are
/// rounded to the tick grid and floored at one tick.
QuotePrices gbm_quote_prices(double mid, double drift_per_year, double half_spread, double sigma,
                             double dt_minutes, double tick, RngStream& rng,
                             double unit_minutes = kMinutesPerDay);

struct QuantityModel {
    double lambda = 5.0;
};

/// Zero-truncated Poisson order size (always >= 1).
std::int64_t sample_quantity(const QuantityModel& model, RngStream& rng);

}  // namespace lobgym
