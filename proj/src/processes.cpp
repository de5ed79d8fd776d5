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

#include "lobgym/processes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lobgym {

HawkesProcess::HawkesProcess(HawkesParams params, double start_time)
    : params_(params), now_(start_time)
{
    if (!(params.mu > 0.0) || params.alpha < 0.0 || !(params.beta > 0.0) || !(params.cap_multiple > 0.0)) {
        throw std::invalid_argument("hawkes: need mu > 0, alpha >= 0, beta > 0, cap > 0");
    }
}

double HawkesProcess::kernel_sum(double t) const
{
    if (events_.empty()) {
        return 0.0;
    }
    const double s = excitation_ * std::exp(-params_.beta * (t - events_.back()));
    return std::min(s, params_.cap_multiple * params_.mu);
}

double HawkesProcess::intensity(double t) const
{
    if (!events_.empty() && t < events_.back()) {
        throw std::domain_error("hawkes: intensity queried before the last event");
    }
    return params_.mu + kernel_sum(t);
}

double HawkesProcess::next_event(RngStream& rng)
{
    // Between events the intensity only decays, so its value at the
    // candidate's start is a valid thinning bound.
    double t = now_;
    for (;;) {
        const double bound = intensity(t);
        t += rng.exponential(bound);
        const double lambda_t = intensity(t);
        if (rng.uniform() * bound <= lambda_t) {
            excitation_ = std::min(kernel_sum(t) + params_.alpha, params_.cap_multiple * params_.mu);
            events_.push_back(t);
            now_ = t;
            return t;
        }
    }
}

OuDrift::OuDrift(OuParams params) : OuDrift(params, params.mean) {}

OuDrift::OuDrift(OuParams params, double initial) : params_(params), value_(initial)
{
    if (!(params.kappa > 0.0) || params.vol < 0.0) {
        throw std::invalid_argument("ou: need kappa > 0 and vol >= 0");
    }
}

double OuDrift::step(double dt_minutes, RngStream& rng)
{
    const double dt = minutes_to_days(dt_minutes);
    const double z = rng.normal();
    value_ += params_.kappa * (params_.mean - value_) * dt + params_.vol * std::sqrt(dt) * z;
    return value_;
}

bool feller_condition(const CirParams& p)
{
    return 2.0 * p.kappa * p.mean >= p.vol * p.vol;
}

CirSpread::CirSpread(CirParams params) : CirSpread(params, params.mean) {}

CirSpread::CirSpread(CirParams params, double initial) : params_(params), value_(initial)
{
    if (!(params.kappa > 0.0) || !(params.mean > 0.0) || params.vol < 0.0 || !(params.floor > 0.0)) {
        throw std::invalid_argument("cir: need kappa > 0, mean > 0, vol >= 0, floor > 0");
    }
    if (!feller_condition(params)) {
        throw std::invalid_argument("cir: parameters violate 2 kappa mean >= vol^2");
    }
    if (!(initial > 0.0)) {
        throw std::invalid_argument("cir: initial spread must be positive");
    }
}

double CirSpread::step(double dt_minutes, RngStream& rng)
{
    const double dt = minutes_to_days(dt_minutes);
    const double z = rng.normal();
    const double pos = std::max(value_, 0.0);
    const double next = value_ + params_.kappa * (params_.mean - pos) * dt + params_.vol * std::sqrt(pos * dt) * z;
    value_ = std::max(next, params_.floor);
    return value_;
}

Garch::Garch(GarchParams params) : params_(params), sigma2_(0.0)
{
    if (!(params.omega > 0.0) || params.alpha < 0.0 || params.beta < 0.0) {
        throw std::invalid_argument("garch: need omega > 0, alpha >= 0, beta >= 0");
    }
    sigma2_ = long_run_variance();
}

double Garch::long_run_variance() const
{
    const double persistence = params_.alpha + params_.beta;
    return persistence < 1.0 ? params_.omega / (1.0 - persistence) : params_.omega;
}

double Garch::sigma() const { return std::sqrt(sigma2_); }

GarchDraw Garch::step(RngStream& rng)
{
    sigma2_ = params_.omega + params_.alpha * last_eps_ * last_eps_ + params_.beta * sigma2_;
    const double sigma = std::sqrt(sigma2_);
    last_eps_ = sigma * rng.normal();
    return {sigma, last_eps_};
}

QuotePrices gbm_quote_prices(double mid, double drift_per_year, double half_spread, double sigma,
                             double dt_minutes, double tick, RngStream& rng, double unit_minutes)
{
    const double dt = dt_minutes / unit_minutes;
    const double drift = drift_per_year * unit_minutes / (kMinutesPerDay * kDaysPerYear);
    const double z_ask = rng.normal();
    const double z_bid = rng.normal();
    const double noise = sigma * std::sqrt(dt);
    const double ask = mid + (drift + half_spread) * mid * dt + noise * z_ask;
    const double bid = mid + (drift - half_spread) * mid * dt + noise * z_bid;
    auto snap = [tick](double p) { return std::max(std::round(p / tick), 1.0) * tick; };
    return {snap(ask), snap(bid)};
}

std::int64_t sample_quantity(const QuantityModel& model, RngStream& rng)
{
    for (;;) {
        const std::int64_t q = rng.poisson(model.lambda);
        if (q > 0) {
            return q;
        }
    }
}

}  // namespace lobgym
