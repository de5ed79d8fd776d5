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

#include "lobgym/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lobgym/errors.hpp"

namespace lobgym {

namespace {

CirParams cir_with_floor(const MarketConfig& config)
{
    CirParams p = config.cir;
    p.floor = config.tick / 100.0;
    return p;
}

}  // namespace

void MarketConfig::validate() const
{
    if (!(tick > 0.0) || !(initial_mid > tick)) {
        throw ConfigError("market: need tick > 0 and initial_mid > tick");
    }
    if (!(market_order_prob >= 0.0 && market_order_prob <= 1.0)) {
        throw ConfigError("market: market_order_prob must lie in [0, 1]");
    }
    if (!(quantity.lambda > 0.0)) {
        throw ConfigError("market: quantity_lambda must be positive");
    }
    try {
        HawkesProcess h(hawkes);
        OuDrift o(ou);
        CirSpread c(cir_with_floor(*this));
        Garch g(garch);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("market: ") + e.what());
    }
}

void EnvConfig::validate() const
{
    if (steps < 1 || warmup < 0) {
        throw ConfigError("env: need steps >= 1 and warmup >= 0");
    }
    if (!(gamma_risk > 0.0) || eta_inv < 0.0) {
        throw ConfigError("env: need gamma_risk > 0 and eta_inv >= 0");
    }
    if (q_max < 1 || depth_levels < 1 || rsi_period < 1) {
        throw ConfigError("env: q_max, depth_levels and rsi_period must be >= 1");
    }
    market.validate();
}

double cara_reward(double pnl, double gamma_risk) { return -std::exp(-gamma_risk * pnl); }

PnlComponents step_pnl(PnlConvention convention, double delta_ask, double delta_bid, Quantity q_ask_filled,
                       Quantity q_bid_filled, double inventory, double delta_mid, double eta_inv)
{
    PnlComponents c;
    c.q_ask_filled = q_ask_filled;
    c.q_bid_filled = q_bid_filled;
    c.delta_mid = delta_mid;
    const double bid_sign = convention == PnlConvention::Asymmetric ? -1.0 : 1.0;
    const double carry = inventory * delta_mid;
    c.running_pnl = delta_ask * static_cast<double>(q_ask_filled)
                    + bid_sign * delta_bid * static_cast<double>(q_bid_filled) + carry;
    c.penalty = eta_inv * std::max(carry, 0.0);
    c.pnl = c.running_pnl - c.penalty;
    return c;
}

double episode_return(const std::vector<double>& rewards, double gamma_discount)
{
    if (!(gamma_discount > 0.0 && gamma_discount <= 1.0)) {
        throw std::domain_error("episode_return: discount must lie in (0, 1]");
    }
    double g = 0.0;
    for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) {
        g = *it + gamma_discount * g;
    }
    return g;
}

// ---------------------------------------------------------------------------

MarketSimulator::MarketSimulator(const MarketConfig& config, RngStream rng)
    : config_(config),
      rng_(rng),
      book_(config.tick, config.initial_mid),
      hawkes_(config.hawkes),
      ou_(config.ou),
      cir_(cir_with_floor(config)),
      garch_(config.garch)
{
}

MarketEvent MarketSimulator::next_event(bool limit_only)
{
    MarketEvent ev;
    const double before = hawkes_.current_time();
    ev.time = hawkes_.next_event(rng_);
    ev.dt = ev.time - before;
    ev.side = rng_.uniform() < 0.5 ? Side::Bid : Side::Ask;
    ev.drift_regime = ou_.value();
    ev.spread_regime = cir_.value();
    ev.sigma = garch_.sigma();

    const QuotePrices prices =
        gbm_quote_prices(book_.midprice(), ev.drift_regime, ev.spread_regime, ev.sigma, ev.dt, config_.tick, rng_,
                                                  config_.price_time_unit);
    ev.price = book_.to_ticks(ev.side == Side::Bid ? prices.bid : prices.ask);
    ev.quantity = sample_quantity(config_.quantity, rng_);
    const bool market = config_.market_order_prob > 0.0 && rng_.uniform() < config_.market_order_prob;
    ev.market_order = market && !limit_only;

    const OrderId id = next_id_++;
    if (ev.market_order) {
        ev.fills = book_.submit_market(id, ev.side, ev.quantity, Owner::Market, ev.time);
    } else {
        ev.fills = book_.submit_limit(Order{id, ev.side, ev.price, ev.quantity, Owner::Market, ev.time});
    }

    ou_.step(ev.dt, rng_);
    cir_.step(ev.dt, rng_);
    garch_.step(rng_);
    return ev;
}

// ---------------------------------------------------------------------------

MarketEnv::MarketEnv(EnvConfig config)
    : config_(std::move(config)), windows_(config_.rsi_period, 30)
{
    config_.validate();
}

double MarketEnv::mark_to_market() const { return cash_ + static_cast<double>(inventory_) * mid(); }

Observation MarketEnv::reset(RngStream rng)
{
    sim_.emplace(config_.market, rng);
    windows_.clear();
    inventory_ = 0;
    cash_ = 0.0;
    step_ = 0;
    done_ = false;
    ask_quote_.reset();
    bid_quote_.reset();
    next_agent_id_ = OrderId{1} << 63;

    windows_.push(sim_->book().midprice());
    // Warm-up builds liquidity with limit orders only.
    for (int i = 0; i < config_.warmup; ++i) {
        sim_->next_event(true);
        windows_.push(sim_->book().midprice());
    }
    last_mid_ = sim_->book().midprice();
    return assemble_observation(sim_->book(), 0.0, windows_, config_.depth_levels);
}

Action MarketEnv::quantize(const Action& action) const
{
    if (!std::isfinite(action.delta_ask) || !std::isfinite(action.delta_bid)) {
        throw ContractError("env: non-finite half-spread in action");
    }
    const double tick = config_.market.tick;
    auto spread = [tick](double delta) { return std::max(std::round(delta / tick), 1.0) * tick; };
    auto size = [this](Quantity q) { return std::clamp<Quantity>(q, 0, config_.q_max); };
    return Action{spread(action.delta_ask), spread(action.delta_bid), size(action.q_ask), size(action.q_bid)};
}

StepResult MarketEnv::step(const Action& action)
{
    if (!sim_ || done_) {
        throw ContractError("env: step called on a finished or unreset episode");
    }
    LimitOrderBook& book = sim_->book();
    StepResult result;

    if (ask_quote_) {
        book.cancel(*ask_quote_);
        ask_quote_.reset();
    }
    if (bid_quote_) {
        book.cancel(*bid_quote_);
        bid_quote_.reset();
    }

    const Action exec = quantize(action);
    result.executed = exec;
    const double tick = config_.market.tick;
    const double mid_ticks = book.midprice_ticks();
    const auto ask_ticks = static_cast<PriceTicks>(std::ceil(mid_ticks + std::round(exec.delta_ask / tick) - 1e-9));
    const auto bid_ticks = std::max<PriceTicks>(
        static_cast<PriceTicks>(std::floor(mid_ticks - std::round(exec.delta_bid / tick) + 1e-9)), 1);

    auto collect = [&result](std::vector<Fill>&& fills) {
        for (auto& f : fills) {
            if (f.maker_owner == Owner::Agent || f.taker_owner == Owner::Agent) {
                result.agent_fills.push_back(f);
            }
        }
    };

    if (exec.q_ask > 0) {
        const OrderId id = next_agent_id_++;
        collect(book.submit_limit(Order{id, Side::Ask, ask_ticks, exec.q_ask, Owner::Agent, sim_->now()}));
        if (book.contains(id)) {
            ask_quote_ = id;
        }
    }
    if (exec.q_bid > 0) {
        const OrderId id = next_agent_id_++;
        collect(book.submit_limit(Order{id, Side::Bid, bid_ticks, exec.q_bid, Owner::Agent, sim_->now()}));
        if (book.contains(id)) {
            bid_quote_ = id;
        }
    }

    MarketEvent ev = sim_->next_event();
    collect(std::move(ev.fills));
    if (ask_quote_ && !book.contains(*ask_quote_)) {
        ask_quote_.reset();
    }
    if (bid_quote_ && !book.contains(*bid_quote_)) {
        bid_quote_.reset();
    }

    Quantity ask_filled = 0;
    Quantity bid_filled = 0;
    for (const Fill& f : result.agent_fills) {
        const Side agent_side = f.maker_owner == Owner::Agent ? opposite(f.taker_side) : f.taker_side;
        const double notional = book.to_price(f.price) * static_cast<double>(f.quantity);
        if (agent_side == Side::Bid) {
            bid_filled += f.quantity;
            cash_ -= notional;
        } else {
            ask_filled += f.quantity;
            cash_ += notional;
        }
    }
    inventory_ += bid_filled - ask_filled;

    const double mid_now = book.midprice();
    const double delta_mid = mid_now - last_mid_;
    last_mid_ = mid_now;

    result.pnl = step_pnl(config_.pnl_convention, exec.delta_ask, exec.delta_bid, ask_filled, bid_filled,
                          static_cast<double>(inventory_), delta_mid, config_.eta_inv);
    result.reward = cara_reward(result.pnl.pnl, config_.gamma_risk);

    windows_.push(mid_now);
    result.observation =
        assemble_observation(book, static_cast<double>(inventory_), windows_, config_.depth_levels);
    ++step_;
    done_ = step_ == config_.steps;
    result.done = done_;
    return result;
}

}  // namespace lobgym
