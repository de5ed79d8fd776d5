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
#include <optional>
#include <vector>

#include "lobgym/book.hpp"
#include "lobgym/features.hpp"
#include "lobgym/processes.hpp"
#include "lobgym/rng.hpp"

namespace lobgym {

struct MarketConfig {
    double tick = 0.01;
    double initial_mid = 100.0;
    HawkesParams hawkes;
    OuParams ou;
    CirParams cir;
    GarchParams garch;
    QuantityModel quantity;
    /// Probability that a flow event is a market order instead of a limit
    /// order.
    double market_order_prob = 0.25;
    /// Time unit of the order-price diffusion, in market minutes.
    double price_time_unit = kMinutesPerDay;

    void validate() const;
};

enum class PnlConvention : std::uint8_t {
    Asymmetric,  // delta_ask q_ask - delta_bid q_bid + I dM
    Symmetric,  // delta_ask q_ask + delta_bid q_bid + I dM
};

struct EnvConfig {
    int steps = 390;
    int warmup = 390;
    double gamma_risk = 0.1;
    double eta_inv = 0.5;
    Quantity q_max = 10;
    std::size_t depth_levels = 10;
    std::size_t rsi_period = 5;
    PnlConvention pnl_convention = PnlConvention::Asymmetric;
    MarketConfig market;

    void validate() const;
    /// Denominator for financial returns: initial mid times the maximum
    /// quote size.
    double notional() const { return market.initial_mid * static_cast<double>(q_max); }
};

/// Agent decision for one step. Half-spreads in price units.
struct Action {
    double delta_ask = 0.0;
    double delta_bid = 0.0;
    Quantity q_ask = 0;
    Quantity q_bid = 0;
};

struct PnlComponents {
    double running_pnl = 0.0;
    double penalty = 0.0;
    double pnl = 0.0;
    double delta_mid = 0.0;
    Quantity q_ask_filled = 0;
    Quantity q_bid_filled = 0;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    PnlComponents pnl;
    bool done = false;
    /// The action after tick quantization and clamping.
    Action executed;
    std::vector<Fill> agent_fills;
};

/// -exp(-gamma * pnl)
double cara_reward(double pnl, double gamma_risk);

/// Running PnL, inventory penalty and their difference for one step.
PnlComponents step_pnl(PnlConvention convention, double delta_ask, double delta_bid, Quantity q_ask_filled,
                       Quantity q_bid_filled, double inventory, double delta_mid, double eta_inv);

/// Discounted return from t = 0.
double episode_return(const std::vector<double>& rewards, double gamma_discount);

/// One order-flow event as seen by the event log.
struct MarketEvent {
    double time = 0.0;
    double dt = 0.0;
    bool market_order = false;
    Side side = Side::Bid;
    PriceTicks price = 0;
    Quantity quantity = 0;
    std::vector<Fill> fills;
    double spread_regime = 0.0;
    double drift_regime = 0.0;
    double sigma = 0.0;
};

/// Order flow without an agent: Hawkes clock, regime processes and the book.
class MarketSimulator {
public:
    MarketSimulator(const MarketConfig& config, RngStream rng);

    /// Advance the clock one event, inject one order and update the regimes
    /// over the elapsed interval. With `limit_only` the event is never a
    /// market order (the draw is still consumed).
    MarketEvent next_event(bool limit_only = false);

    const LimitOrderBook& book() const { return book_; }
    LimitOrderBook& book() { return book_; }
    const HawkesProcess& hawkes() const { return hawkes_; }
    double drift() const { return ou_.value(); }
    double spread() const { return cir_.value(); }
    double sigma() const { return garch_.sigma(); }
    double now() const { return hawkes_.current_time(); }
    RngStream& rng() { return rng_; }
    const MarketConfig& config() const { return config_; }

private:
    MarketConfig config_;
    RngStream rng_;
    LimitOrderBook book_;
    HawkesProcess hawkes_;
    OuDrift ou_;
    CirSpread cir_;
    Garch garch_;
    OrderId next_id_ = 1;
};

/// Episodic market-making environment: warm-up, cancel-and-replace quoting,
/// one flow event per step, CARA reward on the step PnL.
class MarketEnv {
public:
    explicit MarketEnv(EnvConfig config);

    Observation reset(RngStream rng);
    /// Throws ContractError after the episode is done or before reset.
    StepResult step(const Action& action);

    /// Clamp and quantize an action (half-spreads at least one tick,
    /// quantities within [0, q_max]).
    Action quantize(const Action& action) const;

    const EnvConfig& config() const { return config_; }
    const LimitOrderBook& book() const { return sim_->book(); }
    const MarketSimulator& simulator() const { return *sim_; }
    double inventory() const { return static_cast<double>(inventory_); }
    double cash() const { return cash_; }
    double mid() const { return sim_->book().midprice(); }
    /// cash + inventory * mid
    double mark_to_market() const;
    int step_index() const { return step_; }
    bool done() const { return done_; }
    std::size_t observation_size() const { return Observation::kMarketFeatures + 4 * config_.depth_levels; }

private:
    EnvConfig config_;
    std::optional<MarketSimulator> sim_;
    MarketWindows windows_;
    Quantity inventory_ = 0;
    double cash_ = 0.0;
    double last_mid_ = 0.0;
    int step_ = 0;
    bool done_ = true;
    std::optional<OrderId> ask_quote_;
    std::optional<OrderId> bid_quote_;
    OrderId next_agent_id_ = OrderId{1} << 63;
};

}  // namespace lobgym
