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
#include <deque>
#include <vector>

#include "lobgym/book.hpp"

namespace lobgym {

/// Fixed-capacity FIFO of midprices; the oldest value is evicted first.
class RollingWindow {
public:
    explicit RollingWindow(std::size_t capacity);

    void push(double value);
    void clear() { values_.clear(); }

    std::size_t size() const { return values_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return values_.size() == capacity_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double back() const { return values_.back(); }
    const std::deque<double>& values() const { return values_; }

private:
    std::size_t capacity_;
    std::deque<double> values_;
};

/// Midprice history feeding the indicators.
struct MarketWindows {
    RollingWindow rsi;
    RollingWindow returns;

    explicit MarketWindows(std::size_t rsi_period = 5, std::size_t longest_ma = 30)
        : rsi(rsi_period + 1), returns(longest_ma + 1)
    {
    }
    void push(double mid)
    {
        rsi.push(mid);
        returns.push(mid);
    }
    void clear()
    {
        rsi.clear();
        returns.clear();
    }
};

/// Agent-visible market state. Raw physical values; network normalization
/// happens in the policy.
struct Observation {
    double rsi = 50.0;
    double oi = 0.0;
    double microprice = 0.0;
    double inventory = 0.0;
    double ma10 = 0.0;
    double ma15 = 0.0;
    double ma30 = 0.0;
    std::vector<DepthLevel> depth_ask;
    std::vector<DepthLevel> depth_bid;
    /// Current midprice; not a network input, used by the benchmark agents.
    double mid = 0.0;

    static constexpr std::size_t kMarketFeatures = 7;
};

/// Flattened layout: 7 market features, then (delta, Q) pairs for the ask
/// levels followed by the bid levels.
std::vector<double> flatten(const Observation& obs);

double order_imbalance(double bid_total, double ask_total);
double rsi(const RollingWindow& window);
double microprice(double best_ask, double best_bid, double q_bid_best, double q_ask_best);
double moving_average_returns(const RollingWindow& window, std::size_t n);

Observation assemble_observation(const LimitOrderBook& book, double inventory, const MarketWindows& windows,
                                 std::size_t depth_levels);

}  // namespace lobgym
