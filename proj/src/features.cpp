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

#include "lobgym/features.hpp"

#include <stdexcept>

namespace lobgym {

RollingWindow::RollingWindow(std::size_t capacity) : capacity_(capacity)
{
    if (capacity == 0) {
        throw std::invalid_argument("rolling window capacity must be positive");
    }
}

void RollingWindow::push(double value)
{
    if (values_.size() == capacity_) {
        values_.pop_front();
    }
    values_.push_back(value);
}

double order_imbalance(double bid_total, double ask_total)
{
    const double total = bid_total + ask_total;
    if (total <= 0.0) {
        return 0.0;
    }
    return (bid_total - ask_total) / total;
}

double rsi(const RollingWindow& window)
{
    if (window.size() < 2) {
        return 50.0;
    }
    double gain = 0.0;
    double loss = 0.0;
    int gains = 0;
    int losses = 0;
    for (std::size_t i = 1; i < window.size(); ++i) {
        const double change = window[i] - window[i - 1];
        if (change > 0.0) {
            gain += change;
            ++gains;
        } else if (change < 0.0) {
            loss -= change;
            ++losses;
        }
    }
    const double avg_gain = gains > 0 ? gain / gains : 0.0;
    const double avg_loss = losses > 0 ? loss / losses : 0.0;
    if (avg_loss == 0.0) {
        return avg_gain > 0.0 ? 100.0 : 50.0;
    }
    return 100.0 - 100.0 / (1.0 + avg_gain / avg_loss);
}

double microprice(double best_ask, double best_bid, double q_bid_best, double q_ask_best)
{
    const double total = q_bid_best + q_ask_best;
    if (total <= 0.0) {
        return 0.5 * (best_ask + best_bid);
    }
    return (best_ask * q_bid_best + best_bid * q_ask_best) / total;
}

double moving_average_returns(const RollingWindow& window, std::size_t n)
{
    if (n == 0 || window.size() < n + 1) {
        return 0.0;
    }
    const std::size_t end = window.size();
    double sum = 0.0;
    for (std::size_t i = end - n; i < end; ++i) {
        sum += window[i] / window[i - 1] - 1.0;
    }
    return sum / static_cast<double>(n);
}

Observation assemble_observation(const LimitOrderBook& book, double inventory, const MarketWindows& windows,
                                 std::size_t depth_levels)
{
    Observation obs;
    const auto [bid_total, ask_total] = book.totals();
    obs.oi = order_imbalance(static_cast<double>(bid_total), static_cast<double>(ask_total));
    obs.rsi = rsi(windows.rsi);
    obs.mid = book.midprice();

    const auto best_bid = book.best_bid();
    const auto best_ask = book.best_ask();
    if (best_bid && best_ask) {
        obs.microprice = microprice(book.to_price(*best_ask), book.to_price(*best_bid),
                                    static_cast<double>(book.quantity_at(Side::Bid, *best_bid)),
                                    static_cast<double>(book.quantity_at(Side::Ask, *best_ask)));
    } else {
        obs.microprice = obs.mid;
    }
    obs.inventory = inventory;
    obs.ma10 = moving_average_returns(windows.returns, 10);
    obs.ma15 = moving_average_returns(windows.returns, 15);
    obs.ma30 = moving_average_returns(windows.returns, 30);
    obs.depth_ask = book.depth(Side::Ask, depth_levels);
    obs.depth_bid = book.depth(Side::Bid, depth_levels);
    return obs;
}

std::vector<double> flatten(const Observation& obs)
{
    std::vector<double> out{obs.rsi, obs.oi, obs.microprice, obs.inventory, obs.ma10, obs.ma15, obs.ma30};
    out.reserve(out.size() + 2 * (obs.depth_ask.size() + obs.depth_bid.size()));
    for (const auto& level : obs.depth_ask) {
        out.push_back(level.half_spread);
        out.push_back(static_cast<double>(level.quantity));
    }
    for (const auto& level : obs.depth_bid) {
        out.push_back(level.half_spread);
        out.push_back(static_cast<double>(level.quantity));
    }
    return out;
}

}  // namespace lobgym
