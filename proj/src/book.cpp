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

#include "lobgym/book.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lobgym/errors.hpp"

namespace lobgym {

const char* to_string(Side s) { return s == Side::Bid ? "bid" : "ask"; }
const char* to_string(Owner o) { return o == Owner::Market ? "market" : "agent"; }

LimitOrderBook::LimitOrderBook(double tick, double initial_mid) : tick_(tick), initial_mid_(initial_mid)
{
    if (!(tick > 0.0) || !(initial_mid > 0.0)) {
        throw std::invalid_argument("book: tick and initial mid must be positive");
    }
}

PriceTicks LimitOrderBook::to_ticks(double price) const
{
    return static_cast<PriceTicks>(std::llround(price / tick_));
}

template <class Levels>
void LimitOrderBook::match(Levels& levels, Order& taker, std::optional<PriceTicks> limit, std::vector<Fill>& fills)
{
    const auto comp = levels.key_comp();
    Quantity& side_total = taker.side == Side::Bid ? ask_total_ : bid_total_;
    while (taker.quantity > 0 && !levels.empty()) {
        auto level_it = levels.begin();
        if (limit && comp(*limit, level_it->first)) {
            break;
        }
        Level& level = level_it->second;
        while (taker.quantity > 0 && !level.queue.empty()) {
            Order& maker = level.queue.front();
            const Quantity traded = std::min(maker.quantity, taker.quantity);
            fills.push_back(Fill{maker.id, taker.id, taker.side, level_it->first, traded, maker.owner, taker.owner,
                                 taker.timestamp});
            maker.quantity -= traded;
            taker.quantity -= traded;
            level.total -= traded;
            side_total -= traded;
            last_trade_ = level_it->first;
            if (maker.quantity == 0) {
                index_.erase(maker.id);
                level.queue.pop_front();
            }
        }
        if (level.queue.empty()) {
            levels.erase(level_it);
        }
    }
}

void LimitOrderBook::rest(const Order& order)
{
    auto place = [&](auto& levels, Quantity& total) {
        Level& level = levels[order.price];
        level.queue.push_back(order);
        level.total += order.quantity;
        total += order.quantity;
        index_.emplace(order.id, Locator{order.side, order.price, std::prev(level.queue.end())});
    };
    if (order.side == Side::Bid) {
        place(bids_, bid_total_);
    } else {
        place(asks_, ask_total_);
    }
}

std::vector<Fill> LimitOrderBook::submit_limit(const Order& order)
{
    if (order.quantity < 1) {
        throw ContractError("book: order quantity must be >= 1");
    }
    if (order.price < 1) {
        throw ContractError("book: order price must be positive");
    }
    if (index_.count(order.id) != 0) {
        throw ContractError("book: duplicate order id " + std::to_string(order.id));
    }
    std::vector<Fill> fills;
    Order taker = order;
    if (taker.side == Side::Bid) {
        match(asks_, taker, taker.price, fills);
    } else {
        match(bids_, taker, taker.price, fills);
    }
    if (taker.quantity > 0) {
        rest(taker);
    }
    return fills;
}

std::vector<Fill> LimitOrderBook::submit_market(OrderId id, Side side, Quantity quantity, Owner owner,
                                                double timestamp)
{
    if (quantity < 1) {
        throw ContractError("book: market order quantity must be >= 1");
    }
    std::vector<Fill> fills;
    Order taker{id, side, 0, quantity, owner, timestamp};
    if (side == Side::Bid) {
        match(asks_, taker, std::nullopt, fills);
    } else {
        match(bids_, taker, std::nullopt, fills);
    }
    return fills;
}

Quantity LimitOrderBook::cancel(OrderId id)
{
    auto found = index_.find(id);
    if (found == index_.end()) {
        return 0;
    }
    const Locator loc = found->second;
    const Quantity removed = loc.it->quantity;
    auto drop = [&](auto& levels, Quantity& total) {
        auto level_it = levels.find(loc.price);
        level_it->second.total -= removed;
        level_it->second.queue.erase(loc.it);
        if (level_it->second.queue.empty()) {
            levels.erase(level_it);
        }
        total -= removed;
    };
    if (loc.side == Side::Bid) {
        drop(bids_, bid_total_);
    } else {
        drop(asks_, ask_total_);
    }
    index_.erase(found);
    return removed;
}

std::optional<PriceTicks> LimitOrderBook::best_bid() const
{
    if (bids_.empty()) {
        return std::nullopt;
    }
    return bids_.begin()->first;
}

std::optional<PriceTicks> LimitOrderBook::best_ask() const
{
    if (asks_.empty()) {
        return std::nullopt;
    }
    return asks_.begin()->first;
}

double LimitOrderBook::midprice_ticks() const
{
    if (!bids_.empty() && !asks_.empty()) {
        return 0.5 * static_cast<double>(bids_.begin()->first + asks_.begin()->first);
    }
    if (last_trade_) {
        return static_cast<double>(*last_trade_);
    }
    return initial_mid_ / tick_;
}

double LimitOrderBook::midprice() const
{
    if (!bids_.empty() && !asks_.empty()) {
        return 0.5 * (to_price(bids_.begin()->first) + to_price(asks_.begin()->first));
    }
    if (last_trade_) {
        return to_price(*last_trade_);
    }
    return initial_mid_;
}

Quantity LimitOrderBook::quantity_at(Side side, PriceTicks price) const
{
    if (side == Side::Bid) {
        auto it = bids_.find(price);
        return it == bids_.end() ? 0 : it->second.total;
    }
    auto it = asks_.find(price);
    return it == asks_.end() ? 0 : it->second.total;
}

std::size_t LimitOrderBook::level_count(Side side) const
{
    return side == Side::Bid ? bids_.size() : asks_.size();
}

std::vector<DepthLevel> LimitOrderBook::depth(Side side, std::size_t levels) const
{
    std::vector<DepthLevel> out;
    out.reserve(levels);
    const double mid = midprice();
    auto collect = [&](const auto& book_side) {
        for (const auto& [price, level] : book_side) {
            if (out.size() == levels) {
                break;
            }
            out.push_back({std::abs(to_price(price) - mid), level.total});
        }
    };
    if (side == Side::Bid) {
        collect(bids_);
    } else {
        collect(asks_);
    }
    const double last = out.empty() ? 0.0 : out.back().half_spread;
    const double pad = last + static_cast<double>(levels) * tick_;
    while (out.size() < levels) {
        out.push_back({pad, 0});
    }
    return out;
}

bool LimitOrderBook::audit() const
{
    std::size_t orders = 0;
    auto check_side = [&](const auto& book_side, Side side, Quantity expected_total) {
        Quantity side_total = 0;
        for (const auto& [price, level] : book_side) {
            if (level.queue.empty()) {
                return false;
            }
            Quantity sum = 0;
            for (auto it = level.queue.begin(); it != level.queue.end(); ++it) {
                if (it->quantity < 1 || it->price != price || it->side != side) {
                    return false;
                }
                auto found = index_.find(it->id);
                if (found == index_.end() || found->second.it != it) {
                    return false;
                }
                sum += it->quantity;
                ++orders;
            }
            if (sum != level.total) {
                return false;
            }
            side_total += sum;
        }
        return side_total == expected_total;
    };
    if (!check_side(bids_, Side::Bid, bid_total_) || !check_side(asks_, Side::Ask, ask_total_)) {
        return false;
    }
    if (orders != index_.size()) {
        return false;
    }
    if (!bids_.empty() && !asks_.empty() && bids_.begin()->first >= asks_.begin()->first) {
        return false;
    }
    return true;
}

void LimitOrderBook::clear()
{
    bids_.clear();
    asks_.clear();
    index_.clear();
    bid_total_ = 0;
    ask_total_ = 0;
    last_trade_.reset();
}

}  // namespace lobgym
