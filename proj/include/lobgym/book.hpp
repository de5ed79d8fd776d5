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
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lobgym {

using OrderId = std::uint64_t;
using PriceTicks = std::int64_t;
using Quantity = std::int64_t;

enum class Side : std::uint8_t { Bid, Ask };
enum class Owner : std::uint8_t { Market, Agent };

constexpr Side opposite(Side s) { return s == Side::Bid ? Side::Ask : Side::Bid; }
const char* to_string(Side s);
const char* to_string(Owner o);

struct Order {
    OrderId id = 0;
    Side side = Side::Bid;
    PriceTicks price = 0;  // integer ticks
    Quantity quantity = 0;
    Owner owner = Owner::Market;
    double timestamp = 0.0;
};

struct Fill {
    OrderId maker_id = 0;
    OrderId taker_id = 0;
    Side taker_side = Side::Bid;
    PriceTicks price = 0;  // maker's resting price
    Quantity quantity = 0;
    Owner maker_owner = Owner::Market;
    Owner taker_owner = Owner::Market;
    double timestamp = 0.0;

    bool operator==(const Fill&) const = default;
};

struct DepthLevel {
    double half_spread;  // |level price - mid|
    Quantity quantity;
};

/// Price-time priority limit order book on an integer tick grid.
///
/// Levels live in ordered maps (red-black trees) keyed by tick price, each
/// holding a FIFO queue; an id index gives O(1) cancellation. Crossing
/// orders match immediately at the makers' prices, so the book never rests
/// crossed.
class LimitOrderBook {
public:
    explicit LimitOrderBook(double tick = 0.01, double initial_mid = 100.0);

    /// Match then rest any remainder. Throws ContractError on a duplicate
    /// id, non-positive price or quantity.
    std::vector<Fill> submit_limit(const Order& order);

    /// Sweep the opposite side; the unfilled remainder is discarded.
    std::vector<Fill> submit_market(OrderId id, Side side, Quantity quantity, Owner owner, double timestamp);

    /// Remaining quantity removed, 0 when the id is not resting.
    Quantity cancel(OrderId id);

    /// Top-of-book mean, else last trade, else the initial mid.
    double midprice() const;
    double midprice_ticks() const;

    /// Exactly `levels` entries for the best occupied levels of `side`,
    /// padded with zero-quantity entries.
    std::vector<DepthLevel> depth(Side side, std::size_t levels) const;

    /// (total bid quantity, total ask quantity)
    std::pair<Quantity, Quantity> totals() const { return {bid_total_, ask_total_}; }

    std::optional<PriceTicks> best_bid() const;
    std::optional<PriceTicks> best_ask() const;
    Quantity quantity_at(Side side, PriceTicks price) const;
    bool contains(OrderId id) const { return index_.count(id) != 0; }
    std::size_t order_count() const { return index_.size(); }
    std::size_t level_count(Side side) const;

    std::optional<PriceTicks> last_trade() const { return last_trade_; }
    double tick() const { return tick_; }
    double initial_mid() const { return initial_mid_; }
    double to_price(PriceTicks p) const { return static_cast<double>(p) * tick_; }
    PriceTicks to_ticks(double price) const;

    /// Recompute level and side totals from the queues and check the no-cross
    /// and index invariants.
    bool audit() const;

    void clear();

private:
    struct Level {
        std::list<Order> queue;
        Quantity total = 0;
    };
    using BidLevels = std::map<PriceTicks, Level, std::greater<>>;
    using AskLevels = std::map<PriceTicks, Level, std::less<>>;
    struct Locator {
        Side side;
        PriceTicks price;
        std::list<Order>::iterator it;
    };

    template <class Levels>
    void match(Levels& levels, Order& taker, std::optional<PriceTicks> limit, std::vector<Fill>& fills);
    void rest(const Order& order);

    double tick_;
    double initial_mid_;
    BidLevels bids_;
    AskLevels asks_;
    std::unordered_map<OrderId, Locator> index_;
    Quantity bid_total_ = 0;
    Quantity ask_total_ = 0;
    std::optional<PriceTicks> last_trade_;
};

}  // namespace lobgym
