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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lobgym/agents.hpp"
#include "lobgym/metrics.hpp"
#include "lobgym/rng.hpp"
#include "stats_oracle.hpp"

using namespace lobgym;

namespace {

// Straight transcription of the ratio with explicit loops.
double sortino_oracle(const std::vector<double>& r, double target)
{
    long double sum = 0.0L;
    long double down = 0.0L;
    for (double x : r) {
        sum += x;
        const long double d = x - target;
        if (d < 0.0L) {
            down += d * d;
        }
    }
    const long double n = static_cast<long double>(r.size());
    const long double num = sum / n - target;
    const long double dd = std::sqrt(down / n);
    if (dd == 0.0L) {
        return num > 0.0L ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return static_cast<double>(num / dd);
}

EnvConfig short_env()
{
    EnvConfig c;
    c.steps = 60;
    c.warmup = 200;
    return c;
}

}  // namespace

TEST_CASE("sortino examples")
{
    CHECK(sortino({-1.0, 1.0}) == 0.0);
    CHECK(sortino({0.02, -0.01, 0.03}) == doctest::Approx(2.3094).epsilon(1e-4));
    CHECK(sortino({0.02, -0.01, 0.03}) == doctest::Approx((0.04 / 3.0) / std::sqrt(1e-4 / 3.0)).epsilon(1e-13));
    CHECK(std::isinf(sortino({0.01, 0.02})));
    CHECK(sortino({0.0, 0.0}) == 0.0);
    CHECK(sortino({0.05, 0.07}, 0.1) < 0.0);
    CHECK_THROWS_AS(sortino({}), std::invalid_argument);
    CHECK_THROWS_AS(sortino({0.1}), std::invalid_argument);
}

TEST_CASE("sortino agrees with the brute-force oracle on a thousand vectors")
{
    RngStream r(1, 0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> x(2 + r.below(200));
        const double scale = std::pow(10.0, -5.0 + 4.0 * r.uniform());
        const double shift = scale * (r.uniform() - 0.3);
        for (double& v : x) {
            v = shift + scale * r.normal();
        }
        const double target = i % 3 == 0 ? 0.0 : shift * r.uniform();
        const double got = sortino(x, target);
        const double want = sortino_oracle(x, target);
        if (std::isinf(want)) {
            CHECK(got == want);
            continue;
        }
        worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
    }
    MESSAGE("worst sortino deviation " << worst);
    CHECK(worst < 1e-12);
}

TEST_CASE("annualize is linear and exact")
{
    CHECK(annualize(5.203e-5) == doctest::Approx(1.311e-2).epsilon(1e-3));
    CHECK(annualize(3.038e-5) == doctest::Approx(7.66e-3).epsilon(1e-3));
    CHECK(annualize(0.0) == 0.0);
    CHECK(annualize(1.0) == 252.0);
    CHECK(annualize(2e-4) + annualize(3e-4) == doctest::Approx(annualize(5e-4)).epsilon(1e-15));
}

TEST_CASE("mean and sample deviation")
{
    const std::vector<double> x{1.0, 2.0, 4.0, 9.0};
    CHECK(mean(x) == oracle::mean(x));
    CHECK(stddev(x) == doctest::Approx(std::sqrt(oracle::sample_variance(x))).epsilon(1e-14));
}

TEST_CASE("evaluate is deterministic and shares market randomness across agents")
{
    const EnvConfig c = short_env();
    LongOnlyAgent a(c.market.tick);
    LongOnlyAgent b(c.market.tick);
    const ComparisonRow ra = evaluate(a, c, 5, 42);
    const ComparisonRow rb = evaluate(b, c, 5, 42);
    REQUIRE(ra.episodes.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(ra.episodes[i].episode_return == rb.episodes[i].episode_return);
        CHECK(ra.episodes[i].return_path == rb.episodes[i].return_path);
    }
    CHECK(ra.mean_return == rb.mean_return);
    CHECK(ra.sortino == rb.sortino);
    CHECK(ra.ann_return == annualize(ra.mean_return));

    std::vector<double> returns;
    for (const auto& e : ra.episodes) {
        returns.push_back(e.episode_return);
        CHECK(e.fill_count >= 0);
        CHECK(e.max_drawdown >= 0.0);
        CHECK(e.return_path.size() == static_cast<std::size_t>(c.steps));
        CHECK(e.return_path.back() == doctest::Approx(e.episode_return).epsilon(1e-12));
    }
    CHECK(ra.mean_return == doctest::Approx(oracle::mean(returns)).epsilon(1e-14));
    CHECK(ra.volatility == doctest::Approx(std::sqrt(oracle::sample_variance(returns))).epsilon(1e-12));

    // A different seed changes the market.
    LongOnlyAgent c2(c.market.tick);
    CHECK(evaluate(c2, c, 5, 43).mean_return != ra.mean_return);
}

TEST_CASE("return band is the per-step mean and deviation")
{
    std::vector<EpisodeReport> eps(3);
    eps[0].return_path = {0.0, 1.0};
    eps[1].return_path = {0.0, 2.0};
    eps[2].return_path = {0.0, 6.0};
    const ReturnBand b = return_band(eps);
    CHECK(b.mean == std::vector<double>{0.0, 3.0});
    CHECK(b.sd[0] == 0.0);
    CHECK(b.sd[1] == doctest::Approx(std::sqrt(oracle::sample_variance({1.0, 2.0, 6.0}))));
}

TEST_CASE("long-only in a strongly falling scripted market loses money")
{
    // Exogenous day: the mid follows -20%/yr with negligible noise and the
    // bid fills with a path-independent probability. Each unit bought loses
    // about half the day's fall (0.04) and earns one tick of edge, so the
    // expected return is negative by construction.
    LongOnlyAgent agent(0.01);
    RngStream r(5, 0);
    const double mu = -0.20;
    const double per_step = mu / (kDaysPerYear * 390.0);
    const double notional = 100.0 * 10.0;
    std::vector<double> returns;
    for (int ep = 0; ep < 100; ++ep) {
        double mid = 100.0;
        double cash = 0.0;
        double inventory = 0.0;
        for (int t = 0; t < 390; ++t) {
            Observation o;
            o.mid = mid;
            const Action a = agent.act(o);
            if (a.q_bid > 0 && r.uniform() < 0.3) {
                cash -= static_cast<double>(a.q_bid) * (mid - a.delta_bid);
                inventory += static_cast<double>(a.q_bid);
            }
            mid *= 1.0 + per_step + 1e-7 * r.normal();
        }
        returns.push_back((cash + inventory * mid) / notional);
    }
    const double m = mean(returns);
    MESSAGE("long-only mean return under -20%/yr drift " << m);
    CHECK(m < 0.0);
    CHECK(sortino(returns) < 0.0);
}
