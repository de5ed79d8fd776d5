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

#include <cstdint>
#include <string>

#include "lobgym/config.hpp"
#include "lobgym/errors.hpp"

using namespace lobgym;

namespace {

int error_line(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST_CASE("FNV-1a published test vectors")
{
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("parse values of every kind")
{
    const RunConfig c = parse_config(R"(# run
seed = 7

[market]
hawkes_beta = 1.5   # trailing comment
market_order_prob = 0.1

[env]
steps = 120
pnl_convention = "symmetric"

[agent]
kind = "stoikov"
checkpoint = "a # b.ckpt"

[io]
log_events = true
)");
    CHECK(c.seed == 7u);
    CHECK(c.env.market.hawkes.beta == 1.5);
    CHECK(c.env.market.market_order_prob == 0.1);
    CHECK(c.env.steps == 120);
    CHECK(c.env.pnl_convention == PnlConvention::Symmetric);
    CHECK(c.agent.kind == "stoikov");
    CHECK(c.agent.checkpoint == "a # b.ckpt");
    CHECK(c.io.log_events);
    // Untouched keys keep their defaults.
    CHECK(c.env.market.hawkes.mu == RunConfig{}.env.market.hawkes.mu);
}

TEST_CASE("errors name the offending line")
{
    CHECK(error_line("[env]\nsteps = 10\nbogus = 3\n") == 3);
    CHECK(error_line("[nowhere]\nx = 1\n") == 1);
    CHECK(error_line("[env]\n\nsteps = ten\n") == 3);
    CHECK(error_line("[env]\nsteps 10\n") == 2);
    CHECK(error_line("[agent]\nkind = stoikov\n") == 2);
    CHECK(error_line("[env]\nsteps = 10\nsteps = 11\n") == 3);
}

TEST_CASE("semantic validation")
{
    CHECK_THROWS_AS(parse_config("[env]\nsteps = 0\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse_config("[agent]\nkind = \"oracle\"\n").validate(), ConfigError);
    // Feller violation in the spread process.
    CHECK_THROWS_AS(parse_config("[market]\ncir_vol = 5.0\n").validate(), ConfigError);
    CHECK_NOTHROW(RunConfig{}.validate());
}

TEST_CASE("canonical form round-trips and the hash ignores io and seed")
{
    RunConfig a;
    const std::uint64_t base = a.hash();
    CHECK(base == RunConfig{}.hash());
    CHECK(base == fnv1a64(a.canonical()));

    RunConfig b = a;
    b.io.out_dir = "elsewhere";
    b.seed = 99;
    CHECK(b.hash() == base);

    RunConfig c = a;
    set_config_value(c, "market.hawkes_beta", "2.5");
    CHECK(c.env.market.hawkes.beta == 2.5);
    CHECK(c.hash() != base);

    const RunConfig back = parse_config(c.to_toml());
    CHECK(back.hash() == c.hash());
    CHECK(back.canonical() == c.canonical());

    CHECK_THROWS_AS(set_config_value(c, "market.nothing", "1"), ConfigError);
    set_config_value(c, "seed", "12");
    CHECK(c.seed == 12u);
}

TEST_CASE("seed precedence")
{
    RunConfig none;
    RunConfig with;
    with.seed = 5;
    CHECK(resolve_seed(std::nullopt, none, nullptr) == kDefaultSeed);
    CHECK(resolve_seed(std::nullopt, none, "17") == 17u);
    CHECK(resolve_seed(std::nullopt, with, "17") == 5u);
    CHECK(resolve_seed(3, with, "17") == 3u);
    CHECK_THROWS_AS(resolve_seed(std::nullopt, none, "abc"), ConfigError);
    CHECK_THROWS_AS(resolve_seed(std::nullopt, none, "-4"), ConfigError);
}

TEST_CASE("shipped config equals the compiled defaults")
{
    const RunConfig shipped = load_config(LOBGYM_SOURCE_DIR "/configs/default.toml");
    CHECK(shipped.canonical() == RunConfig{}.canonical());
    CHECK(shipped.hash() == RunConfig{}.hash());
}
