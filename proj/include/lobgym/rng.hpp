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

namespace lobgym {

/// Counter-based random stream keyed by (seed, stream id).
///
/// Every draw is a pure function of (seed, stream, counter), so two streams
/// with the same key produce bit-identical sequences regardless of platform
/// or thread, and a stream can be positioned by its counter alone. All
/// distribution samplers below are implemented here rather than through
/// <random> distributions, whose output is implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    /// Standard normal (Box-Muller, one value per call).
    double normal();
    /// Exponential with the given rate (> 0).
    double exponential(double rate);
    std::int64_t poisson(double lambda);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

    /// Child stream with an independent key, used to hand sub-streams to
    /// components without sharing draws.
    RngStream split(std::uint64_t salt) const;

private:
    std::int64_t poisson_ptrs(double lambda);

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_lo_;
    std::uint64_t key_hi_;
    std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace lobgym
