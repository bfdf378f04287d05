// Copyright 2026 The ldpcrowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ldpcrowd {

/// SplitMix64 finalizer. Used both for seeding and as the avalanche mixer
/// behind the public hash families.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds a sequence of words into one 64-bit key; order matters.
constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> words) noexcept
{
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (auto w : words) h = mix64(h ^ mix64(w));
    return h;
}

/// xoshiro256** engine. Satisfies UniformRandomBitGenerator so it plugs into
/// the <random> distributions.
class Rng
{
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept
    {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            w = mix64(s);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound); bound must be nonzero.
    std::uint64_t below(std::uint64_t bound) noexcept
    {
        // Lemire's multiply-shift with rejection.
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

/// Counter-based stream factory: every (key, index) pair names an
/// independent engine, so work split across threads draws the same numbers
/// regardless of scheduling.
class StreamFactory
{
public:
    explicit StreamFactory(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }

    Rng stream(std::uint64_t index) const noexcept { return Rng(derive_key({key_, index})); }

    StreamFactory child(std::uint64_t index) const noexcept
    {
        return StreamFactory(derive_key({key_, 0xc41d5ULL, index}));
    }

private:
    std::uint64_t key_;
};

} // namespace ldpcrowd
