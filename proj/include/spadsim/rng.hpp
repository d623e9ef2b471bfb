// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

namespace spadsim {

/// SplitMix64 output finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream keyed by (seed, frame, pixel).
///
/// The starting counter is a hash of the key, so any pixel's stream can be
/// constructed directly without advancing a shared generator. Each draw
/// bumps the counter by the golden-ratio increment and hashes it. Satisfies
/// UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t increment = 0x9e3779b97f4a7c15ULL;

    constexpr CounterRng(std::uint64_t seed, std::uint64_t frame, std::uint64_t pixel) noexcept
        : counter_(key(seed, frame, pixel))
    {}

    static constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t frame,
                                       std::uint64_t pixel) noexcept
    {
        std::uint64_t h = mix64(seed + increment);
        h               = mix64(h ^ (frame + 0x632be59bd9b4e019ULL));
        return mix64(h ^ (pixel + 0x8cb92ba72f3d8dd7ULL));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        counter_ += increment;
        return mix64(counter_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept { return double((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t counter_;
};

/// FNV-1a, 64-bit. Stable across platforms; used for ids and splits.
constexpr std::uint64_t fnv1a64(const char* data, std::size_t n) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= std::uint8_t(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace spadsim
