// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "spadsim/radiometry.hpp"
#include "spadsim/rng.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spadsim {

enum class Sampler { exact, gaussian };

std::string_view to_string(Sampler s) noexcept;
Sampler parse_sampler(std::string_view name);

/// Passive-mode SPAD pixel. Non-paralyzable dead time; photons are thinned
/// by the quantum efficiency before dead-time gating.
struct SpadConfig {
    double quantum_efficiency = 0.4;
    double dead_time          = 150e-9; ///< seconds
    double exposure_time      = 1e-3;   ///< seconds
    Sampler sampler           = Sampler::gaussian;
    std::uint64_t seed        = 0;
    int frames                = 1;

    /// Throws ValidationError on out-of-range fields.
    void validate() const;
};

/// Detected photons per pixel. Integer-valued for one frame, fractional after
/// averaging.
struct CountFrame {
    PlaneD counts;

    int width() const noexcept { return int(counts.cols()); }
    int height() const noexcept { return int(counts.rows()); }
};

// Closed-form moments of the dead-time renewal count.

template <typename Scalar>
constexpr Scalar expected_count(Scalar phi, Scalar q, Scalar T, Scalar tau) noexcept
{
    const Scalar rate = q * phi;
    return rate * T / (Scalar(1) + rate * tau);
}

template <typename Scalar>
constexpr Scalar count_variance(Scalar phi, Scalar q, Scalar T, Scalar tau) noexcept
{
    const Scalar rate = q * phi;
    const Scalar d    = Scalar(1) + rate * tau;
    return rate * T / (d * d * d);
}

/// T / tau_d, the asymptote of the mean count. Throws when tau_d == 0.
double saturation_ceiling(double T, double tau);

/// Largest count the dead-time process can produce in one exposure,
/// floor(T / tau_d) + 1. Meaningless (unbounded) for tau_d == 0.
std::uint64_t max_count(double T, double tau);

/// First-order SNR of the flux estimate; equals sqrt(E[N]).
template <typename Scalar>
Scalar snr_flux(Scalar phi, Scalar q, Scalar T, Scalar tau) noexcept
{
    if (!(phi > Scalar(0)))
        return Scalar(0);
    return std::sqrt(expected_count(phi, q, T, tau));
}

struct Inversion {
    double phi     = 0.0;
    bool saturated = false;
};

/// Maximum-likelihood flux from a (possibly averaged) count:
/// phi = n / (q (T - n tau_d)). Counts at or above T / tau_d are clamped to
/// (1 - 1e-6) T / tau_d and flagged.
Inversion invert_count(double n, double q, double T, double tau) noexcept;

inline constexpr double saturation_epsilon = 1e-6;

/// Renewal-process simulation: exponential gaps at rate q*phi, each detection
/// followed by a dead interval. Exact in distribution; cost is O(count).
template <typename Rng>
std::uint64_t sample_count_exact(double phi, const SpadConfig& config, Rng& rng)
{
    const double rate = config.quantum_efficiency * phi;
    if (!(rate > 0.0))
        return 0;
    boost::random::exponential_distribution<double> gap(rate);
    const double T   = config.exposure_time;
    const double tau = config.dead_time;
    std::uint64_t count = 0;
    double clock        = 0.0;
    for (;;) {
        clock += gap(rng);
        if (clock > T)
            return count;
        ++count;
        clock += tau;
    }
}

/// Normal draw moment-matched to the renewal count, rounded and clamped to
/// [0, max_count].
template <typename Rng>
std::uint64_t sample_count_gaussian(double phi, const SpadConfig& config, Rng& rng)
{
    const double q = config.quantum_efficiency, T = config.exposure_time, tau = config.dead_time;
    const double mean = expected_count(phi, q, T, tau);
    if (!(mean > 0.0))
        return 0;
    boost::random::normal_distribution<double> normal(mean,
                                                      std::sqrt(count_variance(phi, q, T, tau)));
    const double x = std::floor(normal(rng) + 0.5);
    if (x <= 0.0)
        return 0;
    if (tau > 0.0)
        return std::min<std::uint64_t>(std::uint64_t(x), max_count(T, tau));
    return std::uint64_t(x);
}

template <typename Rng>
std::uint64_t sample_count(double phi, const SpadConfig& config, Rng& rng)
{
    return config.sampler == Sampler::exact ? sample_count_exact(phi, config, rng)
                                            : sample_count_gaussian(phi, config, rng);
}

/// One exposure of the whole sensor. Pixel p of frame f draws from
/// CounterRng(seed, f, p), so the result does not depend on `threads`.
CountFrame simulate_frame(const FluxField& flux, const SpadConfig& config,
                          std::uint64_t frame_index, int threads = 0);

/// Per-pixel mean of K frames.
CountFrame average_frames(std::span<const CountFrame> frames);

/// Simulates config.frames frames (indices 0..K-1) and averages them.
CountFrame simulate_average(const FluxField& flux, const SpadConfig& config, int threads = 0);

struct FluxEstimate {
    FluxField flux;
    std::size_t saturated = 0;
};

/// Pixelwise invert_count over a frame.
FluxEstimate invert_frame(const CountFrame& frame, const SpadConfig& config);

} // namespace spadsim
