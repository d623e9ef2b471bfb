// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/spad.hpp"
#include "spadsim/parallel.hpp"

#include <algorithm>

namespace spadsim {

std::string_view to_string(Sampler s) noexcept
{
    return s == Sampler::exact ? "exact" : "gaussian";
}

Sampler parse_sampler(std::string_view name)
{
    if (name == "exact")
        return Sampler::exact;
    if (name == "gaussian")
        return Sampler::gaussian;
    throw ValidationError("unknown sampler '" + std::string(name) + "' (expected exact|gaussian)");
}

void SpadConfig::validate() const
{
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0))
        throw ValidationError("spad.q must be in (0, 1]");
    if (!(dead_time >= 0.0) || !std::isfinite(dead_time))
        throw ValidationError("spad.dead_time_ns must be nonnegative");
    if (!(exposure_time > 0.0) || !std::isfinite(exposure_time))
        throw ValidationError("exposure time must be positive");
    if (frames < 1)
        throw ValidationError("spad.frames must be >= 1");
}

double saturation_ceiling(double T, double tau)
{
    if (!(tau > 0.0))
        throw ValidationError("no ceiling: dead time is zero");
    return T / tau;
}

std::uint64_t max_count(double T, double tau)
{
    return std::uint64_t(std::floor(saturation_ceiling(T, tau))) + 1;
}

Inversion invert_count(double n, double q, double T, double tau) noexcept
{
    if (!(n > 0.0))
        return {};
    Inversion out;
    if (tau > 0.0 && n >= T / tau) {
        n             = (1.0 - saturation_epsilon) * (T / tau);
        out.saturated = true;
    }
    out.phi = n / (q * (T - n * tau));
    return out;
}

CountFrame simulate_frame(const FluxField& flux, const SpadConfig& config,
                          std::uint64_t frame_index, int threads)
{
    config.validate();
    CountFrame frame{ PlaneD(flux.height(), flux.width()) };
    const double* phi = flux.phi.data();
    double* out       = frame.counts.data();
    parallel_for(flux.phi.size(), threads, [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
        for (std::ptrdiff_t p = begin; p < end; ++p) {
            CounterRng rng(config.seed, frame_index, std::uint64_t(p));
            out[p] = double(sample_count(phi[p], config, rng));
        }
    });
    return frame;
}

CountFrame average_frames(std::span<const CountFrame> frames)
{
    if (frames.empty())
        throw ValidationError("average_frames needs at least one frame");
    CountFrame out{ frames.front().counts };
    for (const auto& f : frames.subspan(1)) {
        if (f.width() != out.width() || f.height() != out.height())
            throw ValidationError("frame dimension mismatch");
        out.counts += f.counts;
    }
    if (frames.size() > 1)
        out.counts /= double(frames.size());
    return out;
}

CountFrame simulate_average(const FluxField& flux, const SpadConfig& config, int threads)
{
    config.validate();
    std::vector<CountFrame> frames;
    frames.reserve(std::size_t(config.frames));
    for (int f = 0; f < config.frames; ++f)
        frames.push_back(simulate_frame(flux, config, std::uint64_t(f), threads));
    return average_frames(frames);
}

FluxEstimate invert_frame(const CountFrame& frame, const SpadConfig& config)
{
    FluxEstimate est{ FluxField{ PlaneD(frame.height(), frame.width()) }, 0 };
    const double q = config.quantum_efficiency, T = config.exposure_time, tau = config.dead_time;
    for (Eigen::Index i = 0; i < frame.counts.size(); ++i) {
        const Inversion inv = invert_count(frame.counts.data()[i], q, T, tau);
        est.flux.phi.data()[i] = inv.phi;
        est.saturated += inv.saturated ? 1 : 0;
    }
    return est;
}

} // namespace spadsim
