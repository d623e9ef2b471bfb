// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/radiometry.hpp"
#include "spadsim/spad.hpp"

#include <algorithm>
#include <cmath>

namespace spadsim {

FluxField flux_from_image(const PlaneD& gray, double scale)
{
    if (!std::isfinite(scale) || scale < 0.0)
        throw ValidationError("flux scale must be finite and nonnegative");
    if ((gray < 0.0).any())
        throw ValidationError("gray values must be nonnegative");
    return FluxField{ gray * scale };
}

double positive_median(const PlaneD& field)
{
    std::vector<double> values;
    values.reserve(std::size_t(field.size()));
    for (double v : field.reshaped())
        if (v > 0.0)
            values.push_back(v);
    if (values.empty())
        throw ValidationError("image has no positive luminance");
    const auto mid = values.begin() + std::ptrdiff_t((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

ExposurePlan plan_exposure(const PlaneD& gray, const SpadConfig& config,
                           const ExposureTargets& targets)
{
    config.validate();
    if (!(targets.target_x > 0.0) || !std::isfinite(targets.target_x))
        throw ValidationError("exposure.target_x must be positive");
    if (!(targets.target_count > 0.0) || !std::isfinite(targets.target_count))
        throw ValidationError("exposure.target_count must be positive");
    if (!(config.dead_time > 0.0))
        throw ValidationError("exposure planning needs a positive dead time");

    const double gray_median = positive_median(gray);
    const double q           = config.quantum_efficiency;

    ExposurePlan plan;
    plan.median_flux   = targets.target_x / (q * config.dead_time);
    plan.flux_scale    = plan.median_flux / gray_median;
    const double rate  = q * plan.median_flux;
    plan.exposure_time = targets.target_count * (1.0 + rate * config.dead_time) / rate;
    return plan;
}

} // namespace spadsim
