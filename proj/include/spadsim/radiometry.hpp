// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "spadsim/image.hpp"

namespace spadsim {

struct SpadConfig;

/// Incident photon flux per pixel, photons/second.
struct FluxField {
    PlaneD phi;

    int width() const noexcept { return int(phi.cols()); }
    int height() const noexcept { return int(phi.rows()); }
};

struct ExposurePlan {
    double exposure_time = 0.0; ///< seconds
    double flux_scale    = 0.0; ///< photons/second per radiance unit
    double median_flux   = 0.0; ///< photons/second at the median pixel
};

struct ExposureTargets {
    double target_x     = 0.15;  ///< q * phi_med * tau_d
    double target_count = 870.0; ///< expected detections at the median pixel
};

/// Rec.601 luma weights applied to linear radiance.
template <typename Scalar>
Plane<double> luminance(const RgbImage<Scalar>& image)
{
    const Eigen::Vector3d w(0.299, 0.587, 0.114);
    Plane<double> out(image.height(), image.width());
    out.reshaped<Eigen::RowMajor>() = (image.pixels().template cast<double>().matrix() * w).array();
    return out;
}

FluxField flux_from_image(const PlaneD& gray, double scale);

/// Lower median of the strictly positive values; throws if there are none.
double positive_median(const PlaneD& field);

/// Places the median pixel at q*phi*tau_d = target_x on the saturation curve
/// and picks T so that the mean count there equals target_count.
ExposurePlan plan_exposure(const PlaneD& gray, const SpadConfig& config,
                           const ExposureTargets& targets = {});

} // namespace spadsim
