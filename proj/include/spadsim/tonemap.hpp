// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "spadsim/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace spadsim {

enum class ToneOperator { log, reinhard };

std::string_view to_string(ToneOperator op) noexcept;
ToneOperator parse_tone_operator(std::string_view name);

struct TonemapParams {
    ToneOperator op       = ToneOperator::log;
    double log_mu         = 500.0;
    double reinhard_white = std::numeric_limits<double>::infinity();
    double gamma          = 2.2;
    double hdr_scale      = 1.0;

    void validate() const;
};

/// y = log(1 + mu * x / max) / log(1 + mu), with max taken over every entry
/// (all channels). An all-zero field maps to zero.
template <typename Derived>
typename Derived::PlainObject tonemap_log(const Eigen::ArrayBase<Derived>& field,
                                          const TonemapParams& params)
{
    using Scalar             = typename Derived::Scalar;
    const Scalar peak        = field.size() ? field.maxCoeff() : Scalar(0);
    typename Derived::PlainObject out = field;
    if (!(peak > Scalar(0))) {
        out.setZero();
        return out;
    }
    const Scalar mu    = Scalar(params.log_mu);
    const Scalar denom = std::log1p(mu);
    out                = (out.max(Scalar(0)) * (mu / peak)).log1p() / denom;
    return out.min(Scalar(1));
}

/// Global Reinhard curve L (1 + L / Lw^2) / (1 + L), clamped to 1 above the
/// white point. With Lw = infinity this is L / (1 + L).
template <typename Derived>
typename Derived::PlainObject tonemap_reinhard(const Eigen::ArrayBase<Derived>& field,
                                               const TonemapParams& params)
{
    using Scalar     = typename Derived::Scalar;
    const auto L     = field.max(Scalar(0));
    const Scalar iw2 = std::isinf(params.reinhard_white)
                           ? Scalar(0)
                           : Scalar(1.0 / (params.reinhard_white * params.reinhard_white));
    typename Derived::PlainObject out = (L * (Scalar(1) + L * iw2) / (Scalar(1) + L)).min(Scalar(1));
    return out;
}

template <typename Derived>
typename Derived::PlainObject tonemap(const Eigen::ArrayBase<Derived>& field,
                                      const TonemapParams& params)
{
    return params.op == ToneOperator::log ? tonemap_log(field, params)
                                          : tonemap_reinhard(field, params);
}

/// Round-half-up of 255 y after clamping y to [0,1].
inline std::uint8_t quantize8(double y) noexcept
{
    const double c = std::clamp(y, 0.0, 1.0);
    return std::uint8_t(std::floor(255.0 * c + 0.5));
}

LdrImage quantize8(const PlaneD& field);
LdrImage quantize8(const RgbPixels<double>& pixels, int width, int height);

/// y = hdr_scale * x^gamma per channel; input in [0,1].
HdrImage inverse_tonemap_gamma(const PlaneD& field, const TonemapParams& params);
HdrImage inverse_tonemap_gamma(const RgbPixels<double>& pixels, int width, int height,
                               const TonemapParams& params);
/// 8-bit input is normalized by 255 first. Gray input yields r = g = b.
HdrImage inverse_tonemap_gamma(const LdrImage& image, const TonemapParams& params);

} // namespace spadsim
