// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/tonemap.hpp"

#include <string>

namespace spadsim {

std::string_view to_string(ToneOperator op) noexcept
{
    return op == ToneOperator::log ? "log" : "reinhard";
}

ToneOperator parse_tone_operator(std::string_view name)
{
    if (name == "log")
        return ToneOperator::log;
    if (name == "reinhard")
        return ToneOperator::reinhard;
    throw ValidationError("unknown tone operator '" + std::string(name)
                          + "' (expected log|reinhard)");
}

void TonemapParams::validate() const
{
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(log_mu))
        throw ValidationError("tonemap.mu must be positive");
    if (!(reinhard_white > 0.0))
        throw ValidationError("tonemap.reinhard_white must be positive");
    if (!positive(gamma))
        throw ValidationError("tonemap.gamma must be positive");
    if (!positive(hdr_scale))
        throw ValidationError("tonemap.hdr_scale must be positive");
}

LdrImage quantize8(const PlaneD& field)
{
    LdrImage out(int(field.cols()), int(field.rows()), 1);
    const auto flat = field.reshaped<Eigen::RowMajor>();
    for (Eigen::Index i = 0; i < flat.size(); ++i)
        out.pixels[std::size_t(i)] = quantize8(flat(i));
    return out;
}

LdrImage quantize8(const RgbPixels<double>& pixels, int width, int height)
{
    LdrImage out(width, height, 3);
    if (pixels.rows() != Eigen::Index(width) * height)
        throw ValidationError("pixel count does not match dimensions");
    for (Eigen::Index i = 0; i < pixels.rows(); ++i)
        for (int c = 0; c < 3; ++c)
            out.pixels[std::size_t(i) * 3 + c] = quantize8(pixels(i, c));
    return out;
}

namespace {

template <typename Derived>
auto expand(const Eigen::ArrayBase<Derived>& x, const TonemapParams& p)
{
    return (p.hdr_scale * x.derived().cwiseMax(0.0).cwiseMin(1.0).pow(p.gamma)).template cast<float>();
}

} // namespace

HdrImage inverse_tonemap_gamma(const PlaneD& field, const TonemapParams& params)
{
    params.validate();
    return HdrImage::from_mono(expand(field, params));
}

HdrImage inverse_tonemap_gamma(const RgbPixels<double>& pixels, int width, int height,
                               const TonemapParams& params)
{
    params.validate();
    return HdrImage(width, height, expand(pixels, params));
}

HdrImage inverse_tonemap_gamma(const LdrImage& image, const TonemapParams& params)
{
    const auto planes = to_unit_planes(image);
    if (image.channels == 1)
        return inverse_tonemap_gamma(planes[0], params);
    RgbPixels<double> px(Eigen::Index(image.width) * image.height, 3);
    for (int c = 0; c < 3; ++c)
        px.col(c) = planes[c].reshaped<Eigen::RowMajor>();
    return inverse_tonemap_gamma(px, image.width, image.height, params);
}

} // namespace spadsim
