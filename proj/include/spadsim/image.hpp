// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spadsim {

/// Row-major scalar field, indexed (row, col) == (y, x).
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One row per pixel, one column per channel; pixel index is y * width + x.
template <typename Scalar>
using RgbPixels = Eigen::Array<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

using PlaneD = Plane<double>;
using PlaneF = Plane<float>;

class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")")
        , offset_(offset)
    {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Linear-radiance RGB image. Mono content is stored with r = g = b.
template <typename Scalar>
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height)
        : width_(width), height_(height)
    {
        if (width <= 0 || height <= 0)
            throw ValidationError("image dimensions must be positive");
        pixels_ = RgbPixels<Scalar>::Zero(Eigen::Index(width) * height, 3);
    }
    RgbImage(int width, int height, RgbPixels<Scalar> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels))
    {
        if (width <= 0 || height <= 0)
            throw ValidationError("image dimensions must be positive");
        if (pixels_.rows() != Eigen::Index(width) * height)
            throw ValidationError("pixel count does not match dimensions");
    }

    /// Broadcast a scalar field to all three channels.
    static RgbImage from_mono(const Plane<Scalar>& plane)
    {
        RgbImage img(int(plane.cols()), int(plane.rows()));
        const auto flat = plane.template reshaped<Eigen::RowMajor>();
        for (int c = 0; c < 3; ++c)
            img.pixels_.col(c) = flat;
        return img;
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    Eigen::Index size() const noexcept { return pixels_.rows(); }

    RgbPixels<Scalar>& pixels() noexcept { return pixels_; }
    const RgbPixels<Scalar>& pixels() const noexcept { return pixels_; }

    auto operator()(int x, int y) { return pixels_.row(Eigen::Index(y) * width_ + x); }
    auto operator()(int x, int y) const { return pixels_.row(Eigen::Index(y) * width_ + x); }

    /// Channel c as a height x width plane (copy).
    Plane<Scalar> channel(int c) const
    {
        Plane<Scalar> out(height_, width_);
        out.template reshaped<Eigen::RowMajor>() = pixels_.col(c);
        return out;
    }

    /// All values finite and nonnegative.
    bool valid() const
    {
        return width_ > 0 && height_ > 0 && pixels_.allFinite() && (pixels_ >= Scalar(0)).all();
    }

    template <typename Other>
    RgbImage<Other> cast() const
    {
        return RgbImage<Other>(width_, height_, pixels_.template cast<Other>());
    }

private:
    int width_ = 0;
    int height_ = 0;
    RgbPixels<Scalar> pixels_;
};

using HdrImage = RgbImage<float>;

/// 8-bit image with 1 (gray) or 3 (RGB, interleaved) channels.
struct LdrImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    LdrImage() = default;
    LdrImage(int w, int h, int c)
        : width(w), height(h), channels(c)
    {
        if (w <= 0 || h <= 0)
            throw ValidationError("image dimensions must be positive");
        if (c != 1 && c != 3)
            throw ValidationError("unsupported channel count " + std::to_string(c));
        pixels.assign(std::size_t(w) * h * c, 0);
    }

    std::uint8_t& at(int x, int y, int c = 0)
    {
        return pixels[(std::size_t(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const
    {
        return pixels[(std::size_t(y) * width + x) * channels + c];
    }

    bool operator==(const LdrImage&) const = default;
};

/// Normalized [0,1] planes of an 8-bit image, one per channel.
std::vector<PlaneD> to_unit_planes(const LdrImage& img);

} // namespace spadsim
