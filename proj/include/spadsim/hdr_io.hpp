// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "spadsim/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spadsim {

using Bytes = std::vector<std::uint8_t>;

/// Shared-exponent pixel of a Radiance file. e == 0 is exact black.
struct RgbePixel {
    std::uint8_t r = 0, g = 0, b = 0, e = 0;
    bool operator==(const RgbePixel&) const = default;
};

/// value = mantissa * 2^(e - 136); no half-step offset, so encode and
/// decode are exact inverses at mantissa granularity.
std::array<float, 3> rgbe_to_float(RgbePixel p) noexcept;
RgbePixel float_to_rgbe(float r, float g, float b) noexcept;

/// Header fields other than FORMAT and the resolution line.
struct RadianceHeader {
    int width = 0;
    int height = 0;
    std::vector<std::string> lines;
};

RadianceHeader read_radiance_header(std::span<const std::uint8_t> bytes);
HdrImage read_radiance_hdr(std::span<const std::uint8_t> bytes);
Bytes write_radiance_hdr(const HdrImage& image);

HdrImage read_radiance_hdr(const std::filesystem::path& path);
void write_radiance_hdr(const std::filesystem::path& path, const HdrImage& image);

/// PNG container, 8 bits per sample, gray or RGB.
LdrImage read_ldr(std::span<const std::uint8_t> bytes);
Bytes write_ldr(const LdrImage& image);

LdrImage read_ldr(const std::filesystem::path& path);
void write_ldr(const std::filesystem::path& path, const LdrImage& image);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Area-weighted box filter in linear radiance. Rejects upsampling.
HdrImage downsample(const HdrImage& image, int target_width, int target_height);
PlaneD downsample(const PlaneD& plane, int target_width, int target_height);

} // namespace spadsim
