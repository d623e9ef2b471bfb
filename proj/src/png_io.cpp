// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/hdr_io.hpp"

#include <png.h>

#include <cstring>

namespace spadsim {

namespace {

struct PngImage {
    png_image img;
    PngImage()
    {
        std::memset(&img, 0, sizeof(img));
        img.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&img); }
    PngImage(const PngImage&)            = delete;
    PngImage& operator=(const PngImage&) = delete;
};

} // namespace

std::vector<PlaneD> to_unit_planes(const LdrImage& img)
{
    std::vector<PlaneD> planes;
    for (int c = 0; c < img.channels; ++c) {
        PlaneD p(img.height, img.width);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                p(y, x) = img.at(x, y, c) / 255.0;
        planes.push_back(std::move(p));
    }
    return planes;
}

LdrImage read_ldr(std::span<const std::uint8_t> bytes)
{
    PngImage png;
    if (!png_image_begin_read_from_memory(&png.img, bytes.data(), bytes.size()))
        throw IoError(std::string("png decode failed: ") + png.img.message);

    if (png.img.format & PNG_FORMAT_FLAG_LINEAR)
        throw ValidationError("unsupported bit depth (16-bit PNG)");
    if (png.img.format & PNG_FORMAT_FLAG_ALPHA)
        throw ValidationError("unsupported channel count (alpha channel)");

    const bool color = (png.img.format & PNG_FORMAT_FLAG_COLOR) != 0;
    LdrImage out(int(png.img.width), int(png.img.height), color ? 3 : 1);
    png.img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_finish_read(&png.img, nullptr, out.pixels.data(), 0, nullptr))
        throw IoError(std::string("png decode failed: ") + png.img.message);
    return out;
}

Bytes write_ldr(const LdrImage& image)
{
    if (image.channels != 1 && image.channels != 3)
        throw ValidationError("unsupported channel count " + std::to_string(image.channels));
    if (image.pixels.size() != std::size_t(image.width) * image.height * image.channels)
        throw ValidationError("pixel buffer does not match dimensions");

    PngImage png;
    png.img.width  = png_uint_32(image.width);
    png.img.height = png_uint_32(image.height);
    png.img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(png.img, size, 0, image.pixels.data(), 0, nullptr))
        throw IoError(std::string("png encode failed: ") + png.img.message);
    Bytes out(size);
    if (!png_image_write_to_memory(&png.img, out.data(), &size, 0, image.pixels.data(), 0,
                                   nullptr))
        throw IoError(std::string("png encode failed: ") + png.img.message);
    out.resize(size);
    return out;
}

LdrImage read_ldr(const std::filesystem::path& path)
{
    return read_ldr(std::span<const std::uint8_t>(read_file(path)));
}

void write_ldr(const std::filesystem::path& path, const LdrImage& image)
{
    write_file(path, write_ldr(image));
}

} // namespace spadsim
