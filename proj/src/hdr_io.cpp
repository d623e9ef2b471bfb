// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/hdr_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

namespace spadsim {

std::array<float, 3> rgbe_to_float(RgbePixel p) noexcept
{
    if (p.e == 0)
        return { 0.0f, 0.0f, 0.0f };
    const float f = std::ldexp(1.0f, int(p.e) - (128 + 8));
    return { p.r * f, p.g * f, p.b * f };
}

RgbePixel float_to_rgbe(float r, float g, float b) noexcept
{
    const float v = std::max({ r, g, b });
    if (!(v >= 1e-32f))
        return {};
    int e = 0;
    // v = f * 2^e with f in [0.5, 1)
    const float f = std::frexp(v, &e);
    float scale   = f * 256.0f / v;
    auto mantissa = [&](float c) { return std::floor(std::max(c, 0.0f) * scale + 0.5f); };
    if (mantissa(v) > 255.0f) {
        // rounding carried into the next binade
        ++e;
        scale *= 0.5f;
    }
    if (e + 128 > 255)
        return { 255, 255, 255, 255 };
    if (e + 128 < 1)
        return {};
    return { std::uint8_t(mantissa(r)), std::uint8_t(mantissa(g)), std::uint8_t(mantissa(b)),
             std::uint8_t(e + 128) };
}

namespace {

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    std::uint8_t peek(std::size_t ahead = 0) const { return bytes_[pos_ + ahead]; }

    std::uint8_t next(const char* what)
    {
        if (pos_ >= bytes_.size())
            throw FormatError(std::string("truncated ") + what, pos_);
        return bytes_[pos_++];
    }

    std::string_view line()
    {
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
            ++pos_;
        if (pos_ >= bytes_.size())
            throw FormatError("unterminated header line", start);
        std::string_view out(reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start);
        ++pos_;
        return out;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

bool parse_int(std::string_view token, int& out)
{
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

RadianceHeader parse_header(ByteReader& in)
{
    RadianceHeader header;
    std::size_t line_start = in.offset();
    std::string_view magic = in.line();
    if (!magic.starts_with("#?RADIANCE") && !magic.starts_with("#?RGBE"))
        throw FormatError("missing Radiance signature", line_start);

    bool have_format = false;
    for (;;) {
        line_start          = in.offset();
        std::string_view ln = in.line();
        if (ln.empty())
            break;
        if (ln.starts_with("FORMAT=")) {
            if (ln.substr(7) != "32-bit_rle_rgbe")
                throw FormatError("unsupported format '" + std::string(ln.substr(7)) + "'",
                                  line_start);
            have_format = true;
        }
        header.lines.emplace_back(ln);
    }
    if (!have_format)
        throw FormatError("missing FORMAT=32-bit_rle_rgbe", line_start);

    line_start = in.offset();
    std::istringstream res{ std::string(in.line()) };
    std::string ya, xa, hs, ws, extra;
    res >> ya >> hs >> xa >> ws;
    if (res.fail())
        throw FormatError("malformed resolution line", line_start);
    if (ya != "-Y" || xa != "+X")
        throw FormatError("unsupported orientation '" + ya + " " + xa + "', expected -Y +X",
                          line_start);
    if (!parse_int(hs, header.height) || !parse_int(ws, header.width) || header.width <= 0
        || header.height <= 0)
        throw FormatError("malformed resolution line", line_start);
    if (res >> extra)
        throw FormatError("malformed resolution line", line_start);
    return header;
}

// Flat pixels, tolerating old-style runs (1,1,1,n) that repeat the previous pixel.
void read_flat_scanline(ByteReader& in, std::span<RgbePixel> out)
{
    int shift = 0;
    std::size_t i = 0;
    while (i < out.size()) {
        const std::size_t at = in.offset();
        RgbePixel p;
        p.r = in.next("scanline");
        p.g = in.next("scanline");
        p.b = in.next("scanline");
        p.e = in.next("scanline");
        if (p.r == 1 && p.g == 1 && p.b == 1 && i > 0) {
            const std::size_t count = std::size_t(p.e) << shift;
            if (i + count > out.size())
                throw FormatError("run length overrun", at);
            std::fill_n(out.begin() + i, count, out[i - 1]);
            i += count;
            shift += 8;
        } else {
            out[i++] = p;
            shift    = 0;
        }
    }
}

void read_rle_scanline(ByteReader& in, std::span<RgbePixel> out, std::vector<std::uint8_t>& buf)
{
    const std::size_t width = out.size();
    const std::size_t at    = in.offset();
    in.next("scanline");
    in.next("scanline");
    const std::size_t encoded = (std::size_t(in.next("scanline")) << 8) | in.next("scanline");
    if (encoded != width)
        throw FormatError("scanline width mismatch", at);

    buf.resize(4 * width);
    for (int ch = 0; ch < 4; ++ch) {
        std::uint8_t* dst = buf.data() + ch * width;
        std::size_t n     = 0;
        while (n < width) {
            const std::size_t run_at = in.offset();
            std::size_t count        = in.next("scanline");
            if (count > 128) {
                count -= 128;
                if (n + count > width)
                    throw FormatError("run length overrun", run_at);
                std::fill_n(dst + n, count, in.next("scanline"));
            } else {
                if (count == 0)
                    throw FormatError("zero-length literal run", run_at);
                if (n + count > width)
                    throw FormatError("run length overrun", run_at);
                for (std::size_t k = 0; k < count; ++k)
                    dst[n + k] = in.next("scanline");
            }
            n += count;
        }
    }
    for (std::size_t i = 0; i < width; ++i)
        out[i] = { buf[i], buf[width + i], buf[2 * width + i], buf[3 * width + i] };
}

void write_rle_channel(Bytes& out, const std::uint8_t* data, int n)
{
    constexpr int min_run = 4;
    int cur = 0;
    while (cur < n) {
        int beg_run = cur, run = 0, old_run = 0;
        while (run < min_run && beg_run < n) {
            beg_run += run;
            old_run = run;
            run     = 1;
            while (beg_run + run < n && run < 127 && data[beg_run] == data[beg_run + run])
                ++run;
        }
        if (old_run > 1 && old_run == beg_run - cur) {
            out.push_back(std::uint8_t(128 + old_run));
            out.push_back(data[cur]);
            cur = beg_run;
        }
        while (cur < beg_run) {
            const int literal = std::min(beg_run - cur, 128);
            out.push_back(std::uint8_t(literal));
            out.insert(out.end(), data + cur, data + cur + literal);
            cur += literal;
        }
        if (run >= min_run) {
            out.push_back(std::uint8_t(128 + run));
            out.push_back(data[beg_run]);
            cur += run;
        }
    }
}

} // namespace

RadianceHeader read_radiance_header(std::span<const std::uint8_t> bytes)
{
    ByteReader in(bytes);
    return parse_header(in);
}

HdrImage read_radiance_hdr(std::span<const std::uint8_t> bytes)
{
    ByteReader in(bytes);
    const RadianceHeader header = parse_header(in);
    const int w = header.width, h = header.height;

    HdrImage image(w, h);
    std::vector<RgbePixel> scan(w);
    std::vector<std::uint8_t> buf;
    for (int y = 0; y < h; ++y) {
        const bool rle = w >= 8 && w <= 0x7fff && in.remaining() >= 4 && in.peek(0) == 2
                         && in.peek(1) == 2 && (in.peek(2) & 0x80) == 0;
        if (rle)
            read_rle_scanline(in, scan, buf);
        else
            read_flat_scanline(in, scan);
        auto row = image.pixels().middleRows(Eigen::Index(y) * w, w);
        for (int x = 0; x < w; ++x) {
            const auto v = rgbe_to_float(scan[x]);
            row(x, 0)    = v[0];
            row(x, 1)    = v[1];
            row(x, 2)    = v[2];
        }
    }
    return image;
}

Bytes write_radiance_hdr(const HdrImage& image)
{
    const int w = image.width(), h = image.height();
    std::ostringstream hs;
    hs << "#?RADIANCE\nSOFTWARE=spadsim\nFORMAT=32-bit_rle_rgbe\n\n-Y " << h << " +X " << w << "\n";
    const std::string header = hs.str();

    Bytes out(header.begin(), header.end());
    out.reserve(out.size() + std::size_t(w) * h * 4);
    const bool rle = w >= 8 && w <= 0x7fff;
    std::vector<std::uint8_t> buf(4 * std::size_t(w));
    const auto& px = image.pixels();
    for (int y = 0; y < h; ++y) {
        const Eigen::Index base = Eigen::Index(y) * w;
        if (!rle) {
            for (int x = 0; x < w; ++x) {
                const RgbePixel p = float_to_rgbe(px(base + x, 0), px(base + x, 1), px(base + x, 2));
                out.insert(out.end(), { p.r, p.g, p.b, p.e });
            }
            continue;
        }
        out.insert(out.end(), { 2, 2, std::uint8_t(w >> 8), std::uint8_t(w & 0xff) });
        for (int x = 0; x < w; ++x) {
            const RgbePixel p = float_to_rgbe(px(base + x, 0), px(base + x, 1), px(base + x, 2));
            buf[x]         = p.r;
            buf[w + x]     = p.g;
            buf[2 * w + x] = p.b;
            buf[3 * w + x] = p.e;
        }
        for (int ch = 0; ch < 4; ++ch)
            write_rle_channel(out, buf.data() + std::size_t(ch) * w, w);
    }
    return out;
}

Bytes read_file(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path.string() + "'");
    Bytes out((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad())
        throw IoError("read failed for '" + path.string() + "'");
    return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot create '" + path.string() + "'");
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    f.close();
    if (!f)
        throw IoError("write failed for '" + path.string() + "'");
}

HdrImage read_radiance_hdr(const std::filesystem::path& path)
{
    return read_radiance_hdr(std::span<const std::uint8_t>(read_file(path)));
}

void write_radiance_hdr(const std::filesystem::path& path, const HdrImage& image)
{
    write_file(path, write_radiance_hdr(image));
}

} // namespace spadsim
