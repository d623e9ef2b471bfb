// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/hdr_io.hpp"

#include <algorithm>
#include <cmath>

namespace spadsim {

namespace {

// Source taps for one output sample along one axis; weights sum to 1.
struct Footprint {
    int first = 0;
    std::vector<double> weights;
};

std::vector<Footprint> box_footprints(int src, int dst)
{
    std::vector<Footprint> out(dst);
    const double ratio = double(src) / dst;
    for (int i = 0; i < dst; ++i) {
        const double lo = i * ratio, hi = (i + 1) * ratio;
        const int first = int(std::floor(lo));
        const int last  = std::min(src - 1, int(std::ceil(hi)) - 1);
        out[i].first    = first;
        for (int k = first; k <= last; ++k) {
            const double overlap = std::min(hi, k + 1.0) - std::max(lo, double(k));
            out[i].weights.push_back(std::max(overlap, 0.0) / ratio);
        }
    }
    return out;
}

void check_target(int sw, int sh, int tw, int th)
{
    if (tw < 1 || th < 1)
        throw ValidationError("downsample target must be at least 1x1");
    if (tw > sw || th > sh)
        throw ValidationError("upsampling from " + std::to_string(sw) + "x" + std::to_string(sh)
                              + " to " + std::to_string(tw) + "x" + std::to_string(th)
                              + " is not supported");
}

// Streams source rows through the horizontal pass and scatters each result
// into the output rows whose footprint covers it. `row(y)` yields source
// row y as interleaved (x, channel) doubles.
template <typename RowFn>
PlaneD resample(int src_w, int src_h, int channels, int dst_w, int dst_h, RowFn&& row)
{
    const auto htaps = box_footprints(src_w, dst_w);
    const auto vtaps = box_footprints(src_h, dst_h);

    // inverse map: source row -> (output row, weight)
    std::vector<std::vector<std::pair<int, double>>> scatter(src_h);
    for (int i = 0; i < dst_h; ++i)
        for (std::size_t k = 0; k < vtaps[i].weights.size(); ++k)
            scatter[vtaps[i].first + int(k)].emplace_back(i, vtaps[i].weights[k]);

    PlaneD out = PlaneD::Zero(dst_h, Eigen::Index(dst_w) * channels);
    Eigen::ArrayXd src(Eigen::Index(src_w) * channels);
    Eigen::ArrayXd line(Eigen::Index(dst_w) * channels);
    for (int y = 0; y < src_h; ++y) {
        if (scatter[y].empty())
            continue;
        row(y, src);
        line.setZero();
        for (int j = 0; j < dst_w; ++j)
            for (std::size_t k = 0; k < htaps[j].weights.size(); ++k)
                line.segment(Eigen::Index(j) * channels, channels) +=
                    htaps[j].weights[k]
                    * src.segment(Eigen::Index(htaps[j].first + int(k)) * channels, channels);
        for (auto [i, wgt] : scatter[y])
            out.row(i) += wgt * line.transpose();
    }
    return out;
}

} // namespace

HdrImage downsample(const HdrImage& image, int target_width, int target_height)
{
    const int w = image.width(), h = image.height();
    check_target(w, h, target_width, target_height);
    if (w == target_width && h == target_height)
        return image;

    const PlaneD out =
        resample(w, h, 3, target_width, target_height, [&](int y, Eigen::ArrayXd& dst) {
            dst = image.pixels()
                      .middleRows(Eigen::Index(y) * w, w)
                      .cast<double>()
                      .reshaped<Eigen::RowMajor>();
        });

    HdrImage result(target_width, target_height);
    for (int y = 0; y < target_height; ++y)
        result.pixels().middleRows(Eigen::Index(y) * target_width, target_width) =
            out.row(y).reshaped<Eigen::RowMajor>(target_width, 3).cast<float>();
    return result;
}

PlaneD downsample(const PlaneD& plane, int target_width, int target_height)
{
    const int w = int(plane.cols()), h = int(plane.rows());
    check_target(w, h, target_width, target_height);
    if (w == target_width && h == target_height)
        return plane;
    return resample(w, h, 1, target_width, target_height,
                    [&](int y, Eigen::ArrayXd& dst) { dst = plane.row(y).transpose(); });
}

} // namespace spadsim
