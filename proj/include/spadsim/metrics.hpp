// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "spadsim/image.hpp"
#include "spadsim/tonemap.hpp"

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spadsim {

/// Reported for identical images (zero MSE).
inline constexpr double psnr_identical = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) over every entry of both arrays.
template <typename A, typename B>
double psnr(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b, double peak = 1.0)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError("psnr: dimension mismatch");
    if (!(peak > 0.0))
        throw ValidationError("psnr: peak must be positive");
    const double mse = (a.template cast<double>() - b.template cast<double>()).square().mean();
    if (mse == 0.0)
        return psnr_identical;
    return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const HdrImage& a, const HdrImage& b, double peak = 1.0);

struct SsimParams {
    int window     = 11;
    double sigma   = 1.5;
    double k1      = 0.01;
    double k2      = 0.03;
    double peak    = 1.0;
};

/// Mean of the local SSIM map over every full window position (no padding).
double ssim(const PlaneD& a, const PlaneD& b, const SsimParams& params = {});

/// Mean of per-channel SSIM.
double ssim(const std::vector<PlaneD>& a, const std::vector<PlaneD>& b,
            const SsimParams& params = {});

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
Eigen::ArrayXd gaussian_window(int size, double sigma);

/// PSNR of log2(1 + x) encodings, peak log2(1 + max(b)).
double log_psnr(const HdrImage& a, const HdrImage& b);

struct ImageScore {
    std::string id;
    double psnr_db = 0.0;
    double ssim    = 0.0;
    std::optional<double> log_psnr_db;
    /// Scores ingested from external tools, keyed by column name.
    std::map<std::string, double> external;
};

struct MetricAggregates {
    double psnr_db = 0.0;
    double ssim    = 0.0;
    std::optional<double> log_psnr_db;
    std::map<std::string, double> external;
    std::size_t psnr_inf_count = 0;
};

struct MetricReport {
    std::vector<ImageScore> per_image;   ///< sorted by id
    std::vector<std::string> missing;    ///< ids with no prediction or ground truth
    MetricAggregates aggregates;
    std::size_t count = 0;

    /// Recompute count and column means from per_image.
    void finalize();
    bool complete() const noexcept { return missing.empty(); }
};

enum class ScoreMode { ldr, hdr };

std::string_view to_string(ScoreMode m) noexcept;
ScoreMode parse_score_mode(std::string_view name);

/// 8-bit pair: PSNR (peak on the [0,1] scale) and SSIM on normalized values.
ImageScore score_ldr(const LdrImage& pred, const LdrImage& gt, double peak = 1.0);

/// HDR pair: PSNR and SSIM on log tone-mapped values, log_psnr on radiance.
ImageScore score_hdr(const HdrImage& pred, const HdrImage& gt, const TonemapParams& tonemap,
                     double peak = 1.0);

struct EvalItem {
    std::string id;
    std::filesystem::path prediction;
    std::filesystem::path ground_truth;
};

struct EvalOptions {
    ScoreMode mode = ScoreMode::ldr;
    double peak    = 1.0;
    TonemapParams tonemap;
    int threads = 0;
};

/// Scores every item whose files both exist; others go to `missing`.
MetricReport evaluate_set(const std::vector<EvalItem>& items, const EvalOptions& options);

/// Merge a two-column `id,<score>` CSV (e.g. LPIPS or HDR-VDP output) into
/// the report under `column`.
void ingest_external_scores(MetricReport& report, const std::filesystem::path& csv,
                            const std::string& column);

std::string format_score(double v);
std::string report_csv(const MetricReport& report);
std::string report_json(const MetricReport& report);

} // namespace spadsim
