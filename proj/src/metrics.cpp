// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/metrics.hpp"
#include "spadsim/hdr_io.hpp"
#include "spadsim/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

namespace spadsim {

double psnr(const HdrImage& a, const HdrImage& b, double peak)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw ValidationError("psnr: dimension mismatch");
    return psnr(a.pixels(), b.pixels(), peak);
}

Eigen::ArrayXd gaussian_window(int size, double sigma)
{
    Eigen::ArrayXd g(size);
    const double c = (size - 1) / 2.0;
    for (int i = 0; i < size; ++i)
        g(i) = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    return g / g.sum();
}

namespace {

// Valid-mode separable filtering.
PlaneD filter_valid(const PlaneD& x, const Eigen::ArrayXd& g)
{
    const Eigen::Index n = g.size();
    const Eigen::Index oh = x.rows() - n + 1, ow = x.cols() - n + 1;
    PlaneD tmp = PlaneD::Zero(x.rows(), ow);
    for (Eigen::Index k = 0; k < n; ++k)
        tmp += g(k) * x.middleCols(k, ow);
    PlaneD out = PlaneD::Zero(oh, ow);
    for (Eigen::Index k = 0; k < n; ++k)
        out += g(k) * tmp.middleRows(k, oh);
    return out;
}

} // namespace

double ssim(const PlaneD& a, const PlaneD& b, const SsimParams& params)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError("ssim: dimension mismatch");
    if (a.rows() < params.window || a.cols() < params.window)
        throw ValidationError("ssim: image smaller than the " + std::to_string(params.window)
                              + "x" + std::to_string(params.window) + " window");

    const Eigen::ArrayXd g = gaussian_window(params.window, params.sigma);
    const double c1 = (params.k1 * params.peak) * (params.k1 * params.peak);
    const double c2 = (params.k2 * params.peak) * (params.k2 * params.peak);

    const PlaneD mu_a = filter_valid(a, g);
    const PlaneD mu_b = filter_valid(b, g);
    const PlaneD var_a  = filter_valid(a.square(), g) - mu_a.square();
    const PlaneD var_b  = filter_valid(b.square(), g) - mu_b.square();
    const PlaneD cov_ab = filter_valid(a * b, g) - mu_a * mu_b;

    const PlaneD map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov_ab + c2))
                       / ((mu_a.square() + mu_b.square() + c1) * (var_a + var_b + c2));
    return map.mean();
}

double ssim(const std::vector<PlaneD>& a, const std::vector<PlaneD>& b, const SsimParams& params)
{
    if (a.size() != b.size() || a.empty())
        throw ValidationError("ssim: channel count mismatch");
    double sum = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c)
        sum += ssim(a[c], b[c], params);
    return sum / double(a.size());
}

double log_psnr(const HdrImage& a, const HdrImage& b)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw ValidationError("log_psnr: dimension mismatch");
    const Eigen::ArrayX3d la = (1.0 + a.pixels().cast<double>()).log() / std::log(2.0);
    const Eigen::ArrayX3d lb = (1.0 + b.pixels().cast<double>()).log() / std::log(2.0);
    const double mse         = (la - lb).square().mean();
    if (mse == 0.0)
        return psnr_identical;
    const double peak = std::log2(1.0 + double(b.pixels().maxCoeff()));
    if (!(peak > 0.0))
        throw ValidationError("log_psnr: ground truth is black");
    return 10.0 * std::log10(peak * peak / mse);
}

std::string_view to_string(ScoreMode m) noexcept
{
    return m == ScoreMode::ldr ? "ldr" : "hdr";
}

ScoreMode parse_score_mode(std::string_view name)
{
    if (name == "ldr")
        return ScoreMode::ldr;
    if (name == "hdr")
        return ScoreMode::hdr;
    throw ValidationError("unknown score mode '" + std::string(name) + "' (expected ldr|hdr)");
}

ImageScore score_ldr(const LdrImage& pred, const LdrImage& gt, double peak)
{
    if (pred.width != gt.width || pred.height != gt.height || pred.channels != gt.channels)
        throw ValidationError("prediction and ground truth differ in shape");
    const auto pa = to_unit_planes(pred), pb = to_unit_planes(gt);
    ImageScore s;
    double se = 0.0;
    for (std::size_t c = 0; c < pa.size(); ++c)
        se += (pa[c] - pb[c]).square().sum();
    const double mse = se / double(pred.pixels.size());
    s.psnr_db        = mse == 0.0 ? psnr_identical : 10.0 * std::log10(peak * peak / mse);
    s.ssim           = ssim(pa, pb, SsimParams{ .peak = peak });
    return s;
}

ImageScore score_hdr(const HdrImage& pred, const HdrImage& gt, const TonemapParams& tonemap,
                     double peak)
{
    if (pred.width() != gt.width() || pred.height() != gt.height())
        throw ValidationError("prediction and ground truth differ in shape");
    TonemapParams log_map = tonemap;
    log_map.op           = ToneOperator::log;
    const RgbPixels<double> ta = tonemap_log(pred.pixels().cast<double>(), log_map);
    const RgbPixels<double> tb = tonemap_log(gt.pixels().cast<double>(), log_map);

    std::vector<PlaneD> pa, pb;
    for (int c = 0; c < 3; ++c) {
        PlaneD x(pred.height(), pred.width()), y(pred.height(), pred.width());
        x.reshaped<Eigen::RowMajor>() = ta.col(c);
        y.reshaped<Eigen::RowMajor>() = tb.col(c);
        pa.push_back(std::move(x));
        pb.push_back(std::move(y));
    }
    ImageScore s;
    s.psnr_db     = psnr(ta, tb, peak);
    s.ssim        = ssim(pa, pb, SsimParams{ .peak = peak });
    s.log_psnr_db = log_psnr(pred, gt);
    return s;
}

void MetricReport::finalize()
{
    std::sort(per_image.begin(), per_image.end(),
              [](const ImageScore& a, const ImageScore& b) { return a.id < b.id; });
    std::sort(missing.begin(), missing.end());
    count      = per_image.size();
    aggregates = {};
    if (count == 0)
        return;

    std::set<std::string> external_cols;
    bool all_log = true;
    for (const auto& s : per_image) {
        aggregates.psnr_db += s.psnr_db;
        aggregates.ssim += s.ssim;
        aggregates.psnr_inf_count += std::isinf(s.psnr_db) ? 1 : 0;
        all_log = all_log && s.log_psnr_db.has_value();
        for (const auto& [k, v] : s.external)
            external_cols.insert(k);
    }
    const double n = double(count);
    aggregates.psnr_db /= n;
    aggregates.ssim /= n;
    if (all_log) {
        double sum = 0.0;
        for (const auto& s : per_image)
            sum += *s.log_psnr_db;
        aggregates.log_psnr_db = sum / n;
    }
    for (const auto& col : external_cols) {
        double sum = 0.0;
        std::size_t k = 0;
        for (const auto& s : per_image)
            if (auto it = s.external.find(col); it != s.external.end()) {
                sum += it->second;
                ++k;
            }
        aggregates.external[col] = sum / double(k);
    }
}

MetricReport evaluate_set(const std::vector<EvalItem>& items, const EvalOptions& options)
{
    MetricReport report;
    std::vector<std::optional<ImageScore>> scores(items.size());
    std::mutex missing_lock;

    parallel_for(std::ptrdiff_t(items.size()), options.threads,
                 [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
        for (std::ptrdiff_t i = begin; i < end; ++i) {
            const EvalItem& item = items[std::size_t(i)];
            if (!std::filesystem::exists(item.prediction)
                || !std::filesystem::exists(item.ground_truth)) {
                std::lock_guard lock(missing_lock);
                report.missing.push_back(item.id);
                continue;
            }
            ImageScore s = options.mode == ScoreMode::ldr
                               ? score_ldr(read_ldr(item.prediction), read_ldr(item.ground_truth),
                                           options.peak)
                               : score_hdr(read_radiance_hdr(item.prediction),
                                           read_radiance_hdr(item.ground_truth), options.tonemap,
                                           options.peak);
            s.id = item.id;
            scores[std::size_t(i)] = std::move(s);
        }
    });

    for (auto& s : scores)
        if (s)
            report.per_image.push_back(std::move(*s));
    report.finalize();
    return report;
}

void ingest_external_scores(MetricReport& report, const std::filesystem::path& csv,
                            const std::string& column)
{
    std::ifstream in(csv);
    if (!in)
        throw IoError("cannot open '" + csv.string() + "'");
    std::map<std::string, double> values;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ValidationError("malformed score line '" + line + "'");
        const std::string id = line.substr(0, comma);
        double v             = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(line.substr(comma + 1), &used);
        } catch (const std::exception&) {
            if (first) { // header row
                first = false;
                continue;
            }
            throw ValidationError("malformed score value in '" + line + "'");
        }
        first      = false;
        values[id] = v;
    }
    for (auto& s : report.per_image)
        if (auto it = values.find(s.id); it != values.end())
            s.external[column] = it->second;
    report.finalize();
}

std::string format_score(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string report_csv(const MetricReport& report)
{
    std::ostringstream out;
    out << "id,psnr_db,ssim,log_psnr_db";
    for (const auto& [col, mean] : report.aggregates.external)
        out << ',' << col;
    out << '\n';
    for (const auto& s : report.per_image) {
        out << s.id << ',' << format_score(s.psnr_db) << ',' << format_score(s.ssim) << ',';
        if (s.log_psnr_db)
            out << format_score(*s.log_psnr_db);
        for (const auto& [col, mean] : report.aggregates.external) {
            out << ',';
            if (auto it = s.external.find(col); it != s.external.end())
                out << format_score(it->second);
        }
        out << '\n';
    }
    return out.str();
}

namespace {

nlohmann::json score_value(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

} // namespace

std::string report_json(const MetricReport& report)
{
    nlohmann::ordered_json j;
    j["count"] = report.count;
    auto& agg  = j["aggregates"];
    agg["psnr_db"]        = score_value(report.aggregates.psnr_db);
    agg["ssim"]           = report.aggregates.ssim;
    agg["log_psnr_db"]    = report.aggregates.log_psnr_db ? score_value(*report.aggregates.log_psnr_db)
                                                          : nlohmann::json(nullptr);
    agg["psnr_inf_count"] = report.aggregates.psnr_inf_count;
    for (const auto& [col, mean] : report.aggregates.external)
        agg[col] = mean;
    j["missing"]   = report.missing;
    j["per_image"] = nlohmann::json::array();
    for (const auto& s : report.per_image) {
        nlohmann::ordered_json e;
        e["id"]          = s.id;
        e["psnr_db"]     = score_value(s.psnr_db);
        e["ssim"]        = s.ssim;
        e["log_psnr_db"] = s.log_psnr_db ? score_value(*s.log_psnr_db) : nlohmann::json(nullptr);
        for (const auto& [col, v] : s.external)
            e[col] = v;
        j["per_image"].push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

} // namespace spadsim
