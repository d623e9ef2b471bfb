// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

// spadsim command line: dataset, simulate, export, score, inspect.

#include "spadsim/hdr_io.hpp"
#include "spadsim/parallel.hpp"
#include "spadsim/pipeline.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace spadsim;

namespace {

enum Exit { ok = 0, usage = 1, io = 2, invalid = 3 };

/// Flags shared by `dataset` and `simulate`; unset ones leave the config alone.
struct CommonFlags {
    std::string config;
    std::vector<std::string> resolutions;
    std::vector<int> frames;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> sampler;
    std::optional<int> threads;
    std::vector<std::string> settings;

    void add_to(CLI::App& app)
    {
        app.add_option("--config", config, "INI config file");
        app.add_option("--resolution", resolutions, "output size WxH (repeatable)");
        app.add_option("--frames", frames, "frames averaged per sample (repeatable)")
            ->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "base random seed");
        app.add_option("--sampler", sampler, "exact|gaussian");
        app.add_option("--threads", threads, "worker threads (0 = all)");
        app.add_option("--set", settings, "override a config key, section.key=value (repeatable)");
    }

    PipelineConfig build() const
    {
        PipelineConfig c;
        if (!config.empty())
            apply_config_file(c, config);
        for (const auto& s : settings) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ValidationError("--set expects section.key=value, got '" + s + "'");
            apply_config_value(c, s.substr(0, eq), s.substr(eq + 1));
        }
        if (!resolutions.empty()) {
            c.resolutions.clear();
            for (const auto& r : resolutions)
                c.resolutions.push_back(Resolution::parse(r));
        }
        if (!frames.empty()) {
            c.frame_counts = frames;
            c.spad.frames  = frames.front();
        }
        if (seed)
            c.spad.seed = *seed;
        if (sampler)
            c.spad.sampler = parse_sampler(*sampler);
        if (threads)
            c.threads = *threads;
        // SPADSIM_THREADS caps the pool
        if (std::getenv("SPADSIM_THREADS"))
            c.threads = c.threads > 0 ? std::min(c.threads, default_workers()) : default_workers();
        return c;
    }
};

int run_dataset(const CommonFlags& flags, const std::string& input, const std::string& out)
{
    PipelineConfig c = flags.build();
    if (!input.empty())
        c.input_dir = input;
    if (!out.empty())
        c.output_dir = out;
    if (c.input_dir.empty() || c.output_dir.empty())
        throw ValidationError("dataset needs an input directory and --out");

    const DatasetManifest m = generate_dataset(c, &std::cerr);
    std::size_t test = 0;
    for (const auto& e : m.entries)
        test += e.split == "test";
    std::cout << "samples: " << m.entries.size() << " (train " << m.entries.size() - test
              << ", test " << test << ")\n"
              << "skipped: " << m.skipped.size() << "\n"
              << "manifest: " << (c.output_dir / manifest_file).string() << "\n";
    return ok;
}

int run_simulate(const CommonFlags& flags, const std::string& input, const std::string& out)
{
    PipelineConfig c = flags.build();
    if (flags.resolutions.size() > 1 || flags.frames.size() > 1)
        throw ValidationError("simulate takes at most one --resolution and one --frames");
    std::optional<Resolution> res;
    if (!flags.resolutions.empty())
        res = c.resolutions.front();
    const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);

    const SingleResult r = simulate_single(input, dir, c, res);
    const ManifestEntry& e = r.entry;
    std::printf("%s: %dx%d K=%d T=%.6g s scale=%.6g median_flux=%.6g saturated=%zu (%.4f%%)\n",
                e.id.c_str(), e.resolution.width, e.resolution.height, e.frames,
                e.exposure_time, e.flux_scale, e.median_flux, r.saturated,
                100.0 * e.saturated_fraction);
    for (const auto& f : e.files())
        std::cout << (dir / f).string() << "\n";
    return ok;
}

int run_export(const std::string& manifest_dir, const std::string& stage, const std::string& out)
{
    const ExportStage s     = parse_export_stage(stage);
    const DatasetManifest m = read_manifest(manifest_dir);
    if (!m.complete)
        std::cerr << "warning: manifest in " << manifest_dir << " is flagged incomplete\n";
    const std::size_t n = export_for_model(m, s, out);
    std::cout << n << " pairs written to " << (fs::path(out) / std::string(to_string(s))).string()
              << "\n";
    return ok;
}

struct ScoreFlags {
    std::string pred;
    std::string manifest;
    std::string mode = "ldr";
    double peak      = 1.0;
    std::string split;
    std::string csv;
    std::string json;
    std::vector<std::string> external;
    std::optional<int> threads;
};

int run_score(const ScoreFlags& f)
{
    EvalOptions opt;
    opt.mode    = parse_score_mode(f.mode);
    opt.peak    = f.peak;
    opt.threads = f.threads.value_or(0);
    const DatasetManifest m = read_manifest(f.manifest);
    MetricReport report     = score_predictions(f.pred, m, opt, f.split);
    for (const auto& ext : f.external) {
        const auto eq = ext.find('=');
        if (eq == std::string::npos)
            throw ValidationError("--external expects column=file.csv, got '" + ext + "'");
        ingest_external_scores(report, ext.substr(eq + 1), ext.substr(0, eq));
    }

    const std::string csv = report_csv(report);
    if (!f.csv.empty())
        write_file(f.csv, std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
    else
        std::cout << csv;
    if (!f.json.empty()) {
        const std::string j = report_json(report);
        write_file(f.json, std::span(reinterpret_cast<const std::uint8_t*>(j.data()), j.size()));
    }

    const auto& a = report.aggregates;
    std::cerr << "scored " << report.count << " image(s): psnr " << format_score(a.psnr_db)
              << " dB, ssim " << format_score(a.ssim);
    if (a.log_psnr_db)
        std::cerr << ", log_psnr " << format_score(*a.log_psnr_db) << " dB";
    std::cerr << "\n";
    for (const auto& id : report.missing)
        std::cerr << "missing: " << id << "\n";
    return report.complete() ? ok : invalid;
}

int run_inspect(const std::string& path)
{
    const Bytes bytes         = read_file(path);
    const RadianceHeader head = read_radiance_header(bytes);
    const HdrImage img        = read_radiance_hdr(bytes);
    std::cout << "file: " << path << "\n";
    for (const auto& line : head.lines)
        std::cout << "header: " << line << "\n";
    std::cout << "size: " << img.width() << "x" << img.height() << "\n";

    const auto px = img.pixels().cast<double>();
    for (int c = 0; c < 3; ++c)
        std::printf("channel %c: min %.6g max %.6g mean %.6g\n", "rgb"[c], px.col(c).minCoeff(),
                    px.col(c).maxCoeff(), px.col(c).mean());

    const PlaneD y = luminance(img);
    std::size_t black = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y.data()[i];
        if (v > 0.0) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        } else {
            ++black;
        }
    }
    std::printf("luminance: mean %.6g max %.6g\n", y.mean(), y.maxCoeff());
    std::printf("black pixels: %zu\n", black);
    if (hi > 0.0) {
        std::printf("positive median: %.6g\n", positive_median(y));
        std::printf("dynamic range: %.2f decades\n", std::log10(hi / lo));
    }
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{ "Single-photon camera simulator and dataset toolkit" };
    app.require_subcommand(1);

    CommonFlags data_flags, sim_flags;
    std::string data_in, data_out, sim_in, sim_out;
    auto* dataset = app.add_subcommand("dataset", "generate a paired dataset from a directory of .hdr files");
    data_flags.add_to(*dataset);
    dataset->add_option("input", data_in, "directory of .hdr sources");
    dataset->add_option("--out", data_out, "output directory");

    auto* simulate = app.add_subcommand("simulate", "simulate one .hdr file");
    sim_flags.add_to(*simulate);
    simulate->add_option("input", sim_in, "source .hdr file")->required();
    simulate->add_option("--out", sim_out, "output directory (default .)");

    std::string exp_manifest, exp_stage, exp_out;
    auto* exporter = app.add_subcommand("export", "copy pairs into a model training layout");
    exporter->add_option("manifest", exp_manifest, "dataset directory holding manifest.jsonl")->required();
    exporter->add_option("--stage", exp_stage, "colorization|hdr_reconstruction|single_stage")->required();
    exporter->add_option("--out", exp_out, "output directory")->required();

    ScoreFlags score_flags;
    auto* score = app.add_subcommand("score", "score predictions against a dataset");
    score->add_option("predictions", score_flags.pred, "directory of <id>.png or <id>.hdr")->required();
    score->add_option("--manifest", score_flags.manifest, "dataset directory")->required();
    score->add_option("--mode", score_flags.mode, "ldr|hdr");
    score->add_option("--peak", score_flags.peak, "PSNR peak on the normalized scale");
    score->add_option("--split", score_flags.split, "only score train or test samples");
    score->add_option("--csv", score_flags.csv, "write the CSV report here instead of stdout");
    score->add_option("--json", score_flags.json, "write the JSON report here");
    score->add_option("--external", score_flags.external, "merge column=scores.csv (repeatable)");
    score->add_option("--threads", score_flags.threads, "worker threads");

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "print the header and statistics of an .hdr file");
    inspect->add_option("file", inspect_path, ".hdr file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*dataset)
            return run_dataset(data_flags, data_in, data_out);
        if (*simulate)
            return run_simulate(sim_flags, sim_in, sim_out);
        if (*exporter)
            return run_export(exp_manifest, exp_stage, exp_out);
        if (*score)
            return run_score(score_flags);
        if (*inspect)
            return run_inspect(inspect_path);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io;
    }
    return usage;
}
