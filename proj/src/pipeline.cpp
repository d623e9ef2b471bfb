// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/pipeline.hpp"
#include "spadsim/hdr_io.hpp"
#include "spadsim/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

namespace spadsim {

namespace fs = std::filesystem;
using json   = nlohmann::ordered_json;

// --- manifest ---------------------------------------------------------------

std::string to_jsonl(const ManifestEntry& e)
{
    json j;
    j["id"]                 = e.id;
    j["source"]             = e.source;
    j["width"]              = e.resolution.width;
    j["height"]             = e.resolution.height;
    j["frames"]             = e.frames;
    j["exposure_time_s"]    = e.exposure_time;
    j["flux_scale"]         = e.flux_scale;
    j["median_flux"]        = e.median_flux;
    j["seed"]               = e.seed;
    j["saturated_fraction"] = e.saturated_fraction;
    j["mono_tonemap_input"] = "inverted_flux";
    j["files"]              = { { "mono_png", e.mono_png },
                                { "mono_hdr", e.mono_hdr },
                                { "gt_ldr_png", e.gt_ldr_png },
                                { "gt_hdr", e.gt_hdr } };
    j["split"]              = e.split;
    return j.dump();
}

ManifestEntry entry_from_json(std::string_view line)
{
    try {
        const json j = json::parse(line);
        ManifestEntry e;
        e.id                 = j.at("id").get<std::string>();
        e.source             = j.at("source").get<std::string>();
        e.resolution         = { j.at("width").get<int>(), j.at("height").get<int>() };
        e.frames             = j.at("frames").get<int>();
        e.exposure_time      = j.at("exposure_time_s").get<double>();
        e.flux_scale         = j.at("flux_scale").get<double>();
        e.median_flux        = j.at("median_flux").get<double>();
        e.seed               = j.at("seed").get<std::uint64_t>();
        e.saturated_fraction = j.at("saturated_fraction").get<double>();
        const auto& f        = j.at("files");
        e.mono_png           = f.at("mono_png").get<std::string>();
        e.mono_hdr           = f.at("mono_hdr").get<std::string>();
        e.gt_ldr_png         = f.at("gt_ldr_png").get<std::string>();
        e.gt_hdr             = f.at("gt_hdr").get<std::string>();
        e.split              = j.at("split").get<std::string>();
        return e;
    } catch (const json::exception& ex) {
        throw ValidationError(std::string("malformed manifest record: ") + ex.what());
    }
}

DatasetManifest read_manifest(const fs::path& dir)
{
    DatasetManifest m;
    m.root = dir;
    std::ifstream in(dir / manifest_file);
    if (!in)
        throw IoError("cannot open manifest in '" + dir.string() + "'");
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            m.entries.push_back(entry_from_json(line));

    if (std::ifstream run{ dir / run_file }) {
        try {
            const json j = json::parse(run);
            m.complete   = j.value("complete", false);
            for (const auto& s : j.value("skipped", json::array()))
                m.skipped.push_back({ s.at("source").get<std::string>(),
                                      s.at("reason").get<std::string>() });
        } catch (const json::exception& ex) {
            throw ValidationError(std::string("malformed run.json: ") + ex.what());
        }
    }
    return m;
}

// --- split and seeding ------------------------------------------------------

std::uint64_t split_hash(std::string_view source_name)
{
    return mix64(fnv1a64(source_name.data(), source_name.size()));
}

std::map<std::string, std::string> assign_splits(const std::vector<std::string>& sources,
                                                 const SplitConfig& split)
{
    std::map<std::string, std::string> out;
    if (split.test_count) {
        std::vector<std::pair<std::uint64_t, std::string>> keyed;
        for (const auto& s : sources)
            keyed.emplace_back(split_hash(s), s);
        std::sort(keyed.begin(), keyed.end());
        for (std::size_t i = 0; i < keyed.size(); ++i)
            out[keyed[i].second] = i < *split.test_count ? "test" : "train";
        return out;
    }
    // 2^64 * fraction, compared against the hash
    const long double threshold = std::ldexp(static_cast<long double>(split.test_fraction), 64);
    for (const auto& s : sources)
        out[s] = static_cast<long double>(split_hash(s)) < threshold ? "test" : "train";
    return out;
}

std::uint64_t sample_seed(std::uint64_t base_seed, std::string_view source, Resolution res)
{
    std::uint64_t h = mix64(base_seed ^ fnv1a64(source.data(), source.size()));
    h               = mix64(h ^ (std::uint64_t(std::uint32_t(res.width)) << 32
                                 | std::uint32_t(res.height)));
    return h;
}

// --- per-image pipeline -----------------------------------------------------

namespace {

struct MonoContext {
    ExposurePlan plan;
    SpadConfig spad;
    FluxField flux;
};

MonoContext prepare_mono(const HdrImage& color, SpadConfig spad, const ExposureTargets& targets)
{
    const PlaneD gray  = luminance(color);
    ExposurePlan plan  = plan_exposure(gray, spad, targets);
    spad.exposure_time = plan.exposure_time;
    return { plan, spad, flux_from_image(gray, plan.flux_scale) };
}

MonoSample finish_mono(const MonoContext& ctx, std::span<const CountFrame> frames,
                       const TonemapParams& tone)
{
    MonoSample out;
    out.plan                 = ctx.plan;
    const CountFrame avg     = average_frames(frames);
    const FluxEstimate est   = invert_frame(avg, ctx.spad);
    const PlaneD radiance    = est.flux.phi / ctx.plan.flux_scale;
    out.saturated            = est.saturated;
    out.saturated_fraction   = double(est.saturated) / double(radiance.size());
    out.mono_hdr             = HdrImage::from_mono(radiance.cast<float>());
    out.mono_png             = quantize8(tonemap(radiance, tone));
    return out;
}

std::string lower_ext(const fs::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return ext;
}

std::string sample_id(const std::string& stem, Resolution res, int k)
{
    return stem + "_" + res.label() + "_k" + std::to_string(k);
}

void write_text(const fs::path& path, const std::string& text)
{
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

bool all_files_exist(const fs::path& root, const ManifestEntry& e)
{
    for (const auto& f : e.files())
        if (!fs::exists(root / f))
            return false;
    return true;
}

} // namespace

MonoSample simulate_mono(const HdrImage& color, const SpadConfig& spad,
                         const ExposureTargets& targets, const TonemapParams& tonemap, int threads)
{
    const MonoContext ctx = prepare_mono(color, spad, targets);
    std::vector<CountFrame> frames;
    for (int f = 0; f < spad.frames; ++f)
        frames.push_back(simulate_frame(ctx.flux, ctx.spad, std::uint64_t(f), threads));
    return finish_mono(ctx, frames, tonemap);
}

LdrImage color_ldr_ground_truth(const HdrImage& color, const TonemapParams& tone)
{
    const RgbPixels<double> mapped = tonemap(color.pixels().cast<double>(), tone);
    return quantize8(mapped, color.width(), color.height());
}

// --- dataset generation -----------------------------------------------------

namespace {

struct SourceResult {
    std::vector<ManifestEntry> entries;
    std::vector<SkippedSource> skipped;
};

/// Writes results strictly in source order as they complete.
class OrderedSink {
public:
    OrderedSink(const fs::path& path, std::size_t n) : pending_(n), out_(path, std::ios::trunc)
    {
        if (!out_)
            throw IoError("cannot create '" + path.string() + "'");
    }

    void submit(std::size_t index, SourceResult result)
    {
        std::lock_guard lock(m_);
        pending_[index] = std::move(result);
        while (next_ < pending_.size() && pending_[next_]) {
            for (const auto& e : pending_[next_]->entries)
                out_ << to_jsonl(e) << '\n';
            out_.flush();
            if (!out_)
                throw IoError("manifest write failed");
            ++next_;
        }
    }

    std::vector<std::optional<SourceResult>>& results() { return pending_; }

private:
    std::mutex m_;
    std::vector<std::optional<SourceResult>> pending_;
    std::size_t next_ = 0;
    std::ofstream out_;
};

void write_run_file(const fs::path& dir, const PipelineConfig& config, bool complete,
                    const std::vector<SkippedSource>& skipped, std::size_t entries)
{
    json j;
    j["complete"]    = complete;
    j["fingerprint"] = config.fingerprint();
    j["entries"]     = entries;
    j["skipped"]     = json::array();
    for (const auto& s : skipped)
        j["skipped"].push_back({ { "source", s.source }, { "reason", s.reason } });
    write_text(dir / run_file, j.dump(2) + "\n");
}

SourceResult process_source(const fs::path& source_path, const PipelineConfig& config,
                            const std::string& split, const fs::path& root,
                            const std::map<std::string, ManifestEntry>& reusable, int threads,
                            std::ostream* log, std::mutex& log_lock)
{
    SourceResult result;
    const std::string source = source_path.filename().string();
    const std::string stem   = source_path.stem().string();
    auto skip                = [&](std::string reason) {
        if (log) {
            std::lock_guard lock(log_lock);
            *log << "warning: skipping " << source << ": " << reason << "\n";
        }
        result.skipped.push_back({ source, std::move(reason) });
    };

    // fully reusable source: nothing to read
    std::vector<std::string> ids;
    for (const auto& res : config.resolutions)
        for (int k : config.frame_counts)
            ids.push_back(sample_id(stem, res, k));
    if (std::all_of(ids.begin(), ids.end(), [&](const auto& id) { return reusable.count(id); })) {
        for (const auto& id : ids) {
            ManifestEntry e = reusable.at(id);
            e.split         = split;
            result.entries.push_back(std::move(e));
        }
        return result;
    }

    HdrImage original;
    try {
        original = read_radiance_hdr(source_path);
    } catch (const std::exception& ex) {
        skip(std::string("unreadable: ") + ex.what());
        return result;
    }

    const int max_k = *std::max_element(config.frame_counts.begin(), config.frame_counts.end());
    for (const auto& res : config.resolutions) {
        if (res.width > original.width() || res.height > original.height()) {
            skip("smaller than " + res.label());
            continue;
        }
        const HdrImage color = downsample(original, res.width, res.height);
        SpadConfig spad      = config.spad;
        spad.seed            = sample_seed(config.spad.seed, source, res);

        std::optional<MonoContext> ctx;
        try {
            ctx = prepare_mono(color, spad, config.exposure);
        } catch (const ValidationError& ex) {
            skip(std::string("all-black: ") + ex.what());
            continue;
        }

        const std::string dir   = res.label();
        const std::string gt_ldr = dir + "/gt_ldr/" + stem + ".png";
        const std::string gt_hdr = dir + "/gt_hdr/" + stem + ".hdr";
        write_radiance_hdr(root / gt_hdr, color);
        write_ldr(root / gt_ldr, color_ldr_ground_truth(color, config.tonemap));

        std::vector<CountFrame> frames;
        for (int k : config.frame_counts) {
            ManifestEntry e;
            e.id = sample_id(stem, res, k);
            if (auto it = reusable.find(e.id); it != reusable.end()) {
                e       = it->second;
                e.split = split;
                result.entries.push_back(std::move(e));
                continue;
            }
            while (int(frames.size()) < std::min(k, max_k))
                frames.push_back(
                    simulate_frame(ctx->flux, ctx->spad, std::uint64_t(frames.size()), threads));
            const MonoSample mono = finish_mono(*ctx, std::span(frames).first(std::size_t(k)),
                                                config.tonemap);

            e.source             = source;
            e.resolution         = res;
            e.frames             = k;
            e.exposure_time      = mono.plan.exposure_time;
            e.flux_scale         = mono.plan.flux_scale;
            e.median_flux        = mono.plan.median_flux;
            e.seed               = spad.seed;
            e.saturated_fraction = mono.saturated_fraction;
            e.mono_png           = dir + "/mono_png/" + e.id + ".png";
            e.mono_hdr           = dir + "/mono_hdr/" + e.id + ".hdr";
            e.gt_ldr_png         = gt_ldr;
            e.gt_hdr             = gt_hdr;
            e.split              = split;
            write_ldr(root / e.mono_png, mono.mono_png);
            write_radiance_hdr(root / e.mono_hdr, mono.mono_hdr);
            result.entries.push_back(std::move(e));
        }
    }
    return result;
}

} // namespace

DatasetManifest generate_dataset(const PipelineConfig& config, std::ostream* log)
{
    config.validate();
    if (!fs::is_directory(config.input_dir))
        throw IoError("input directory '" + config.input_dir.string() + "' does not exist");

    std::vector<fs::path> sources;
    for (const auto& de : fs::directory_iterator(config.input_dir))
        if (de.is_regular_file() && lower_ext(de.path()) == ".hdr")
            sources.push_back(de.path());
    std::sort(sources.begin(), sources.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    if (sources.empty())
        throw IoError("no .hdr files in '" + config.input_dir.string() + "'");

    std::vector<std::string> names;
    std::set<std::string> stems;
    for (const auto& s : sources) {
        names.push_back(s.filename().string());
        if (!stems.insert(s.stem().string()).second)
            throw ValidationError("duplicate source stem '" + s.stem().string() + "'");
    }
    const auto splits = assign_splits(names, config.split);

    const fs::path root = config.output_dir;
    fs::create_directories(root);

    // resume: reuse entries of an earlier run with identical settings
    std::map<std::string, ManifestEntry> reusable;
    if (fs::exists(root / manifest_file) && fs::exists(root / run_file)) {
        try {
            std::ifstream run(root / run_file);
            const json j = json::parse(run);
            if (j.value("fingerprint", std::string()) == config.fingerprint()) {
                for (auto& e : read_manifest(root).entries)
                    if (all_files_exist(root, e))
                        reusable.emplace(e.id, std::move(e));
            }
        } catch (const std::exception&) {
            reusable.clear();
        }
    }

    write_run_file(root, config, false, {}, 0);
    OrderedSink sink(root / manifest_file, sources.size());

    const int workers = std::min<int>(config.threads > 0 ? config.threads : default_workers(),
                                      int(sources.size()));
    const int inner   = workers > 1 ? 1 : (config.threads > 0 ? config.threads : 0);
    std::atomic<std::size_t> next{ 0 };
    std::atomic<bool> failed{ false };
    std::exception_ptr error;
    std::mutex error_lock, log_lock;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= sources.size() || failed)
                return;
            try {
                const std::string& name = names[i];
                sink.submit(i, process_source(sources[i], config, splits.at(name), root, reusable,
                                              inner, log, log_lock));
            } catch (...) {
                std::lock_guard lock(error_lock);
                if (!error)
                    error = std::current_exception();
                failed = true;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < workers; ++t)
            pool.emplace_back(work);
        work();
    }
    if (error)
        std::rethrow_exception(error); // run.json stays flagged incomplete

    DatasetManifest manifest;
    manifest.root = root;
    for (auto& r : sink.results()) {
        for (auto& e : r->entries)
            manifest.entries.push_back(std::move(e));
        for (auto& s : r->skipped)
            manifest.skipped.push_back(std::move(s));
    }
    manifest.complete = true;
    write_run_file(root, config, true, manifest.skipped, manifest.entries.size());
    return manifest;
}

SingleResult simulate_single(const fs::path& input, const fs::path& output_dir,
                             const PipelineConfig& config, std::optional<Resolution> resolution)
{
    config.spad.validate();
    config.tonemap.validate();
    if (!fs::exists(input))
        throw IoError("input '" + input.string() + "' does not exist");
    HdrImage color = read_radiance_hdr(input);
    Resolution res{ color.width(), color.height() };
    if (resolution) {
        res   = *resolution;
        color = downsample(color, res.width, res.height);
    }

    const std::string source = input.filename().string();
    SpadConfig spad          = config.spad;
    spad.seed                = sample_seed(config.spad.seed, source, res);
    const MonoSample mono    = simulate_mono(color, spad, config.exposure, config.tonemap,
                                             config.threads);

    SingleResult out;
    ManifestEntry& e     = out.entry;
    e.id                 = sample_id(input.stem().string(), res, spad.frames);
    e.source             = source;
    e.resolution         = res;
    e.frames             = spad.frames;
    e.exposure_time      = mono.plan.exposure_time;
    e.flux_scale         = mono.plan.flux_scale;
    e.median_flux        = mono.plan.median_flux;
    e.seed               = spad.seed;
    e.saturated_fraction = mono.saturated_fraction;
    e.mono_png           = e.id + "_mono.png";
    e.mono_hdr           = e.id + "_mono.hdr";
    e.gt_ldr_png         = e.id + "_gt.png";
    e.gt_hdr             = e.id + "_gt.hdr";
    out.saturated        = mono.saturated;

    write_ldr(output_dir / e.mono_png, mono.mono_png);
    write_radiance_hdr(output_dir / e.mono_hdr, mono.mono_hdr);
    write_ldr(output_dir / e.gt_ldr_png, color_ldr_ground_truth(color, config.tonemap));
    write_radiance_hdr(output_dir / e.gt_hdr, color);
    return out;
}

// --- export and scoring -----------------------------------------------------

std::string_view to_string(ExportStage s) noexcept
{
    switch (s) {
    case ExportStage::colorization: return "colorization";
    case ExportStage::hdr_reconstruction: return "hdr_reconstruction";
    case ExportStage::single_stage: return "single_stage";
    }
    return "";
}

ExportStage parse_export_stage(std::string_view name)
{
    for (auto s : { ExportStage::colorization, ExportStage::hdr_reconstruction,
                    ExportStage::single_stage })
        if (name == to_string(s))
            return s;
    throw ValidationError("unknown stage '" + std::string(name)
                          + "' (valid stages: colorization, hdr_reconstruction, single_stage)");
}

std::size_t export_for_model(const DatasetManifest& manifest, ExportStage stage, const fs::path& out)
{
    std::size_t n = 0;
    for (const auto& e : manifest.entries) {
        std::string input, target;
        switch (stage) {
        case ExportStage::colorization: input = e.mono_png, target = e.gt_ldr_png; break;
        case ExportStage::hdr_reconstruction: input = e.gt_ldr_png, target = e.gt_hdr; break;
        case ExportStage::single_stage: input = e.mono_png, target = e.gt_hdr; break;
        }
        const fs::path src_in = manifest.resolve(input), src_tg = manifest.resolve(target);
        for (const auto& p : { src_in, src_tg })
            if (!fs::exists(p))
                throw ValidationError("manifest entry " + e.id + " references missing file '"
                                      + p.string() + "'");
        const fs::path base = out / std::string(to_string(stage)) / e.split;
        const fs::path dst_in = base / "input" / (e.id + src_in.extension().string());
        const fs::path dst_tg = base / "target" / (e.id + src_tg.extension().string());
        fs::create_directories(dst_in.parent_path());
        fs::create_directories(dst_tg.parent_path());
        fs::copy_file(src_in, dst_in, fs::copy_options::overwrite_existing);
        fs::copy_file(src_tg, dst_tg, fs::copy_options::overwrite_existing);
        ++n;
    }
    return n;
}

MetricReport score_predictions(const fs::path& pred_dir, const DatasetManifest& manifest,
                               const EvalOptions& options, std::string_view split)
{
    std::vector<EvalItem> items;
    const std::string ext = options.mode == ScoreMode::ldr ? ".png" : ".hdr";
    for (const auto& e : manifest.entries) {
        if (!split.empty() && e.split != split)
            continue;
        items.push_back({ e.id, pred_dir / (e.id + ext),
                          manifest.resolve(options.mode == ScoreMode::ldr ? e.gt_ldr_png
                                                                          : e.gt_hdr) });
    }
    return evaluate_set(items, options);
}

} // namespace spadsim
