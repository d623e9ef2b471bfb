// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"
#include "spadsim/hdr_io.hpp"
#include "spadsim/pipeline.hpp"

#include <boost/random/normal_distribution.hpp>
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

using namespace spadsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("spadsim_test_pipeline_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path make_sources(const std::string& name, int n, int w = 96, int h = 48)
{
    const fs::path dir = scratch_dir(name) / "in";
    for (int i = 0; i < n; ++i) {
        char file[32];
        std::snprintf(file, sizeof file, "scene%02d.hdr", i);
        write_radiance_hdr(dir / file, oracle::synthetic_scene(w, h, std::uint64_t(i)));
    }
    return dir;
}

PipelineConfig small_config(const fs::path& in, const fs::path& out)
{
    PipelineConfig c;
    c.input_dir   = in;
    c.output_dir  = out;
    c.resolutions = { { 32, 16 }, { 64, 32 } };
    c.frame_counts = { 1, 4 };
    c.spad.seed   = 11;
    return c;
}

std::map<std::string, Bytes> tree_bytes(const fs::path& root)
{
    std::map<std::string, Bytes> out;
    for (const auto& de : fs::recursive_directory_iterator(root))
        if (de.is_regular_file())
            out[fs::relative(de.path(), root).generic_string()] = read_file(de.path());
    return out;
}

double plane_variance(const HdrImage& img)
{
    return oracle::moments(img.pixels().col(0).cast<double>()).variance;
}

} // namespace

TEST_CASE("dataset counting and manifest completeness")
{
    const fs::path in  = make_sources("count", 10);
    const fs::path out = in.parent_path() / "out";
    const DatasetManifest m = generate_dataset(small_config(in, out));

    CHECK(m.complete);
    CHECK(m.skipped.empty());
    REQUIRE(m.entries.size() == 40);

    std::set<std::string> ids, referenced;
    for (const auto& e : m.entries) {
        ids.insert(e.id);
        REQUIRE(e.files().size() == 4);
        for (const auto& f : e.files()) {
            REQUIRE(fs::exists(out / f));
            referenced.insert(f);
        }
        CHECK((e.split == "train" || e.split == "test"));
        CHECK(e.exposure_time > 0.0);
        CHECK(e.saturated_fraction >= 0.0);
        CHECK(e.saturated_fraction <= 1.0);
    }
    CHECK(ids.size() == 40);

    // every emitted file is referenced
    for (const auto& [rel, bytes] : tree_bytes(out))
        if (rel != manifest_file && rel != run_file)
            CHECK_MESSAGE(referenced.count(rel), rel);

    // manifest round trip
    const DatasetManifest back = read_manifest(out);
    REQUIRE(back.entries.size() == 40);
    CHECK(back.complete);
    CHECK(back.entries[5].id == m.entries[5].id);
    CHECK(back.entries[5].exposure_time == m.entries[5].exposure_time);
    CHECK(back.entries[5].seed == m.entries[5].seed);

    // output shapes
    const ManifestEntry& e = m.entries.back();
    const LdrImage mono    = read_ldr(out / e.mono_png);
    CHECK(mono.channels == 1);
    CHECK(mono.width == e.resolution.width);
    CHECK(read_ldr(out / e.gt_ldr_png).channels == 3);
    CHECK(read_radiance_hdr(out / e.gt_hdr).height() == e.resolution.height);
}

TEST_CASE("dataset generation is deterministic across worker counts")
{
    const fs::path in = make_sources("determinism", 4);
    PipelineConfig a  = small_config(in, in.parent_path() / "a");
    PipelineConfig b  = small_config(in, in.parent_path() / "b");
    a.threads = 1;
    b.threads = 3;
    generate_dataset(a);
    generate_dataset(b);
    const auto ta = tree_bytes(a.output_dir), tb = tree_bytes(b.output_dir);
    REQUIRE(ta.size() == tb.size());
    for (const auto& [rel, bytes] : ta)
        CHECK_MESSAGE(tb.at(rel) == bytes, rel);

    PipelineConfig c = small_config(in, in.parent_path() / "c");
    c.spad.seed = 12;
    generate_dataset(c);
    const auto tc = tree_bytes(c.output_dir);
    CHECK(tc.at("32x16/mono_png/scene00_32x16_k1.png") != ta.at("32x16/mono_png/scene00_32x16_k1.png"));
    // ground truth does not depend on the seed
    CHECK(tc.at("32x16/gt_ldr/scene00.png") == ta.at("32x16/gt_ldr/scene00.png"));
}

TEST_CASE("rerun resumes and regenerates missing files")
{
    const fs::path in     = make_sources("resume", 3);
    const PipelineConfig c = small_config(in, in.parent_path() / "out");
    generate_dataset(c);
    const auto before = tree_bytes(c.output_dir);

    const fs::path victim = c.output_dir / "64x32/mono_png/scene01_64x32_k4.png";
    fs::remove(victim);
    std::ostringstream log;
    const DatasetManifest m = generate_dataset(c, &log);
    CHECK(m.entries.size() == 12);
    CHECK(fs::exists(victim));
    const auto after = tree_bytes(c.output_dir);
    CHECK(after == before);
}

TEST_CASE("bad sources are skipped and recorded")
{
    const fs::path in = make_sources("skip", 2);
    write_file(in / "broken.hdr", Bytes{ 'n', 'o', 'p', 'e' });
    write_radiance_hdr(in / "black.hdr", HdrImage(96, 48));
    write_radiance_hdr(in / "tiny.hdr", oracle::synthetic_scene(40, 20, 5));
    std::ostringstream log;
    const DatasetManifest m = generate_dataset(small_config(in, in.parent_path() / "out"), &log);

    // tiny fits 32x16 but not 64x32
    CHECK(m.entries.size() == 2 * 4 + 2);
    std::set<std::string> skipped;
    for (const auto& s : m.skipped)
        skipped.insert(s.source);
    CHECK(skipped == std::set<std::string>{ "black.hdr", "broken.hdr", "tiny.hdr" });
    CHECK(log.str().find("broken.hdr") != std::string::npos);
    CHECK(read_manifest(in.parent_path() / "out").skipped.size() == m.skipped.size());
}

TEST_CASE("missing or empty input directory is an I/O error")
{
    PipelineConfig c = small_config("/nonexistent/spadsim", scratch_dir("noin"));
    CHECK_THROWS_AS(generate_dataset(c), IoError);
    c.input_dir = scratch_dir("empty");
    CHECK_THROWS_AS(generate_dataset(c), IoError);
}

TEST_CASE("split by count yields the requested partition")
{
    std::vector<std::string> names;
    for (int i = 0; i < 2362; ++i)
        names.push_back("AG8A" + std::to_string(1000 + i) + "-others.hdr");
    SplitConfig s;
    s.test_count = 262;
    const auto split = assign_splits(names, s);
    std::size_t test = 0;
    for (const auto& [name, tag] : split)
        test += tag == "test";
    CHECK(split.size() == 2362);
    CHECK(test == 262);
    CHECK(split.size() - test == 2100);
}

TEST_CASE("split by fraction is stable when sources change")
{
    std::vector<std::string> names;
    for (int i = 0; i < 500; ++i)
        names.push_back("img" + std::to_string(i) + ".hdr");
    SplitConfig s;
    s.test_fraction = 0.1;
    const auto base = assign_splits(names, s);

    std::vector<std::string> grown = names;
    for (int i = 500; i < 900; ++i)
        grown.push_back("img" + std::to_string(i) + ".hdr");
    std::vector<std::string> shrunk(names.begin() + 100, names.end());
    const auto g = assign_splits(grown, s);
    const auto k = assign_splits(shrunk, s);
    for (const auto& n : names)
        REQUIRE(g.at(n) == base.at(n));
    for (const auto& n : shrunk)
        REQUIRE(k.at(n) == base.at(n));

    std::size_t test = 0;
    for (const auto& [name, tag] : g)
        test += tag == "test";
    CHECK(std::abs(double(test) / 900.0 - 0.1) < 0.04);
}

TEST_CASE("export layouts")
{
    const fs::path in  = make_sources("export", 2);
    const fs::path out = in.parent_path() / "out";
    const DatasetManifest m = generate_dataset(small_config(in, out));
    const fs::path ex = in.parent_path() / "export";

    CHECK(export_for_model(m, ExportStage::colorization, ex) == m.entries.size());
    CHECK(export_for_model(m, ExportStage::single_stage, ex) == m.entries.size());
    CHECK(export_for_model(m, ExportStage::hdr_reconstruction, ex) == m.entries.size());
    for (const auto& e : m.entries) {
        const fs::path c = ex / "colorization" / e.split;
        CHECK(read_ldr(c / "input" / (e.id + ".png")).channels == 1);
        CHECK(read_ldr(c / "target" / (e.id + ".png")).channels == 3);
        const fs::path s = ex / "single_stage" / e.split;
        CHECK(fs::exists(s / "input" / (e.id + ".png")));
        CHECK(read_radiance_hdr(s / "target" / (e.id + ".hdr")).width() == e.resolution.width);
        CHECK(fs::exists(ex / "hdr_reconstruction" / e.split / "input" / (e.id + ".png")));
    }

    CHECK_THROWS_WITH_AS(parse_export_stage("pix2pix"), doctest::Contains("colorization"),
                         ValidationError);

    DatasetManifest broken = m;
    fs::remove(out / m.entries[0].mono_png);
    CHECK_THROWS_AS(export_for_model(broken, ExportStage::colorization, ex), ValidationError);
}

TEST_CASE("scoring predictions against the manifest")
{
    const fs::path in  = make_sources("score", 2);
    const fs::path out = in.parent_path() / "out";
    const DatasetManifest m = generate_dataset(small_config(in, out));

    // ground truth against itself
    const fs::path pred = in.parent_path() / "pred";
    for (const auto& e : m.entries) {
        fs::create_directories(pred);
        fs::copy_file(out / e.gt_ldr_png, pred / (e.id + ".png"));
        fs::copy_file(out / e.gt_hdr, pred / (e.id + ".hdr"));
    }
    const MetricReport ldr = score_predictions(pred, m, {});
    CHECK(ldr.complete());
    CHECK(ldr.count == m.entries.size());
    CHECK(ldr.aggregates.ssim == 1.0);
    CHECK(ldr.aggregates.psnr_inf_count == ldr.count);
    CHECK_FALSE(ldr.aggregates.log_psnr_db.has_value());

    EvalOptions hdr_opt;
    hdr_opt.mode = ScoreMode::hdr;
    const MetricReport hdr = score_predictions(pred, m, hdr_opt);
    CHECK(hdr.complete());
    REQUIRE(hdr.aggregates.log_psnr_db.has_value());
    CHECK(std::isinf(*hdr.aggregates.log_psnr_db));

    const MetricReport only_test = score_predictions(pred, m, {}, "test");
    std::size_t n_test = 0;
    for (const auto& e : m.entries)
        n_test += e.split == "test";
    CHECK(only_test.count == n_test);

    fs::remove(pred / (m.entries[2].id + ".png"));
    const MetricReport partial = score_predictions(pred, m, {});
    CHECK(partial.count == m.entries.size() - 1);
    REQUIRE(partial.missing.size() == 1);
    CHECK(partial.missing[0] == m.entries[2].id);
}

TEST_CASE("noisy ground truth scores near the noise-limited PSNR")
{
    // log-uniform radiance over two decades below 0.32 of the peak: the log
    // curve maps it into [0.15, 0.81], clear of both clip points
    const fs::path dir = scratch_dir("noise");
    HdrImage scene(256, 128);
    CounterRng pick(98, 0, 0);
    for (Eigen::Index i = 0; i < scene.pixels().rows(); ++i)
        scene.pixels().row(i).setConstant(float(std::pow(10.0, -2.5 + 2.0 * pick.uniform())));
    scene(0, 0).setConstant(1.0f);
    write_radiance_hdr(dir / "scene.hdr", scene);
    const SingleResult r = simulate_single(dir / "scene.hdr", dir / "out", PipelineConfig{});
    const LdrImage gt    = read_ldr(dir / "out" / r.entry.gt_ldr_png);

    LdrImage noisy = gt;
    boost::random::normal_distribution<double> normal(0.0, 0.05);
    CounterRng rng(99, 0, 0);
    for (auto& p : noisy.pixels)
        p = quantize8(p / 255.0 + normal(rng));
    const ImageScore s = score_ldr(noisy, gt);
    CHECK(std::abs(s.psnr_db - 26.0206) <= 0.1);
}

TEST_CASE("simulate_single writes four files and averages noise down")
{
    const fs::path dir = scratch_dir("single");
    write_radiance_hdr(dir / "flat.hdr", HdrImage::from_mono(PlaneF::Constant(128, 128, 3.0f)));
    PipelineConfig c;
    c.spad.sampler = Sampler::exact;
    c.spad.frames  = 1;
    const SingleResult one = simulate_single(dir / "flat.hdr", dir / "k1", c);
    c.spad.frames = 4;
    const SingleResult four = simulate_single(dir / "flat.hdr", dir / "k4", c);

    CHECK(one.entry.id == "flat_128x128_k1");
    for (const auto& f : four.entry.files())
        CHECK(fs::exists(dir / "k4" / f));
    CHECK(one.entry.exposure_time == four.entry.exposure_time);

    const double v1 = plane_variance(read_radiance_hdr(dir / "k1" / one.entry.mono_hdr));
    const double v4 = plane_variance(read_radiance_hdr(dir / "k4" / four.entry.mono_hdr));
    CHECK(v4 / v1 == doctest::Approx(0.25).epsilon(0.1));

    CHECK_THROWS_AS(simulate_single(dir / "missing.hdr", dir / "x", c), IoError);
}

TEST_CASE("sample seeds do not depend on frame count and differ per sample")
{
    const auto a = sample_seed(1, "a.hdr", { 32, 16 });
    CHECK(a == sample_seed(1, "a.hdr", { 32, 16 }));
    CHECK(a != sample_seed(1, "a.hdr", { 64, 32 }));
    CHECK(a != sample_seed(1, "b.hdr", { 32, 16 }));
    CHECK(a != sample_seed(2, "a.hdr", { 32, 16 }));
}
