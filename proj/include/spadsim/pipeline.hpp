// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "spadsim/config.hpp"
#include "spadsim/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spadsim {

/// One generated (source, resolution, K) sample. Paths are relative to the
/// manifest directory.
struct ManifestEntry {
    std::string id;
    std::string source;
    Resolution resolution;
    int frames = 1;
    double exposure_time       = 0.0;
    double flux_scale          = 0.0;
    double median_flux         = 0.0;
    std::uint64_t seed         = 0;
    double saturated_fraction  = 0.0;
    std::string mono_png;
    std::string mono_hdr;
    std::string gt_ldr_png;
    std::string gt_hdr;
    std::string split; ///< "train" or "test"

    std::vector<std::string> files() const { return { mono_png, mono_hdr, gt_ldr_png, gt_hdr }; }
};

struct SkippedSource {
    std::string source;
    std::string reason;
};

struct DatasetManifest {
    std::filesystem::path root; ///< directory the entry paths are relative to
    std::vector<ManifestEntry> entries;
    std::vector<SkippedSource> skipped;
    bool complete = false;

    std::filesystem::path resolve(const std::string& rel) const { return root / rel; }
};

inline constexpr std::string_view manifest_file = "manifest.jsonl";
inline constexpr std::string_view run_file      = "run.json";

std::string to_jsonl(const ManifestEntry& entry);
ManifestEntry entry_from_json(std::string_view line);

/// Reads `<dir>/manifest.jsonl` and, when present, `<dir>/run.json`.
DatasetManifest read_manifest(const std::filesystem::path& dir);

/// Stable 64-bit key of a source file name used for the train/test split.
std::uint64_t split_hash(std::string_view source_name);

/// "test" or "train" per source name.
std::map<std::string, std::string> assign_splits(const std::vector<std::string>& sources,
                                                 const SplitConfig& split);

/// Per-(source, resolution) simulation seed; independent of K so the first
/// frame of every K is shared.
std::uint64_t sample_seed(std::uint64_t base_seed, std::string_view source, Resolution res);

/// Mono branch of one sample: luminance, exposure plan, K simulated frames,
/// inversion back to radiance units, tone mapping and quantization.
struct MonoSample {
    ExposurePlan plan;
    HdrImage mono_hdr;
    LdrImage mono_png;
    std::size_t saturated = 0;
    double saturated_fraction = 0.0;
};

MonoSample simulate_mono(const HdrImage& color, const SpadConfig& spad,
                         const ExposureTargets& targets, const TonemapParams& tonemap,
                         int threads = 0);

/// Color LDR ground truth: same tone curve as the mono branch, per channel.
LdrImage color_ldr_ground_truth(const HdrImage& color, const TonemapParams& tonemap);

/// Runs every source x resolution x frame count, writing images, the JSONL
/// manifest and run.json into config.output_dir. Entries of an earlier run
/// with the same fingerprint whose files all exist are reused.
DatasetManifest generate_dataset(const PipelineConfig& config, std::ostream* log = nullptr);

struct SingleResult {
    ManifestEntry entry;
    std::size_t saturated = 0;
};

/// Same per-image pipeline for one file at one resolution (native size when
/// `resolution` is empty) and frames = config.spad.frames.
SingleResult simulate_single(const std::filesystem::path& input,
                             const std::filesystem::path& output_dir,
                             const PipelineConfig& config,
                             std::optional<Resolution> resolution = std::nullopt);

enum class ExportStage { colorization, hdr_reconstruction, single_stage };

std::string_view to_string(ExportStage s) noexcept;
ExportStage parse_export_stage(std::string_view name);

/// Copies pairs into `<out>/<stage>/<split>/{input,target}/<id>.<ext>`.
/// Returns the number of pairs written.
std::size_t export_for_model(const DatasetManifest& manifest, ExportStage stage,
                             const std::filesystem::path& out);

/// Scores `<pred_dir>/<id>.png` (ldr) or `<id>.hdr` (hdr) against the
/// manifest's ground truth. `split` filters entries when non-empty.
MetricReport score_predictions(const std::filesystem::path& pred_dir,
                               const DatasetManifest& manifest, const EvalOptions& options,
                               std::string_view split = {});

} // namespace spadsim
