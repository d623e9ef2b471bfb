// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "spadsim/radiometry.hpp"
#include "spadsim/spad.hpp"
#include "spadsim/tonemap.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spadsim {

struct Resolution {
    int width  = 0;
    int height = 0;

    /// "WxH"
    std::string label() const;
    static Resolution parse(std::string_view text);
    bool operator==(const Resolution&) const = default;
};

struct SplitConfig {
    /// Sources whose hash falls below this fraction of the hash range are test.
    double test_fraction = 0.1;
    /// When set, exactly this many sources (smallest hashes) are test.
    std::optional<std::size_t> test_count;
};

struct PipelineConfig {
    std::filesystem::path input_dir;
    std::filesystem::path output_dir;
    std::vector<Resolution> resolutions{ { 1024, 512 }, { 2048, 1024 } };
    std::vector<int> frame_counts{ 1, 4 };
    SplitConfig split;
    SpadConfig spad;
    TonemapParams tonemap;
    ExposureTargets exposure;
    int threads = 0; ///< 0 = SPADSIM_THREADS or hardware concurrency

    void validate() const;

    /// Stable digest of every field that affects generated bytes.
    std::string fingerprint() const;
};

/// Applies `section.key = value` settings from INI-style text. Unknown keys
/// are rejected.
void apply_config_text(PipelineConfig& config, const std::string& text);
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// Applies a single dotted key, e.g. ("spad.q", "0.4").
void apply_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

} // namespace spadsim
