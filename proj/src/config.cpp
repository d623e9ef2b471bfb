// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/config.hpp"
#include "spadsim/hdr_io.hpp"
#include "spadsim/rng.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <sstream>

namespace spadsim {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view s)
{
    std::vector<std::string_view> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        const auto item  = trim(s.substr(0, comma));
        if (!item.empty())
            out.push_back(item);
        if (comma == std::string_view::npos)
            break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

double to_double(std::string_view key, std::string_view value)
{
    value = trim(value);
    if (value == "inf" || value == "infinity")
        return std::numeric_limits<double>::infinity();
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ValidationError(std::string(key) + ": expected a number, got '" + std::string(value)
                              + "'");
    return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view value)
{
    value = trim(value);
    Int out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ValidationError(std::string(key) + ": expected an integer, got '"
                              + std::string(value) + "'");
    return out;
}

} // namespace

std::string Resolution::label() const
{
    return std::to_string(width) + "x" + std::to_string(height);
}

Resolution Resolution::parse(std::string_view text)
{
    text         = trim(text);
    const auto x = text.find_first_of("xX");
    if (x == std::string_view::npos)
        throw ValidationError("resolution must look like WxH, got '" + std::string(text) + "'");
    Resolution r{ to_int<int>("resolution", text.substr(0, x)),
                  to_int<int>("resolution", text.substr(x + 1)) };
    if (r.width < 1 || r.height < 1)
        throw ValidationError("resolution must be positive, got '" + std::string(text) + "'");
    return r;
}

void PipelineConfig::validate() const
{
    if (resolutions.empty())
        throw ValidationError("at least one resolution is required");
    for (const auto& r : resolutions)
        if (r.width < 1 || r.height < 1)
            throw ValidationError("resolution must be positive");
    if (frame_counts.empty())
        throw ValidationError("at least one frame count is required");
    for (int k : frame_counts)
        if (k < 1)
            throw ValidationError("frame counts must be >= 1");
    if (!split.test_count && !(split.test_fraction > 0.0 && split.test_fraction < 1.0))
        throw ValidationError("split.test_fraction must be in (0, 1)");
    spad.validate();
    tonemap.validate();
    if (!(exposure.target_x > 0.0) || !(exposure.target_count > 0.0))
        throw ValidationError("exposure targets must be positive");
}

std::string PipelineConfig::fingerprint() const
{
    std::ostringstream s;
    s.precision(17);
    for (const auto& r : resolutions)
        s << r.label() << ';';
    for (int k : frame_counts)
        s << k << ';';
    s << split.test_fraction << ';' << (split.test_count ? std::to_string(*split.test_count) : "-")
      << ';' << spad.quantum_efficiency << ';' << spad.dead_time << ';' << to_string(spad.sampler)
      << ';' << spad.seed << ';' << to_string(tonemap.op) << ';' << tonemap.log_mu << ';'
      << tonemap.reinhard_white << ';' << tonemap.gamma << ';' << tonemap.hdr_scale << ';'
      << exposure.target_x << ';' << exposure.target_count;
    const std::string text = s.str();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
    return buf;
}

void apply_config_value(PipelineConfig& c, std::string_view key, std::string_view value)
{
    value = trim(value);
    if (key == "pipeline.input_dir")
        c.input_dir = std::string(value);
    else if (key == "pipeline.output_dir")
        c.output_dir = std::string(value);
    else if (key == "pipeline.resolutions") {
        c.resolutions.clear();
        for (auto item : split_list(value))
            c.resolutions.push_back(Resolution::parse(item));
    } else if (key == "pipeline.frames" || key == "spad.frames") {
        c.frame_counts.clear();
        for (auto item : split_list(value))
            c.frame_counts.push_back(to_int<int>(key, item));
        if (!c.frame_counts.empty())
            c.spad.frames = c.frame_counts.front();
    } else if (key == "pipeline.threads")
        c.threads = to_int<int>(key, value);
    else if (key == "split.test_fraction")
        c.split.test_fraction = to_double(key, value);
    else if (key == "split.test_count")
        c.split.test_count = to_int<std::size_t>(key, value);
    else if (key == "spad.q")
        c.spad.quantum_efficiency = to_double(key, value);
    else if (key == "spad.dead_time_ns")
        c.spad.dead_time = to_double(key, value) * 1e-9;
    else if (key == "spad.sampler")
        c.spad.sampler = parse_sampler(value);
    else if (key == "spad.seed")
        c.spad.seed = to_int<std::uint64_t>(key, value);
    else if (key == "exposure.target_x")
        c.exposure.target_x = to_double(key, value);
    else if (key == "exposure.target_count")
        c.exposure.target_count = to_double(key, value);
    else if (key == "tonemap.operator")
        c.tonemap.op = parse_tone_operator(value);
    else if (key == "tonemap.mu")
        c.tonemap.log_mu = to_double(key, value);
    else if (key == "tonemap.gamma")
        c.tonemap.gamma = to_double(key, value);
    else if (key == "tonemap.hdr_scale")
        c.tonemap.hdr_scale = to_double(key, value);
    else if (key == "tonemap.reinhard_white")
        c.tonemap.reinhard_white = to_double(key, value);
    else
        throw ValidationError("unknown config key '" + std::string(key) + "'");
}

void apply_config_text(PipelineConfig& config, const std::string& text)
{
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        if (!body.data().empty())
            throw ValidationError("config key '" + section + "' must live in a [section]");
        for (const auto& [key, value] : body)
            apply_config_value(config, section + "." + key, value.data());
    }
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path)
{
    const Bytes bytes = read_file(path);
    apply_config_text(config, std::string(bytes.begin(), bytes.end()));
}

} // namespace spadsim
