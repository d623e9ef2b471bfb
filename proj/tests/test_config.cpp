// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/config.hpp"

#include <doctest.h>

using namespace spadsim;

TEST_CASE("resolution parsing")
{
    const Resolution r = Resolution::parse("1024x512");
    CHECK(r.width == 1024);
    CHECK(r.height == 512);
    CHECK(r.label() == "1024x512");
    CHECK(Resolution::parse("8X4") == Resolution{ 8, 4 });
    CHECK_THROWS_AS(Resolution::parse("1024"), ValidationError);
    CHECK_THROWS_AS(Resolution::parse("0x5"), ValidationError);
    CHECK_THROWS_AS(Resolution::parse("ax5"), ValidationError);
}

TEST_CASE("defaults")
{
    const PipelineConfig c;
    CHECK(c.resolutions.size() == 2);
    CHECK(c.resolutions[0] == Resolution{ 1024, 512 });
    CHECK(c.resolutions[1] == Resolution{ 2048, 1024 });
    CHECK(c.frame_counts == std::vector<int>{ 1, 4 });
    CHECK(c.spad.dead_time == 150e-9);
    CHECK(c.tonemap.log_mu == 500.0);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("ini text sets every section")
{
    PipelineConfig c;
    apply_config_text(c, R"(
[pipeline]
input_dir = /data/in
output_dir = /data/out
resolutions = 64x32, 128x64
frames = 1,2,4
threads = 3

[spad]
q = 0.5
dead_time_ns = 100
sampler = exact
seed = 42

[split]
test_count = 7

[exposure]
target_x = 0.2
target_count = 500

[tonemap]
operator = reinhard
mu = 100
gamma = 2.4
hdr_scale = 10
reinhard_white = 8

[empty]
)");
    CHECK(c.input_dir == "/data/in");
    CHECK(c.resolutions.size() == 2);
    CHECK(c.resolutions[1] == Resolution{ 128, 64 });
    CHECK(c.frame_counts == std::vector<int>{ 1, 2, 4 });
    CHECK(c.threads == 3);
    CHECK(c.spad.quantum_efficiency == 0.5);
    CHECK(c.spad.dead_time == doctest::Approx(100e-9));
    CHECK(c.spad.sampler == Sampler::exact);
    CHECK(c.spad.seed == 42);
    CHECK(*c.split.test_count == 7);
    CHECK(c.exposure.target_x == 0.2);
    CHECK(c.exposure.target_count == 500.0);
    CHECK(c.tonemap.op == ToneOperator::reinhard);
    CHECK(c.tonemap.gamma == 2.4);
    CHECK(c.tonemap.reinhard_white == 8.0);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("unknown keys and bad values are rejected")
{
    PipelineConfig c;
    CHECK_THROWS_WITH_AS(apply_config_text(c, "[spad]\nqe = 0.4\n"), doctest::Contains("spad.qe"),
                         ValidationError);
    CHECK_THROWS_AS(apply_config_text(c, "loose = 1\n"), ValidationError);
    CHECK_THROWS_AS(apply_config_value(c, "spad.q", "high"), ValidationError);
    CHECK_THROWS_AS(apply_config_value(c, "spad.sampler", "poisson"), ValidationError);
    CHECK_THROWS_AS(apply_config_value(c, "pipeline.frames", "1,x"), ValidationError);
}

TEST_CASE("validation of assembled configs")
{
    PipelineConfig c;
    c.resolutions.clear();
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.frame_counts = { 1, 0 };
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.split.test_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.split.test_count = 5;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("fingerprint tracks output-affecting fields")
{
    PipelineConfig a, b;
    CHECK(a.fingerprint() == b.fingerprint());
    b.output_dir = "/elsewhere";
    b.threads    = 7;
    CHECK(a.fingerprint() == b.fingerprint());
    b.spad.seed = 1;
    CHECK(a.fingerprint() != b.fingerprint());
    CHECK(a.fingerprint().size() == 16);
}
