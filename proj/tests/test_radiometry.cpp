// Copyright Contributors to the spadsim project.
// SPDX-License-Identifier: Apache-2.0

#include "spadsim/radiometry.hpp"
#include "spadsim/spad.hpp"

#include <doctest.h>

using namespace spadsim;

TEST_CASE("luminance uses Rec.601 weights")
{
    HdrImage img(3, 1);
    img(0, 0) << 1.0f, 1.0f, 1.0f;
    img(1, 0) << 0.0f, 0.0f, 0.0f;
    img(2, 0) << 1.0f, 0.0f, 0.0f;
    const PlaneD y = luminance(img);
    CHECK(y(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y(0, 1) == 0.0);
    CHECK(y(0, 2) == doctest::Approx(0.299).epsilon(1e-12));

    HdrImage g(1, 1);
    g(0, 0) << 0.0f, 1.0f, 0.0f;
    CHECK(luminance(g)(0, 0) == doctest::Approx(0.587));
}

TEST_CASE("flux_from_image is a linear scaling")
{
    PlaneD gray(1, 3);
    gray << 1.0, 0.0, 0.25;
    const FluxField f = flux_from_image(gray, 1e6);
    CHECK(f.phi(0, 0) == 1e6);
    CHECK(f.phi(0, 1) == 0.0);
    const FluxField f2 = flux_from_image(gray, 2e6);
    CHECK(((f2.phi - 2.0 * f.phi).abs() < 1e-9).all());

    CHECK_THROWS_AS(flux_from_image(gray, std::numeric_limits<double>::infinity()), ValidationError);
    CHECK_THROWS_AS(flux_from_image(gray, std::nan("")), ValidationError);
}

TEST_CASE("positive median is the lower middle order statistic")
{
    PlaneD a(1, 5);
    a << 0.0, 4.0, 1.0, 3.0, 2.0; // positives 1,2,3,4 -> lower middle 2
    CHECK(positive_median(a) == 2.0);
    PlaneD b(1, 3);
    b << 5.0, 0.0, 9.0;
    CHECK(positive_median(b) == 5.0);
    CHECK_THROWS_AS(positive_median(PlaneD::Zero(2, 2)), ValidationError);
}

TEST_CASE("plan_exposure places the median on the saturation curve")
{
    SpadConfig c;
    c.quantum_efficiency = 1.0;
    c.dead_time          = 150e-9;
    PlaneD gray(2, 2);
    gray << 0.5, 2.0, 1.0, 8.0; // lower median 1.0

    const ExposurePlan p = plan_exposure(gray, c, { 0.15, 869.565 });
    CHECK(p.median_flux == doctest::Approx(1e6).epsilon(1e-12));
    CHECK(p.flux_scale == doctest::Approx(1e6).epsilon(1e-12));
    CHECK(p.exposure_time == doctest::Approx(869.565 * 1.15 / 1e6).epsilon(1e-12));
    CHECK(p.exposure_time == doctest::Approx(1.0e-3).epsilon(1e-6));

    // planned exposure reproduces the target count and fill fraction
    const double n = expected_count(p.median_flux, 1.0, p.exposure_time, 150e-9);
    CHECK(std::abs(n - 869.565) / 869.565 < 1e-9);
    const double fill = n / (p.exposure_time / 150e-9);
    CHECK(std::abs(fill - 0.15 / 1.15) / (0.15 / 1.15) < 1e-9);

    CHECK_THROWS_AS(plan_exposure(PlaneD::Zero(3, 3), c), ValidationError);
}

TEST_CASE("plan_exposure is invariant to uniform rescaling of the radiance")
{
    SpadConfig c;
    PlaneD gray(3, 4);
    gray << 0.1, 0.2, 7.0, 3.0, 0.0, 1.5, 2.5, 100.0, 0.01, 0.3, 0.4, 0.5;
    const ExposurePlan base = plan_exposure(gray, c);
    for (double k : { 1e-3, 0.5, 3.0, 1e4 }) {
        const ExposurePlan p = plan_exposure(PlaneD(gray * k), c);
        CHECK(p.flux_scale * k == doctest::Approx(base.flux_scale).epsilon(1e-12));
        CHECK(p.exposure_time == doctest::Approx(base.exposure_time).epsilon(1e-12));
        CHECK(p.median_flux == doctest::Approx(base.median_flux).epsilon(1e-12));
    }
}

TEST_CASE("plan_exposure rejects bad targets and zero dead time")
{
    SpadConfig c;
    const PlaneD gray = PlaneD::Constant(2, 2, 1.0);
    CHECK_THROWS_AS(plan_exposure(gray, c, { 0.0, 100.0 }), ValidationError);
    CHECK_THROWS_AS(plan_exposure(gray, c, { 0.1, -1.0 }), ValidationError);
    c.dead_time = 0.0;
    CHECK_THROWS_AS(plan_exposure(gray, c), ValidationError);
}
