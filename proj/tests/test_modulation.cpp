#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace occlumask;
using namespace occlumask::modulation;

TEST(Parabola, CoefficientsForDefaultEnd) {
    const auto f = build_parabolic_curve(0.0, 4095.0, 0.6);
    EXPECT_NEAR(f.c2(), -0.4 / 4095.0, 1e-18);
    EXPECT_DOUBLE_EQ(f.c1(), 1.0);
    EXPECT_DOUBLE_EQ(f.c0(), 0.0);
    // 2048 - 0.4 * 2048^2 / 4095
    EXPECT_NEAR(f(2048.0), 1638.2999755799756, 1e-9);
    EXPECT_EQ(round_half_up(f(2048.0)), 1638.0);
}

TEST(Parabola, EndpointContractAcrossEnds) {
    for (double i_min : {0.0, 150.0}) {
        for (double a : {0.5, 0.6, 0.8, 1.0}) {
            if (a < (4095.0 + i_min) / (2.0 * 4095.0)) continue;
            const auto f = build_parabolic_curve(i_min, 4095.0, a);
            EXPECT_NEAR(f(i_min), i_min, 1e-9);
            EXPECT_NEAR(f.derivative(i_min), 1.0, 1e-9);
            EXPECT_NEAR(f(4095.0), a * 4095.0, 1e-9);
            double prev = f(i_min);
            for (double i = i_min + 1.0; i <= 4095.0; i += 1.0) {
                EXPECT_GT(f(i), prev);
                prev = f(i);
            }
        }
    }
}

TEST(Parabola, NonMonotoneEndRejectedWithFeasibleBound) {
    try {
        build_parabolic_curve(0.0, 4095.0, 0.4);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("0.5"), std::string::npos) << e.what();
    }
    EXPECT_NO_THROW(build_parabolic_curve(0.0, 4095.0, 0.5));
    EXPECT_THROW(build_parabolic_curve(1000.0, 4095.0, 0.6), NumericError);
    EXPECT_THROW(build_parabolic_curve(10.0, 5.0, 0.6), DataError);
    EXPECT_THROW(build_parabolic_curve(0.0, 4095.0, 1.2), DataError);
}

TEST(Parabola, NeverBrightensAndPreservesOrder) {
    support::Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double i_min = support::uniform(rng, 0.0, 1000.0);
        const double i_max = support::uniform(rng, i_min + 10.0, 4095.0);
        const double a = support::uniform(rng, (i_max + i_min) / (2.0 * i_max), 1.0);
        const auto f = build_parabolic_curve(i_min, i_max, a);
        for (int k = 0; k < 50; ++k) {
            const double x = support::uniform(rng, i_min, i_max);
            const double y = support::uniform(rng, i_min, i_max);
            EXPECT_LE(f(x), x + 1e-9);
            if (x < y) EXPECT_LE(f(x), f(y) + 1e-9);
        }
    }
}

TEST(Parabola, ClampsOutsideInterval) {
    const auto f = build_parabolic_curve(100.0, 4000.0, 0.8);
    EXPECT_DOUBLE_EQ(f(50.0), f(100.0));
    EXPECT_DOUBLE_EQ(f(4095.0), f(4000.0));
}

namespace {

// Panel level for target transmittance t under the default increasing curve.
int expected_level(double t) {
    const auto c = radiometry::TransmittanceCurve::defaults(12);
    const double s = (t - c.t_min()) / (c.t_max() - c.t_min());
    return static_cast<int>(std::floor(c.i0() + std::log(s / (1.0 - s)) / c.k() + 0.5));
}

}  // namespace

TEST(NaiveMask, TwoLevelSceneMatchesClosedForm) {
    Image scene(6, 4, Domain::counts, 12, 200.0);
    for (int x = 3; x < 6; ++x)
        for (int y = 0; y < 4; ++y) scene(x, y) = 4000.0;
    const auto f = build_parabolic_curve(0.0, 4095.0, 0.6);
    const auto trans = radiometry::TransmittanceCurve::defaults(12);
    const auto nm = compute_naive_mask(scene, f, radiometry::ResponseCurve::linear(12), trans, 0.1,
                                       calibration::Homography::identity(), 6, 4);
    const double t_bright = 0.1 * (4000.0 - 0.4 * 4000.0 * 4000.0 / 4095.0) / 4000.0;
    const double t_dark = 0.1 * (200.0 - 0.4 * 200.0 * 200.0 / 4095.0) / 200.0;
    EXPECT_EQ(nm.mask(4, 1), expected_level(t_bright));
    EXPECT_EQ(nm.mask(0, 1), expected_level(t_dark));
    EXPECT_LT(nm.mask(4, 1), nm.mask(0, 1));
    EXPECT_EQ(nm.diagnostics.clamped_opaque, 0u);
    EXPECT_EQ(nm.diagnostics.saturated_scene, 0u);
}

TEST(NaiveMask, BlackPixelsStayAtSecondaryTransmittance) {
    Image scene(3, 3, Domain::counts, 12, 0.0);
    const auto trans = radiometry::TransmittanceCurve::defaults(12);
    const auto nm = compute_naive_mask(scene, build_parabolic_curve(0.0, 4095.0, 0.6),
                                       radiometry::ResponseCurve::linear(12), trans, 0.05,
                                       calibration::Homography::identity(), 3, 3);
    EXPECT_EQ(nm.mask(1, 1), expected_level(0.05));
}

TEST(NaiveMask, BrighterSceneNeverGetsMoreTransparentLevel) {
    support::Rng rng(5);
    const Image scene = support::random_image(rng, 40, 30, 0.0, 4095.0, true);
    const auto trans = radiometry::TransmittanceCurve::defaults(12);
    const auto nm = compute_naive_mask(scene, build_parabolic_curve(0.0, 4095.0, 0.6),
                                       radiometry::ResponseCurve::linear(12), trans, 0.1,
                                       calibration::Homography::identity(), 40, 30);
    auto s = scene.pixels();
    auto m = nm.mask.pixels();
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); j += 37)
            if (s[i] < s[j]) EXPECT_GE(m[i], m[j]);
}

TEST(NaiveMask, WarpShiftsAndFillsTransparent) {
    Image scene(10, 6, Domain::counts, 12, 4000.0);
    const auto trans = radiometry::TransmittanceCurve::defaults(12);
    const auto f = build_parabolic_curve(0.0, 4095.0, 0.6);
    const auto base = compute_naive_mask(scene, f, radiometry::ResponseCurve::linear(12), trans, 0.1,
                                         calibration::Homography::identity(), 10, 6);
    const auto shifted = compute_naive_mask(scene, f, radiometry::ResponseCurve::linear(12), trans, 0.1,
                                            calibration::Homography::translation(3.0, 0.0), 10, 6);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 3; ++x) EXPECT_EQ(shifted.mask(x, y), 4095.0);
        for (int x = 3; x < 10; ++x) EXPECT_EQ(shifted.mask(x, y), base.mask(x - 3, y));
    }
}

TEST(NaiveMask, RejectsMismatchedIdentityGrid) {
    Image scene(4, 4);
    EXPECT_THROW(compute_naive_mask(scene, build_parabolic_curve(0.0, 4095.0, 0.6),
                                    radiometry::ResponseCurve::linear(12), radiometry::TransmittanceCurve::defaults(12),
                                    0.1, calibration::Homography::identity(), 5, 4),
                 DataError);
}
