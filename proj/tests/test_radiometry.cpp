#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace occlumask;
using namespace occlumask::radiometry;

TEST(Response, LinearHalfRoundsUp) {
    Image l(1, 1, Domain::radiance, 12, 0.5);
    EXPECT_EQ(apply_response(l, ResponseCurve::linear(12))(0, 0), 2048.0);
}

TEST(Response, PiecewiseInterpolatesBetweenSamples) {
    const ResponseCurve r({{0.0, 0.0}, {0.5, 1000.0}, {1.0, 4095.0}}, 12);
    EXPECT_DOUBLE_EQ(r.evaluate(0.25), 500.0);
    EXPECT_DOUBLE_EQ(r.evaluate(0.75), 2547.5);
    EXPECT_DOUBLE_EQ(r.evaluate(2.0), 4095.0);
    EXPECT_DOUBLE_EQ(r.inverse(2547.5), 0.75);
    EXPECT_DOUBLE_EQ(r.inverse(500.0), 0.25);
}

TEST(Response, InverseRoundTripsEveryCount) {
    const ResponseCurve r({{0.0, 0.0}, {0.2, 300.0}, {0.6, 3000.0}, {0.9, 4000.0}}, 12);
    for (int c = 0; c <= 4000; ++c) EXPECT_NEAR(r.evaluate(r.inverse(c)), c, 1e-9) << c;
    EXPECT_TRUE(r.saturated(4000));
    EXPECT_DOUBLE_EQ(r.inverse(4095), 0.9);
}

TEST(Response, FlatSegmentInverseIsSmallestRadiance) {
    const ResponseCurve r({{0.0, 0.0}, {0.3, 1000.0}, {0.5, 1000.0}, {1.0, 4095.0}}, 12);
    EXPECT_DOUBLE_EQ(r.inverse(1000.0), 0.3);
}

TEST(Response, RejectsBadTables) {
    EXPECT_THROW(ResponseCurve({{0.1, 0.0}, {1.0, 4095.0}}, 12), DataError);
    EXPECT_THROW(ResponseCurve({{0.0, 0.0}, {1.0, 5000.0}}, 12), DataError);
    EXPECT_THROW(ResponseCurve({{0.0, 100.0}, {1.0, 50.0}}, 12), DataError);
    EXPECT_THROW(ResponseCurve({{0.0, 0.0}}, 12), DataError);
}

TEST(Response, NegativeRadianceRejected) {
    Image l(1, 1, Domain::radiance, 12, -0.1);
    EXPECT_THROW(apply_response(l, ResponseCurve::linear(12)), DataError);
}

TEST(Transmittance, LogisticAtUnitArgument) {
    const TransmittanceCurve t(0.0 + 1e-9, 1.0, 1.0, 0.0, 12);
    EXPECT_NEAR(t.transmittance(1.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-8);
    EXPECT_NEAR(t.transmittance(1.0), 0.7310585786, 1e-8);
}

TEST(Transmittance, DefaultsPutNinetyFivePercentOfSwingInCentralHalf) {
    const auto t = TransmittanceCurve::defaults(12);
    const double q = 4095.0 / 4.0;
    EXPECT_NEAR(t.transmittance(t.i0()), 0.051, 1e-12);
    EXPECT_NEAR(t.transmittance(t.i0() + q), 0.002 + 0.098 * 0.975, 1e-12);
    EXPECT_NEAR(t.transmittance(t.i0() - q), 0.002 + 0.098 * 0.025, 1e-12);
}

TEST(Transmittance, DerivativeMatchesFiniteDifference) {
    const auto t = TransmittanceCurve::defaults(12);
    for (double l : {0.0, 500.0, 2047.5, 3000.0, 4095.0}) {
        const double fd = (t.transmittance(l + 1e-3) - t.transmittance(l - 1e-3)) / 2e-3;
        EXPECT_NEAR(t.derivative(l), fd, 1e-9);
    }
}

TEST(Transmittance, DecreasingIsMirrorOfIncreasing) {
    const auto inc = TransmittanceCurve::defaults(12);
    const TransmittanceCurve dec(inc.t_min(), inc.t_max(), inc.k(), inc.i0(), 12, Orientation::decreasing);
    for (int l = 0; l <= 4095; l += 13) EXPECT_NEAR(dec.transmittance(l), inc.transmittance(4095 - l), 1e-15);
    EXPECT_EQ(dec.most_transparent_level(), 0);
    EXPECT_EQ(dec.most_opaque_level(), 4095);
}

TEST(Transmittance, LevelInverseMatchesExhaustiveSearch) {
    for (auto o : {Orientation::increasing, Orientation::decreasing}) {
        const auto d = TransmittanceCurve::defaults(12);
        const TransmittanceCurve t(d.t_min(), d.t_max(), d.k(), d.i0(), 12, o);
        support::Rng rng(7);
        for (int i = 0; i < 300; ++i) {
            const double target = support::uniform(rng, t.reachable_min(), t.reachable_max());
            int best = 0;
            for (int l = 1; l <= 4095; ++l)
                if (std::abs(t.level_continuous(target) - l) < std::abs(t.level_continuous(target) - best)) best = l;
            const auto r = level_of_transmittance(target, t);
            EXPECT_FALSE(r.clamped);
            EXPECT_EQ(r.level, best);
        }
        for (int l = 0; l <= 4095; ++l) EXPECT_EQ(level_of_transmittance(t.transmittance(l), t).level, l);
    }
}

TEST(Transmittance, UnreachableTargetsClampAndFlag) {
    const auto t = TransmittanceCurve::defaults(12);
    EXPECT_EQ(level_of_transmittance(0.5, t).level, 4095);
    EXPECT_TRUE(level_of_transmittance(0.5, t).clamped);
    EXPECT_EQ(level_of_transmittance(0.001, t).level, 0);
    EXPECT_TRUE(level_of_transmittance(0.001, t).clamped);
    // between t_min and f_s(0): inside the logistic range but below level 0
    const double below = (t.t_min() + t.reachable_min()) / 2.0;
    EXPECT_EQ(level_of_transmittance(below, t).level, 0);
    EXPECT_TRUE(level_of_transmittance(below, t).clamped);
}

TEST(Transmittance, NormalizedSpansUnitInterval) {
    const auto t = TransmittanceCurve::defaults(12);
    EXPECT_NEAR(t.normalized(0), 0.0, 1e-15);
    EXPECT_NEAR(t.normalized(4095), 1.0, 1e-15);
}

TEST(Transmittance, RejectsBadParameters) {
    EXPECT_THROW(TransmittanceCurve(0.0, 0.1, 0.01, 2000, 12), DataError);
    EXPECT_THROW(TransmittanceCurve(0.2, 0.1, 0.01, 2000, 12), DataError);
    EXPECT_THROW(TransmittanceCurve(0.01, 0.1, -1.0, 2000, 12), DataError);
}

TEST(Attenuate, IsPixelwiseProductAndLinear) {
    support::Rng rng(3);
    Image l(8, 8, Domain::radiance), t(8, 8, Domain::fraction);
    for (double& v : l.pixels()) v = support::uniform(rng, 0.0, 2.0);
    for (double& v : t.pixels()) v = support::uniform(rng, 0.0, 1.0);
    const Image a = attenuate(l, t);
    Image l2 = l;
    for (double& v : l2.pixels()) v *= 3.0;
    const Image a2 = attenuate(l2, t);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_DOUBLE_EQ(a.pixels()[i], l.pixels()[i] * t.pixels()[i]);
        EXPECT_NEAR(a2.pixels()[i], 3.0 * a.pixels()[i], 1e-12);
    }
    t.pixels()[0] = 1.5;
    EXPECT_THROW(attenuate(l, t), DataError);
}

TEST(RadiometryConfig, ResponseTableRoundTrips) {
    const ResponseCurve r({{0.0, 0.0}, {0.25, 1200.5}, {1.0, 4095.0}}, 12);
    EXPECT_EQ(parse_response_table(format_response_table(r), 12), r);
    EXPECT_EQ(parse_response_table("linear", 12), ResponseCurve::linear(12));
    EXPECT_THROW(parse_response_table("0:0, 1", 12), UsageError);
}
