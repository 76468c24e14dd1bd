#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace occlumask;
using namespace occlumask::psf;

TEST(Geometry, DefaultRigBlurRadius) {
    const BlurGeometry g;
    EXPECT_NEAR(blur_radius_mm(g), 1.8905, 1e-12);
    EXPECT_NEAR(std::abs(blur_radius_mm(g) - g.aperture_mm / 2.0) / (g.aperture_mm / 2.0), 0.005, 1e-12);
    EXPECT_NEAR(blur_radius_px(g), 1.8905 * 1024.0 / 36.9, 1e-9);
    EXPECT_NEAR(blur_radius_px(g), 52.5, 0.1);
}

TEST(Geometry, PanelAtFocusHasNoBlur) {
    BlurGeometry g;
    g.panel_depth_mm = g.focal_depth_mm;
    EXPECT_DOUBLE_EQ(blur_radius_mm(g), 0.0);
    EXPECT_TRUE(disc_kernel(blur_radius_px(g)).is_identity());
}

TEST(Geometry, RejectsNonPositiveValues) {
    BlurGeometry g;
    g.pixel_pitch_mm = 0.0;
    EXPECT_THROW(g.validate(), DataError);
    g = BlurGeometry{};
    g.aperture_mm = -1.0;
    EXPECT_THROW(blur_radius_mm(g), DataError);
}

TEST(Kernel, SubPixelRadiusIsIdentity) {
    const auto k = disc_kernel(0.4);
    EXPECT_EQ(k.size(), 1);
    EXPECT_DOUBLE_EQ(k(0, 0), 1.0);
    EXPECT_THROW(disc_kernel(-1.0), DataError);
}

TEST(Kernel, RadiusThreeSupportAndNormalization) {
    const auto k = disc_kernel(3.0);
    EXPECT_EQ(k.half_size(), 3);
    double sum = 0.0;
    for (double w : k.taps()) {
        EXPECT_GE(w, 0.0);
        sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(k(3, 3), 0.0);
    EXPECT_GT(k(3, 0), 0.0);
    EXPECT_DOUBLE_EQ(k(1, 2), k(-2, 1));
    EXPECT_DOUBLE_EQ(k(1, 2), k(2, -1));
}

TEST(Kernel, AreaMatchesMonteCarlo) {
    support::Rng rng(0);
    const double r = 5.0;
    const std::pair<int, int> pixels[] = {{0, 0}, {5, 0}, {4, 3}, {3, 3}, {2, 4}};
    for (auto [px, py] : pixels) {
        const int n = 1'000'000;
        int inside = 0;
        for (int i = 0; i < n; ++i) {
            const double x = px - 0.5 + support::uniform(rng, 0.0, 1.0);
            const double y = py - 0.5 + support::uniform(rng, 0.0, 1.0);
            if (x * x + y * y <= r * r) ++inside;
        }
        EXPECT_NEAR(disc_rect_area(r, px - 0.5, px + 0.5, py - 0.5, py + 0.5), inside / double(n), 2e-3)
            << px << "," << py;
    }
}

TEST(Kernel, CentreTapIsInverseOfRetainedArea) {
    const auto k = disc_kernel(5.0);
    double retained = 0.0;
    for (int y = -5; y <= 5; ++y)
        for (int x = -5; x <= 5; ++x)
            if (x * x + y * y <= 5.5 * 5.5) retained += disc_rect_area(5.0, x - 0.5, x + 0.5, y - 0.5, y + 0.5);
    EXPECT_NEAR(k(0, 0), 1.0 / retained, 1e-12);
    EXPECT_NEAR(retained, 25.0 * std::numbers::pi, 0.1);
}

TEST(Convolve, MatchesBruteForce) {
    support::Rng rng(1);
    for (double r : {1.0, 2.0, 3.7, 5.0, 10.0}) {
        const Image img = support::random_image(rng, 64, 64, 0.0, 4095.0);
        const auto k = disc_kernel(r);
        const Image want = support::brute_convolve(img, k);
        for (const Image& got : {convolve(img, k), convolve_direct(img, k), convolve_fft(img, k)}) {
            for (std::size_t i = 0; i < want.size(); ++i)
                ASSERT_NEAR(got.pixels()[i], want.pixels()[i], 1e-9 * std::max(1.0, std::abs(want.pixels()[i])));
        }
    }
}

TEST(Convolve, NonSquareLargeKernelUsesFftAndMatches) {
    support::Rng rng(2);
    const Image img = support::random_image(rng, 97, 61, 0.0, 4095.0);
    const auto k = disc_kernel(20.0);
    const Image a = convolve_direct(img, k);
    const Image b = convolve(img, k);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.pixels()[i], b.pixels()[i], 1e-6);
}

TEST(Convolve, PreservesConstantsAndMass) {
    Image flat(80, 60, Domain::counts, 12, 1234.0);
    for (double r : {0.0, 2.5, 12.0, 16.0}) {
        const Image out = convolve(flat, disc_kernel(r));
        for (double v : out.pixels()) ASSERT_NEAR(v, 1234.0, 1e-8);
    }
}

TEST(Convolve, KernelLargerThanImageRejected) {
    Image small(10, 10);
    EXPECT_THROW(convolve(small, disc_kernel(6.0)), DataError);
}

TEST(Convolve, ReusableConvolverMatchesOneShot) {
    support::Rng rng(4);
    const auto k = disc_kernel(18.0);
    const Convolver conv(k, 80, 70);
    for (int t = 0; t < 3; ++t) {
        const Image img = support::random_image(rng, 80, 70, 0.0, 4095.0);
        const Image a = conv(img), b = convolve_direct(img, k);
        for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.pixels()[i], b.pixels()[i], 1e-6);
    }
}

namespace {

Image disc_mask(int size) { return support::disc_image(size, size, (size - 1) / 2.0, (size - 1) / 2.0, 100.0, 0.0, 4095.0); }

Rect centre_roi(int size, double margin) {
    const int lo = std::max(0, static_cast<int>(std::floor((size - 1) / 2.0 - 100.0 - margin)));
    const int w = std::min(size - lo, static_cast<int>(std::ceil(200.0 + 2.0 * margin)) + 1);
    return {lo, lo, w, w};
}

}  // namespace

TEST(EstimateRadius, RecoversNoiselessRadius) {
    const Image mask = disc_mask(300);
    for (double r : {2.0, 5.0, 10.0, 20.0}) {
        const Image obs = quantize(convolve(mask, disc_kernel(r)));
        const auto est = estimate_radius(mask, obs, RadiusSearch{}, centre_roi(300, 35.0));
        EXPECT_NEAR(est.radius, r, 0.5);
    }
}

TEST(EstimateRadius, RecoversRadiusUnderUniformNoise) {
    const Image mask = disc_mask(300);
    support::Rng rng(0);
    for (double r : {2.0, 5.0, 10.0, 20.0}) {
        Image obs = convolve(mask, disc_kernel(r));
        for (double& v : obs.pixels()) v += support::uniform(rng, -2.0, 2.0);
        const auto est = estimate_radius(mask, quantize(obs), RadiusSearch{}, centre_roi(300, 35.0));
        EXPECT_NEAR(est.radius, r, 1.0);
    }
}

TEST(EstimateRadius, ResidualMatchesFullFrameModel) {
    support::Rng rng(6);
    const Image mask = support::random_image(rng, 90, 70, 0.0, 4095.0, true);
    const Image obs = quantize(convolve(mask, disc_kernel(4.0)));
    for (const Rect roi : {Rect{30, 25, 20, 15}, Rect{0, 0, 25, 70}, Rect{60, 50, 30, 20}}) {
        const RadiusSearch one{3.0, 3.0, 1.0};
        const Image model = convolve(mask, disc_kernel(3.0));
        double sq = 0.0;
        for (int y = roi.y; y < roi.y + roi.height; ++y)
            for (int x = roi.x; x < roi.x + roi.width; ++x) sq += std::pow(model(x, y) - obs(x, y), 2);
        EXPECT_NEAR(estimate_radius(mask, obs, one, roi).residual, std::sqrt(sq), 1e-9);
    }
}

TEST(EstimateRadius, InvalidSearchRejected) {
    const Image m(32, 32);
    EXPECT_THROW(estimate_radius(m, m, RadiusSearch{5.0, 2.0, 0.5}, Rect{0, 0, 32, 32}), DataError);
    EXPECT_THROW(estimate_radius(m, m, RadiusSearch{}, Rect{0, 0, 40, 32}), DataError);
}
