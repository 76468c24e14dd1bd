#pragma once

// Seeded generators shared by the property tests.

#include <cstdint>
#include <random>

#include "occlumask.hpp"

namespace support {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * occlumask::scene::detail::unit_uniform(rng);
}

// Inclusive on both ends.
inline int uniform_int(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline occlumask::Image random_image(Rng& rng, int w, int h, double lo, double hi, bool integral = false,
                                     int bits = 12) {
    occlumask::Image img(w, h, occlumask::Domain::counts, bits);
    for (double& v : img.pixels()) {
        v = uniform(rng, lo, hi);
        if (integral) v = std::floor(v);
    }
    return img;
}

// Direct quadruple-loop convolution with replicated edges.
inline occlumask::Image brute_convolve(const occlumask::Image& img, const occlumask::psf::DiscKernel& k) {
    occlumask::Image out = img.like(img.domain());
    const int n = k.half_size();
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double s = 0.0;
            for (int dy = -n; dy <= n; ++dy)
                for (int dx = -n; dx <= n; ++dx) s += k(dx, dy) * img.clamped(x - dx, y - dy);
            out(x, y) = s;
        }
    return out;
}

// Window minimum with -alpha < m, n < alpha, clipped to the image.
inline occlumask::Image brute_expand(const occlumask::Image& m, int alpha) {
    if (alpha <= 1) return m;
    occlumask::Image out = m;
    const int r = alpha - 1;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            double v = m(x, y);
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = x + dx, yy = y + dy;
                    if (xx >= 0 && yy >= 0 && xx < m.width() && yy < m.height()) v = std::min(v, m(xx, yy));
                }
            out(x, y) = v;
        }
    return out;
}

inline occlumask::Image disc_image(int w, int h, double cx, double cy, double r, double inside, double outside,
                                   int bits = 12) {
    occlumask::Image img(w, h, occlumask::Domain::counts, bits, outside);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (std::hypot(x - cx, y - cy) <= r) img(x, y) = inside;
    return img;
}

}  // namespace support
