#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <fftw3.h>

#include "occlumask/error.hpp"
#include "occlumask/image.hpp"
#include "occlumask/parallel.hpp"

/// Out-of-focus point spread function of the panel plane: a normalized disc.
namespace occlumask::psf {

/// Optical layout that sets the defocus blur radius. Lengths in mm.
struct BlurGeometry {
    double aperture_mm = 3.8;
    double focal_depth_mm = 2000.0;
    double panel_depth_mm = 10.0;
    double pixel_pitch_mm = 36.9 / 1024.0;

    void validate() const {
        if (!(aperture_mm > 0.0)) throw DataError("blur geometry: aperture must be positive");
        if (!(focal_depth_mm > 0.0)) throw DataError("blur geometry: focal depth must be positive");
        if (!(panel_depth_mm > 0.0 && panel_depth_mm < focal_depth_mm) && panel_depth_mm != focal_depth_mm)
            throw DataError("blur geometry: need 0 < panel depth < focal depth");
        if (!(pixel_pitch_mm > 0.0)) throw DataError("blur geometry: pixel pitch must be positive");
    }
};

/// r = (a/2) |1 - D'/D|, in mm.
inline double blur_radius_mm(const BlurGeometry& g) {
    g.validate();
    return 0.5 * g.aperture_mm * std::abs(1.0 - g.panel_depth_mm / g.focal_depth_mm);
}

inline double blur_radius_px(const BlurGeometry& g) { return blur_radius_mm(g) / g.pixel_pitch_mm; }

namespace detail {

// Antiderivative of sqrt(r^2 - x^2).
inline double half_chord_integral(double x, double r) {
    const double u = std::clamp(x / r, -1.0, 1.0);
    const double xc = u * r;
    return 0.5 * (xc * std::sqrt(std::max(0.0, r * r - xc * xc)) + r * r * std::asin(u));
}

}  // namespace detail

/// Exact area of the disc of radius r centred at the origin intersected with
/// the rectangle [x0,x1] x [y0,y1].
inline double disc_rect_area(double r, double x0, double x1, double y0, double y1) {
    const double a = std::max(x0, -r);
    const double b = std::min(x1, r);
    if (!(a < b) || !(y0 < y1)) return 0.0;

    double cuts[8];
    int nc = 0;
    cuts[nc++] = a;
    cuts[nc++] = b;
    for (double y : {y0, y1}) {
        if (std::abs(y) < r) {
            const double c = std::sqrt(r * r - y * y);
            if (c > a && c < b) cuts[nc++] = c;
            if (-c > a && -c < b) cuts[nc++] = -c;
        }
    }
    std::sort(cuts, cuts + nc);

    double area = 0.0;
    for (int i = 0; i + 1 < nc; ++i) {
        const double p = cuts[i], q = cuts[i + 1];
        if (!(q > p)) continue;
        const double m = 0.5 * (p + q);
        const double h = std::sqrt(std::max(0.0, r * r - m * m));
        const bool top_is_arc = h < y1;
        const bool bottom_is_arc = -h > y0;
        if (std::min(h, y1) <= std::max(-h, y0)) continue;
        const double arc = detail::half_chord_integral(q, r) - detail::half_chord_integral(p, r);
        const double top = top_is_arc ? arc : y1 * (q - p);
        const double bottom = bottom_is_arc ? -arc : y0 * (q - p);
        area += top - bottom;
    }
    return area;
}

/// Normalized disc PSF sampled on a (2n+1)^2 grid, n = ceil(r).
class DiscKernel {
public:
    double radius() const { return radius_; }
    int half_size() const { return half_; }
    int size() const { return 2 * half_ + 1; }

    /// Tap at offset (dx, dy) from the centre, |dx|,|dy| <= half_size().
    double operator()(int dx, int dy) const {
        return taps_[static_cast<std::size_t>(dy + half_) * static_cast<std::size_t>(size()) +
                     static_cast<std::size_t>(dx + half_)];
    }

    const std::vector<double>& taps() const { return taps_; }
    bool is_identity() const { return half_ == 0; }

    static DiscKernel identity() {
        DiscKernel k;
        k.taps_ = {1.0};
        return k;
    }

private:
    friend DiscKernel disc_kernel(double);
    double radius_ = 0.0;
    int half_ = 0;
    std::vector<double> taps_;
};

/// Taps carry the exact pixel/disc overlap area, restricted to pixels whose
/// centre lies within r + 0.5, then normalized to sum 1. r <= 0.5 gives the
/// single-tap identity.
inline DiscKernel disc_kernel(double r) {
    if (!std::isfinite(r)) throw DataError("disc_kernel: radius must be finite");
    if (r < 0.0) throw DataError("disc_kernel: radius must be non-negative");
    if (r <= 0.5) {
        DiscKernel k = DiscKernel::identity();
        k.radius_ = r;
        return k;
    }
    DiscKernel k;
    k.radius_ = r;
    k.half_ = static_cast<int>(std::ceil(r));
    const int n = k.half_;
    const double reach = (r + 0.5) * (r + 0.5);
    k.taps_.assign(static_cast<std::size_t>(k.size()) * static_cast<std::size_t>(k.size()), 0.0);
    double sum = 0.0;
    for (int y = -n; y <= n; ++y) {
        for (int x = -n; x <= n; ++x) {
            if (x * x + y * y > reach) continue;
            const double w = disc_rect_area(r, x - 0.5, x + 0.5, y - 0.5, y + 0.5);
            k.taps_[static_cast<std::size_t>(y + n) * static_cast<std::size_t>(k.size()) +
                    static_cast<std::size_t>(x + n)] = w;
            sum += w;
        }
    }
    for (double& w : k.taps_) w /= sum;
    return k;
}

inline void require_fits(const Image& img, const DiscKernel& k) {
    if (k.size() > img.width() || k.size() > img.height())
        throw DataError("convolve: kernel support " + std::to_string(k.size()) + " exceeds image " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()));
}

/// Direct spatial convolution with replicate-edge borders.
inline Image convolve_direct(const Image& img, const DiscKernel& k) {
    require_fits(img, k);
    if (k.is_identity()) return img;
    struct Tap {
        int dx, dy;
        double w;
    };
    std::vector<Tap> taps;
    const int n = k.half_size();
    for (int dy = -n; dy <= n; ++dy)
        for (int dx = -n; dx <= n; ++dx)
            if (double w = k(dx, dy); w != 0.0) taps.push_back({dx, dy, w});

    Image out = img;
    const int w = img.width();
    parallel_for(static_cast<std::size_t>(img.height()), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (const Tap& t : taps) acc += t.w * img.clamped(x - t.dx, y - t.dy);
            out(x, y) = acc;
        }
    });
    return out;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Smallest integer >= n whose prime factors are all in {2, 3, 5, 7}.
inline int smooth_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int v = m;
        for (int p : {2, 3, 5, 7})
            while (v % p == 0) v /= p;
        if (v == 1) return m;
    }
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

class Plan {
public:
    explicit Plan(fftw_plan p) : p_(p) {
        if (!p_) throw NumericError("FFTW planning failed");
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    ~Plan() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p_);
    }
    fftw_plan get() const { return p_; }

private:
    fftw_plan p_;
};

}  // namespace detail

/// Frequency-domain convolution for a fixed kernel and image size. The
/// kernel spectrum is computed once; convolve() is safe to call from several
/// threads at once.
class FftConvolver {
public:
    FftConvolver(const DiscKernel& kernel, int width, int height)
        : width_(width), height_(height), half_(kernel.half_size()) {
        if (kernel.size() > width || kernel.size() > height)
            throw DataError("convolve: kernel support " + std::to_string(kernel.size()) + " exceeds image " +
                            std::to_string(width) + "x" + std::to_string(height));
        nx_ = detail::smooth_size(width + 2 * half_);
        ny_ = detail::smooth_size(height + 2 * half_);
        const std::size_t real_n = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
        spectrum_n_ = static_cast<std::size_t>(ny_) * static_cast<std::size_t>(nx_ / 2 + 1);

        auto in = detail::fftw_alloc<double>(real_n);
        spectrum_ = detail::fftw_alloc<fftw_complex>(spectrum_n_);
        auto scratch = detail::fftw_alloc<fftw_complex>(spectrum_n_);
        {
            std::lock_guard lock(detail::fftw_planner_mutex());
            forward_ = std::make_unique<detail::Plan>(
                fftw_plan_dft_r2c_2d(ny_, nx_, in.get(), scratch.get(), FFTW_ESTIMATE));
            backward_ = std::make_unique<detail::Plan>(
                fftw_plan_dft_c2r_2d(ny_, nx_, scratch.get(), in.get(), FFTW_ESTIMATE));
        }
        std::fill(in.get(), in.get() + real_n, 0.0);
        for (int dy = -half_; dy <= half_; ++dy) {
            for (int dx = -half_; dx <= half_; ++dx) {
                const int u = (dx + nx_) % nx_;
                const int v = (dy + ny_) % ny_;
                in[static_cast<std::size_t>(v) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(u)] =
                    kernel(dx, dy);
            }
        }
        fftw_execute_dft_r2c(forward_->get(), in.get(), spectrum_.get());
    }

    Image convolve(const Image& img) const {
        if (img.width() != width_ || img.height() != height_)
            throw DataError("FftConvolver: image size differs from the planned size");
        const std::size_t real_n = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
        auto buf = detail::fftw_alloc<double>(real_n);
        auto freq = detail::fftw_alloc<fftw_complex>(spectrum_n_);
        std::fill(buf.get(), buf.get() + real_n, 0.0);
        const int pw = width_ + 2 * half_;
        const int ph = height_ + 2 * half_;
        for (int v = 0; v < ph; ++v)
            for (int u = 0; u < pw; ++u)
                buf[static_cast<std::size_t>(v) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(u)] =
                    img.clamped(u - half_, v - half_);

        fftw_execute_dft_r2c(forward_->get(), buf.get(), freq.get());
        for (std::size_t i = 0; i < spectrum_n_; ++i) {
            const double ar = freq[i][0], ai = freq[i][1];
            const double br = spectrum_[i][0], bi = spectrum_[i][1];
            freq[i][0] = ar * br - ai * bi;
            freq[i][1] = ar * bi + ai * br;
        }
        fftw_execute_dft_c2r(backward_->get(), freq.get(), buf.get());

        const double scale = 1.0 / static_cast<double>(real_n);
        Image out = img;
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x)
                out(x, y) = buf[static_cast<std::size_t>(y + half_) * static_cast<std::size_t>(nx_) +
                                static_cast<std::size_t>(x + half_)] *
                            scale;
        return out;
    }

private:
    int width_, height_, half_;
    int nx_ = 0, ny_ = 0;
    std::size_t spectrum_n_ = 0;
    detail::FftwBuffer<fftw_complex> spectrum_;
    std::unique_ptr<detail::Plan> forward_;
    std::unique_ptr<detail::Plan> backward_;
};

inline Image convolve_fft(const Image& img, const DiscKernel& k) {
    require_fits(img, k);
    if (k.is_identity()) return img;
    return FftConvolver(k, img.width(), img.height()).convolve(img);
}

/// Radius at or below which convolve() uses the direct path.
inline constexpr double kDirectRadiusLimit = 15.0;

/// I_EC = I_m conv H_OOF, replicate-edge, same size as the input.
inline Image convolve(const Image& img, const DiscKernel& k) {
    return k.radius() <= kDirectRadiusLimit ? convolve_direct(img, k) : convolve_fft(img, k);
}

/// Chooses the path once and reuses it for many images of one size.
class Convolver {
public:
    Convolver(const DiscKernel& kernel, int width, int height) : kernel_(kernel) {
        require_fits(Image(width, height), kernel);
        if (kernel.radius() > kDirectRadiusLimit) fft_.emplace(kernel, width, height);
    }
    Image operator()(const Image& img) const { return fft_ ? fft_->convolve(img) : convolve_direct(img, kernel_); }
    const DiscKernel& kernel() const { return kernel_; }

private:
    DiscKernel kernel_;
    std::optional<FftConvolver> fft_;
};

struct RadiusSearch {
    double r_min = 0.5;
    double r_max = 30.0;
    double step = 0.25;
};

struct RadiusEstimate {
    double radius = 0.0;
    double residual = 0.0;  ///< L2 norm of (model - observed) over the ROI
};

/// Grid search for argmin_r || mask conv H(r) - observed ||_2 over `roi`.
/// Ties resolve toward the smaller radius.
inline RadiusEstimate estimate_radius(const Image& mask, const Image& observed, const RadiusSearch& search,
                                      const Rect& roi) {
    require_same_shape(mask, observed, "estimate_radius");
    if (!(search.step > 0.0) || !(search.r_max >= search.r_min) || !(search.r_min >= 0.0))
        throw DataError("estimate_radius: empty search range");
    if (roi.empty() || !roi.inside(mask.width(), mask.height()))
        throw DataError("estimate_radius: ROI out of bounds");

    std::vector<double> radii;
    for (int i = 0;; ++i) {
        const double r = search.r_min + i * search.step;
        if (r > search.r_max + 1e-9) break;
        radii.push_back(r);
    }
    // Pixels farther than the widest kernel from the ROI cannot influence it.
    const int reach = disc_kernel(radii.back()).half_size();
    Rect window = roi.grown(reach, mask.width(), mask.height());
    if (window.width <= 2 * reach || window.height <= 2 * reach) window = {0, 0, mask.width(), mask.height()};
    const Image local = crop(mask, window);
    std::vector<double> residual(radii.size());
    parallel_for(radii.size(), [&](std::size_t i) {
        const Image model = convolve(local, disc_kernel(radii[i]));
        double sq = 0.0;
        for (int y = roi.y; y < roi.y + roi.height; ++y)
            for (int x = roi.x; x < roi.x + roi.width; ++x) {
                const double d = model(x - window.x, y - window.y) - observed(x, y);
                sq += d * d;
            }
        residual[i] = std::sqrt(sq);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (residual[i] < residual[best]) best = i;
    return {radii[best], residual[best]};
}

}  // namespace occlumask::psf
