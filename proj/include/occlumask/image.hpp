#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "occlumask/error.hpp"

namespace occlumask {

/// What the samples of an Image mean.
enum class Domain {
    counts,    ///< sensor or panel levels, 0..2^bit_depth-1
    radiance,  ///< relative scene radiance, full scale = 1
    fraction,  ///< transmittance or other [0,1] quantity
};

inline const char* to_string(Domain d) {
    switch (d) {
        case Domain::counts: return "counts";
        case Domain::radiance: return "radiance";
        case Domain::fraction: return "fraction";
    }
    return "?";
}

/// Round-half-up; the single rounding rule used for every count quantization.
inline double round_half_up(double v) { return std::floor(v + 0.5); }

inline int max_count_for(int bit_depth) { return (1 << bit_depth) - 1; }

/// Row-major monochrome raster. Samples are stored as double so that simulated
/// (continuous) intensities and quantized levels share one carrier.
class Image {
public:
    Image() = default;

    Image(int width, int height, Domain domain = Domain::counts, int bit_depth = 12, double fill = 0.0)
        : width_(width), height_(height), bit_depth_(bit_depth), domain_(domain) {
        if (width <= 0 || height <= 0)
            throw DataError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                            std::to_string(height));
        if (bit_depth < 1 || bit_depth > 16)
            throw DataError("bit depth must be in [1,16], got " + std::to_string(bit_depth));
        pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int bit_depth() const { return bit_depth_; }
    int max_count() const { return max_count_for(bit_depth_); }
    Domain domain() const { return domain_; }
    std::size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    double& operator()(int x, int y) { return pixels_[index(x, y)]; }
    double operator()(int x, int y) const { return pixels_[index(x, y)]; }

    /// Replicate-edge access: coordinates outside the raster clamp to the border.
    double clamped(int x, int y) const {
        x = std::clamp(x, 0, width_ - 1);
        y = std::clamp(y, 0, height_ - 1);
        return pixels_[index(x, y)];
    }

    std::span<double> pixels() { return pixels_; }
    std::span<const double> pixels() const { return pixels_; }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    /// Same geometry and bit depth, new domain and contents.
    Image like(Domain domain, double fill = 0.0) const {
        return Image(width_, height_, domain, bit_depth_, fill);
    }

    friend bool operator==(const Image& a, const Image& b) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    int bit_depth_ = 12;
    Domain domain_ = Domain::counts;
    std::vector<double> pixels_;
};

inline void require_domain(const Image& img, Domain expected, const char* what) {
    if (img.domain() != expected)
        throw DataError(std::string(what) + ": expected " + to_string(expected) + " image, got " +
                        to_string(img.domain()));
}

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b))
        throw DataError(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                        std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                        std::to_string(b.height()) + ")");
}

/// Round every sample to an integer count and clamp into [0, max_count].
inline Image quantize(Image img) {
    const double hi = img.max_count();
    for (double& v : img.pixels()) v = std::clamp(round_half_up(v), 0.0, hi);
    return img;
}

/// Axis-aligned pixel rectangle [x, x+width) x [y, y+height).
struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool empty() const { return width <= 0 || height <= 0; }
    bool inside(int w, int h) const { return x >= 0 && y >= 0 && x + width <= w && y + height <= h; }

    /// Grown by `by` pixels on every side, then clipped to a w x h raster.
    Rect grown(int by, int w, int h) const {
        const int x0 = std::max(0, x - by), y0 = std::max(0, y - by);
        const int x1 = std::min(w, x + width + by), y1 = std::min(h, y + height + by);
        return {x0, y0, x1 - x0, y1 - y0};
    }
};

inline Image crop(const Image& img, const Rect& r) {
    if (r.empty() || !r.inside(img.width(), img.height())) throw DataError("crop: rectangle outside the image");
    Image out(r.width, r.height, img.domain(), img.bit_depth());
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) out(x, y) = img(r.x + x, r.y + y);
    return out;
}

/// Boolean grid congruent with an Image.
class PixelSet {
public:
    PixelSet() = default;
    PixelSet(int width, int height, bool value = false)
        : width_(width), height_(height),
          bits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), value ? 1 : 0) {}

    static PixelSet from_rect(int width, int height, const Rect& r) {
        if (!r.inside(width, height)) throw DataError("region lies outside the image");
        PixelSet s(width, height);
        for (int y = r.y; y < r.y + r.height; ++y)
            for (int x = r.x; x < r.x + r.width; ++x) s.set(x, y, true);
        return s;
    }

    int width() const { return width_; }
    int height() const { return height_; }

    bool contains(int x, int y) const { return bits_[index(x, y)] != 0; }
    void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }

    bool contains(std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
    std::size_t size() const { return bits_.size(); }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }

    bool congruent(const Image& img) const { return width_ == img.width() && height_ == img.height(); }

    PixelSet complement() const {
        PixelSet out = *this;
        for (auto& b : out.bits_) b = b ? 0 : 1;
        return out;
    }

    friend bool operator==(const PixelSet& a, const PixelSet& b) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

}  // namespace occlumask
