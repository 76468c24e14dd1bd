#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "occlumask/error.hpp"
#include "occlumask/image.hpp"
#include "occlumask/optimizer.hpp"

namespace occlumask::metrics {

/// Standard deviation of I / max_count over the ROI.
inline double rms_contrast(const Image& img, const PixelSet& roi) {
    if (!roi.congruent(img)) throw DataError("rms_contrast: ROI does not match image");
    const double scale = 1.0 / img.max_count();
    auto px = img.pixels();
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < px.size(); ++i)
        if (roi.contains(i)) {
            sum += px[i] * scale;
            ++n;
        }
    if (n == 0) throw DataError("rms_contrast: empty ROI");
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i)
        if (roi.contains(i)) {
            const double d = px[i] * scale - mean;
            sq += d * d;
        }
    return std::sqrt(sq / static_cast<double>(n));
}

inline double rms_contrast(const Image& img, const Rect& roi) {
    return rms_contrast(img, PixelSet::from_rect(img.width(), img.height(), roi));
}

inline double rms_contrast(const Image& img) { return rms_contrast(img, PixelSet(img.width(), img.height(), true)); }

/// Pixels of `region` where the simulated view is at or below t_e.
inline std::size_t effective_occlusion_area(const Image& i_ec, const Image& t_e, const PixelSet& region) {
    require_same_shape(i_ec, t_e, "effective_occlusion_area");
    if (!region.congruent(i_ec)) throw DataError("effective_occlusion_area: region does not match image");
    auto v = i_ec.pixels();
    auto t = t_e.pixels();
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (region.contains(i) && v[i] <= std::max(t[i], 0.0)) ++n;
    return n;
}

struct MaskReport {
    std::string variant;
    std::size_t effective_area = 0;  ///< |B_e|
    std::size_t leak_area = 0;       ///< |D_e|: dark pixels still occluded
    double rms_contrast = 0.0;       ///< of the simulated view, full frame
    double peak_bright_leak = 0.0;   ///< max simulated level over B (higher = more light through)
    double score = 0.0;

    friend bool operator==(const MaskReport&, const MaskReport&) = default;
};

/// Report for a mask as the eye camera sees it under the context's PSF.
inline MaskReport evaluate_mask(const optimizer::ScoreContext& ctx, const Image& mask, std::string variant) {
    const Image i_ec = ctx.simulate(mask);
    const auto s = optimizer::score_view(ctx, i_ec);
    const auto& part = ctx.scene_partition();
    MaskReport r;
    r.variant = std::move(variant);
    r.effective_area = effective_occlusion_area(i_ec, ctx.t_e(), part.bright);
    r.leak_area = effective_occlusion_area(i_ec, ctx.t_e(), part.dark);
    r.rms_contrast = rms_contrast(i_ec);
    auto v = i_ec.pixels();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (part.bright.contains(i)) r.peak_bright_leak = std::max(r.peak_bright_leak, v[i]);
    r.score = s.score;
    return r;
}

/// One report per named variant, all under the same scene, kernel and thresholds.
inline std::vector<MaskReport> compare_masks(const optimizer::ScoreContext& ctx,
                                             const std::vector<std::pair<std::string, Image>>& variants) {
    for (const auto& [name, mask] : variants) require_same_shape(mask, ctx.naive_mask(), "compare_masks");
    std::vector<MaskReport> out(variants.size());
    parallel_for(variants.size(), [&](std::size_t i) { out[i] = evaluate_mask(ctx, variants[i].second, variants[i].first); });
    return out;
}

inline void write_report_csv(std::ostream& os, const std::vector<MaskReport>& reports) {
    os << "variant,effective_area,leak_area,rms_contrast,peak_bright_leak,score\n";
    char buf[256];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.9f,%.6f,%.6f\n", r.variant.c_str(), r.effective_area, r.leak_area,
                      r.rms_contrast, r.peak_bright_leak, r.score);
        os << buf;
    }
}

inline void write_report_text(std::ostream& os, const std::vector<MaskReport>& reports) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-18s %12s %10s %12s %12s %16s\n", "variant", "effective", "leak", "rms", "peak_leak",
                  "score");
    os << buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%-18s %12zu %10zu %12.6f %12.2f %16.3f\n", r.variant.c_str(), r.effective_area,
                      r.leak_area, r.rms_contrast, r.peak_bright_leak, r.score);
        os << buf;
    }
}

}  // namespace occlumask::metrics
