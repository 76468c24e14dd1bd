#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "occlumask/config.hpp"
#include "occlumask/error.hpp"
#include "occlumask/image.hpp"
#include "occlumask/parallel.hpp"
#include "occlumask/psf.hpp"
#include "occlumask/radiometry.hpp"

/// Occlusion-quality classification, morphological mask expansion and the
/// brute-force search for the expansion radius that maximizes the occlusion score.
///
/// Effective occlusion is "simulated level at or below the threshold", so the
/// optimizer works with increasing transmittance curves (lower level = more opaque).
namespace occlumask::optimizer {

/// Scene split into the bright set B (I_SC >= t_b) and its complement D,
/// refined by the simulated eye-camera view into effective / blurred parts.
struct RegionPartition {
    PixelSet bright;
    PixelSet dark;
    PixelSet bright_effective;
    PixelSet bright_blurred;
    PixelSet dark_effective;
    PixelSet dark_blurred;
};

/// Only the B / D fields are filled.
inline RegionPartition classify_bright(const Image& scene, double t_b) {
    require_domain(scene, Domain::counts, "classify_bright");
    RegionPartition p;
    p.bright = PixelSet(scene.width(), scene.height());
    auto px = scene.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) p.bright.set(i, px[i] >= t_b);
    p.dark = p.bright.complement();
    return p;
}

/// t_e(x,y) = kappa / f_s'(I_m(x,y)), clamped to [0, max_count].
inline Image effective_threshold(const Image& mask, const radiometry::TransmittanceCurve& trans, double kappa) {
    require_domain(mask, Domain::counts, "effective_threshold");
    Image te = mask.like(Domain::counts);
    const double hi = mask.max_count();
    auto m = mask.pixels();
    auto t = te.pixels();
    for (std::size_t i = 0; i < m.size(); ++i) t[i] = std::clamp(kappa / trans.derivative(m[i]), 0.0, hi);
    return te;
}

/// Most opaque naive level inside B (whole frame when B is empty).
inline double deepest_level(const Image& naive, const PixelSet& bright) {
    double deepest = std::numeric_limits<double>::infinity();
    const bool any = bright.count() > 0;
    auto m = naive.pixels();
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!any || bright.contains(i)) deepest = std::min(deepest, m[i]);
    return deepest;
}

/// Levels the threshold is referenced to: the naive mask on B, and the
/// deepest B level on D, so that leaks into D are judged by the occluder's
/// own blocking criterion.
inline Image threshold_reference(const Image& naive, const PixelSet& bright) {
    if (bright.count() == 0) return naive;
    const double deepest = deepest_level(naive, bright);
    Image ref = naive;
    auto r = ref.pixels();
    for (std::size_t i = 0; i < r.size(); ++i)
        if (!bright.contains(i)) r[i] = deepest;
    return ref;
}

/// kappa placing t_e at `anchor` times the deepest naive level, where the
/// in-focus simulation reproduces the level itself.
inline double anchored_te_scale(const Image& naive, const PixelSet& bright, const radiometry::TransmittanceCurve& trans,
                                double anchor = 1.10) {
    const double deepest = deepest_level(naive, bright);
    return anchor * deepest * trans.derivative(deepest);
}

/// Splits B and D by comparing the simulated view against t_e.
inline RegionPartition partition_effective(const RegionPartition& scene_partition, const Image& i_ec, const Image& t_e) {
    require_same_shape(i_ec, t_e, "partition_effective");
    if (!scene_partition.bright.congruent(i_ec)) throw DataError("partition_effective: dimension mismatch");
    RegionPartition p;
    p.bright = scene_partition.bright;
    p.dark = scene_partition.dark;
    const int w = i_ec.width(), h = i_ec.height();
    p.bright_effective = PixelSet(w, h);
    p.bright_blurred = PixelSet(w, h);
    p.dark_effective = PixelSet(w, h);
    p.dark_blurred = PixelSet(w, h);
    auto v = i_ec.pixels();
    auto t = t_e.pixels();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const bool effective = v[i] <= t[i];
        if (p.bright.contains(i)) (effective ? p.bright_effective : p.bright_blurred).set(i, true);
        else (effective ? p.dark_effective : p.dark_blurred).set(i, true);
    }
    return p;
}

namespace detail {

// Sliding minimum over [i - reach, i + reach] truncated to [0, n).
inline void window_min_1d(const double* in, double* out, int n, std::ptrdiff_t stride, int reach) {
    std::deque<int> q;
    int next = 0;
    for (int i = 0; i < n; ++i) {
        const int hi = std::min(n - 1, i + reach);
        for (; next <= hi; ++next) {
            while (!q.empty() && in[q.back() * stride] >= in[next * stride]) q.pop_back();
            q.push_back(next);
        }
        while (q.front() < i - reach) q.pop_front();
        out[i * stride] = in[q.front() * stride];
    }
}

}  // namespace detail

/// Grayscale erosion over the square window -alpha < m, n < alpha, i.e.
/// (2 alpha - 1)^2 pixels. alpha = 0 and alpha = 1 leave the mask unchanged.
inline Image expand_mask(const Image& mask, int alpha) {
    if (alpha < 0) throw DataError("expand_mask: alpha must be non-negative");
    if (alpha <= 1) return mask;
    const int reach = alpha - 1;
    const int w = mask.width(), h = mask.height();
    Image tmp = mask;
    for (int y = 0; y < h; ++y)
        detail::window_min_1d(&mask.pixels()[static_cast<std::size_t>(y) * w], &tmp.pixels()[static_cast<std::size_t>(y) * w],
                              w, 1, reach);
    Image out = tmp;
    for (int x = 0; x < w; ++x) detail::window_min_1d(&tmp.pixels()[x], &out.pixels()[x], h, w, reach);
    return out;
}

/// Disc blur of an expanded mask, requantized to integer levels.
inline Image blur_expanded_mask(const Image& mask, double blur_r) {
    if (!(blur_r >= 0.0)) throw DataError("blur_expanded_mask: radius must be non-negative");
    const psf::DiscKernel k = psf::disc_kernel(blur_r);
    if (k.is_identity()) return mask;
    return quantize(psf::convolve(mask, k));
}

/// Aperture-based expansion: the smallest alpha whose window reaches the full blur radius.
inline int aperture_alpha(double kernel_radius_px) {
    return kernel_radius_px <= 0.5 ? 0 : static_cast<int>(std::ceil(kernel_radius_px - 1e-9));
}

enum class DarkPenalty {
    transparency,  ///< sigma4 * f_s(I_EC), as in the objective
    opacity,       ///< sigma4 * (1 - f_s(I_EC))
};

struct OptimizerConfig {
    std::array<double, 4> sigma{3.0, 1.0, 1.0, 1.0};
    double t_b = 2048.0;
    std::optional<double> te_scale;  ///< kappa; unset = anchored default
    double te_anchor = 1.10;
    int alpha_min = 0;
    int alpha_max = 60;
    bool blur_after_expand = false;
    std::optional<double> blur_radius_px;  ///< unset = PSF kernel radius
    bool normalize_fs_in_score = false;
    DarkPenalty dark_penalty = DarkPenalty::transparency;
    bool enforce_sigma_ratio = true;

    /// Returns warnings; throws for hard violations.
    std::vector<std::string> validate() const {
        std::vector<std::string> warnings;
        for (double s : sigma)
            if (!(s >= 0.0) || !std::isfinite(s)) throw UsageError("optimizer weights must be non-negative");
        if (alpha_min < 0 || alpha_max < alpha_min) throw UsageError("optimizer alpha range is empty or negative");
        if (!(te_anchor > 0.0)) throw UsageError("optimizer te_anchor must be positive");
        if (te_scale && !(*te_scale > 0.0)) throw UsageError("optimizer te_scale must be positive");
        if (blur_radius_px && !(*blur_radius_px >= 0.0)) throw UsageError("optimizer blur radius must be >= 0");
        const double others = std::max({sigma[1], sigma[2], sigma[3]});
        if (sigma[0] < 3.0 * others) {
            const std::string msg = "sigma1 is less than 3x max(sigma2..sigma4); a unique extremum is not guaranteed";
            if (enforce_sigma_ratio) throw UsageError(msg + " (set optimizer.enforce_sigma_ratio=false to override)");
            warnings.push_back(msg);
        }
        return warnings;
    }
};

/// Read-only state shared by every score evaluation of one sweep.
class ScoreContext {
public:
    ScoreContext(const Image& scene, const Image& naive_mask, const psf::DiscKernel& kernel,
                 const radiometry::TransmittanceCurve& trans, OptimizerConfig config)
        : naive_(naive_mask), trans_(trans), config_(std::move(config)),
          convolver_(kernel, naive_mask.width(), naive_mask.height()) {
        require_domain(naive_mask, Domain::counts, "ScoreContext");
        require_same_shape(scene, naive_mask, "ScoreContext (scene vs mask grid)");
        if (trans.orientation() != radiometry::Orientation::increasing)
            throw UsageError("the optimizer requires an increasing transmittance curve");
        warnings_ = config_.validate();
        partition_ = classify_bright(scene, config_.t_b);
        kappa_ = config_.te_scale ? *config_.te_scale : anchored_te_scale(naive_, partition_.bright, trans_, config_.te_anchor);
        t_e_ = effective_threshold(threshold_reference(naive_, partition_.bright), trans_, kappa_);
        blur_radius_ = config_.blur_radius_px ? *config_.blur_radius_px : kernel.radius();
    }

    const Image& naive_mask() const { return naive_; }
    const RegionPartition& scene_partition() const { return partition_; }
    const Image& t_e() const { return t_e_; }
    double kappa() const { return kappa_; }
    const radiometry::TransmittanceCurve& transmittance() const { return trans_; }
    const OptimizerConfig& config() const { return config_; }
    const psf::DiscKernel& kernel() const { return convolver_.kernel(); }
    double blur_radius() const { return blur_radius_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// The mask displayed for expansion radius alpha (expanded, then blurred when configured).
    Image candidate_mask(int alpha) const {
        Image m = expand_mask(naive_, alpha);
        return config_.blur_after_expand ? blur_expanded_mask(m, blur_radius_) : m;
    }

    /// I_EC = mask conv H_OOF.
    Image simulate(const Image& mask) const { return convolver_(mask); }

    /// f_s as it enters the score: raw or min-max normalized.
    double score_fs(double level) const {
        return config_.normalize_fs_in_score ? trans_.normalized(level) : trans_.transmittance(level);
    }

private:
    Image naive_;
    radiometry::TransmittanceCurve trans_;
    OptimizerConfig config_;
    psf::Convolver convolver_;
    RegionPartition partition_;
    Image t_e_;
    double kappa_ = 0.0;
    double blur_radius_ = 0.0;
    std::vector<std::string> warnings_;
};

struct ScoreBreakdown {
    double score = 0.0;
    std::size_t bright_effective = 0;
    std::size_t bright_blurred = 0;
    std::size_t dark_effective = 0;
    std::size_t dark_blurred = 0;
};

/// S = s1 |B_e| + s2 sum_{B_b} (1 - 2 f_s(I_EC)) - s3 |D_e| - s4 sum_{D_b} f_s(I_EC)
/// for an already simulated view.
inline ScoreBreakdown score_view(const ScoreContext& ctx, const Image& i_ec) {
    const RegionPartition p = partition_effective(ctx.scene_partition(), i_ec, ctx.t_e());
    const auto& s = ctx.config().sigma;
    const bool opacity = ctx.config().dark_penalty == DarkPenalty::opacity;
    auto v = i_ec.pixels();
    double bright_blur_sum = 0.0;
    double dark_blur_sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (p.bright_blurred.contains(i)) bright_blur_sum += 1.0 - 2.0 * ctx.score_fs(v[i]);
        else if (p.dark_blurred.contains(i)) {
            const double f = ctx.score_fs(v[i]);
            dark_blur_sum += opacity ? 1.0 - f : f;
        }
    }
    ScoreBreakdown b;
    b.bright_effective = p.bright_effective.count();
    b.bright_blurred = p.bright_blurred.count();
    b.dark_effective = p.dark_effective.count();
    b.dark_blurred = p.dark_blurred.count();
    b.score = s[0] * static_cast<double>(b.bright_effective) + s[1] * bright_blur_sum -
              s[2] * static_cast<double>(b.dark_effective) - s[3] * dark_blur_sum;
    return b;
}

inline ScoreBreakdown score_mask(const ScoreContext& ctx, const Image& mask) { return score_view(ctx, ctx.simulate(mask)); }

inline ScoreBreakdown score(int alpha, const ScoreContext& ctx) {
    const auto& cfg = ctx.config();
    if (alpha < cfg.alpha_min || alpha > cfg.alpha_max)
        throw DataError("score: alpha " + std::to_string(alpha) + " outside [" + std::to_string(cfg.alpha_min) + ", " +
                        std::to_string(cfg.alpha_max) + "]");
    return score_mask(ctx, ctx.candidate_mask(alpha));
}

struct ScoreCurve {
    std::vector<int> alpha;
    std::vector<double> score;
    int argmax = 0;
    std::vector<std::string> warnings;

    double best() const {
        for (std::size_t i = 0; i < alpha.size(); ++i)
            if (alpha[i] == argmax) return score[i];
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// Number of strict interior local maxima (plateaus count once).
    int interior_local_maxima() const {
        int count = 0;
        const std::size_t n = score.size();
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (!(score[i] > score[i - 1])) continue;
            std::size_t j = i;
            while (j + 1 < n && score[j + 1] == score[i]) ++j;
            if (j + 1 < n && score[j + 1] < score[i]) ++count;
            i = j;
        }
        return count;
    }
};

/// Smallest index holding the maximum.
inline std::size_t argmax_index(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

/// Evaluates the score at every integer alpha in the configured range.
inline ScoreCurve optimize(const ScoreContext& ctx) {
    const auto& cfg = ctx.config();
    ScoreCurve curve;
    for (int a = cfg.alpha_min; a <= cfg.alpha_max; ++a) curve.alpha.push_back(a);
    curve.score.resize(curve.alpha.size());
    parallel_for(curve.alpha.size(), [&](std::size_t i) { curve.score[i] = score(curve.alpha[i], ctx).score; });
    const std::size_t best = argmax_index(curve.score);
    curve.argmax = curve.alpha[best];
    curve.warnings = ctx.warnings();
    if (curve.alpha.size() > 1 && curve.argmax == cfg.alpha_max)
        curve.warnings.push_back("score maximum lies on the upper end of the alpha range; no interior extremum found");
    return curve;
}

inline void write_score_csv(std::ostream& os, const ScoreCurve& curve) {
    os << "alpha,score\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.alpha.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.6f\n", curve.alpha[i], curve.score[i]);
        os << buf;
    }
}

/// 8-bit label raster: B_e = 255, B_b = 170, D_e = 85, D_b = 0.
inline Image partition_labels(const RegionPartition& p) {
    Image out(p.bright.width(), p.bright.height(), Domain::counts, 8);
    auto o = out.pixels();
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (p.bright_effective.contains(i)) o[i] = 255;
        else if (p.bright_blurred.contains(i)) o[i] = 170;
        else if (p.dark_effective.contains(i)) o[i] = 85;
        else o[i] = 0;
    }
    return out;
}

struct RadiusMapRow {
    double aperture_mm = 0.0;
    double kernel_radius_px = 0.0;
    int alpha_opt = 0;
};

struct RadiusMap {
    std::vector<RadiusMapRow> rows;
    bool monotone = true;
};

/// Optimal alpha per aperture diameter, all other geometry held fixed.
inline RadiusMap radius_map(const std::vector<double>& apertures_mm, const psf::BlurGeometry& geometry,
                            const Image& scene, const Image& naive_mask, const radiometry::TransmittanceCurve& trans,
                            const OptimizerConfig& config) {
    if (apertures_mm.empty()) throw DataError("radius_map: no apertures given");
    RadiusMap map;
    for (double a : apertures_mm) {
        if (!(a > 0.0)) throw DataError("radius_map: apertures must be positive");
        psf::BlurGeometry g = geometry;
        g.aperture_mm = a;
        const double r = psf::blur_radius_px(g);
        const ScoreContext ctx(scene, naive_mask, psf::disc_kernel(r), trans, config);
        map.rows.push_back({a, r, optimize(ctx).argmax});
    }
    std::vector<std::size_t> order(map.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return map.rows[x].aperture_mm < map.rows[y].aperture_mm; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (map.rows[order[i]].alpha_opt < map.rows[order[i - 1]].alpha_opt) map.monotone = false;
    return map;
}

// Config schema (prefix "optimizer."): sigma1..sigma4, t_b, te_scale, te_anchor,
// alpha_min, alpha_max, blur_after_expand, blur_radius_px (number | auto),
// normalize_fs_in_score, dark_penalty (transparency | opacity), enforce_sigma_ratio.
inline OptimizerConfig load_optimizer(const Config& cfg, const std::string& prefix = "optimizer.") {
    OptimizerConfig o;
    for (int i = 0; i < 4; ++i)
        o.sigma[static_cast<std::size_t>(i)] =
            cfg.get_double(prefix + "sigma" + std::to_string(i + 1), o.sigma[static_cast<std::size_t>(i)]);
    o.t_b = cfg.get_double(prefix + "t_b", o.t_b);
    if (cfg.has(prefix + "te_scale")) o.te_scale = cfg.get_double(prefix + "te_scale", 0.0);
    o.te_anchor = cfg.get_double(prefix + "te_anchor", o.te_anchor);
    o.alpha_min = cfg.get_int(prefix + "alpha_min", o.alpha_min);
    o.alpha_max = cfg.get_int(prefix + "alpha_max", o.alpha_max);
    o.blur_after_expand = cfg.get_bool(prefix + "blur_after_expand", o.blur_after_expand);
    if (const std::string b = cfg.get_string(prefix + "blur_radius_px", "auto"); b != "auto")
        o.blur_radius_px = cfg.get_double(prefix + "blur_radius_px", 0.0);
    o.normalize_fs_in_score = cfg.get_bool(prefix + "normalize_fs_in_score", o.normalize_fs_in_score);
    const std::string dp = cfg.get_string(prefix + "dark_penalty", "transparency");
    if (dp == "transparency") o.dark_penalty = DarkPenalty::transparency;
    else if (dp == "opacity") o.dark_penalty = DarkPenalty::opacity;
    else throw UsageError(prefix + "dark_penalty must be transparency or opacity");
    o.enforce_sigma_ratio = cfg.get_bool(prefix + "enforce_sigma_ratio", o.enforce_sigma_ratio);
    return o;
}

}  // namespace occlumask::optimizer
