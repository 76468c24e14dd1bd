#pragma once

#include <cmath>
#include <concepts>
#include <cstdio>
#include <string>

#include "occlumask/calibration.hpp"
#include "occlumask/config.hpp"
#include "occlumask/error.hpp"
#include "occlumask/image.hpp"
#include "occlumask/radiometry.hpp"

/// Comfort modulation (scene intensity -> target intensity) and the naive
/// occlusion mask derived from it.
namespace occlumask::modulation {

/// f(I) = c2 I^2 + c1 I + c0 on [i_min, i_max], tangent to the identity at
/// i_min and meeting the line a_end * I at i_max.
class ModulationCurve {
public:
    ModulationCurve() = default;

    double i_min() const { return i_min_; }
    double i_max() const { return i_max_; }
    double a_end() const { return a_end_; }
    double c0() const { return c0_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }

    /// Unquantized target intensity; inputs outside [i_min, i_max] are clamped first.
    double operator()(double i_sc) const {
        const double i = std::clamp(i_sc, i_min_, i_max_);
        return (c2_ * i + c1_) * i + c0_;
    }

    double derivative(double i_sc) const { return 2.0 * c2_ * std::clamp(i_sc, i_min_, i_max_) + c1_; }

    friend bool operator==(const ModulationCurve&, const ModulationCurve&) = default;

private:
    friend ModulationCurve build_parabolic_curve(double, double, double);

    double i_min_ = 0.0;
    double i_max_ = 4095.0;
    double a_end_ = 1.0;
    double c0_ = 0.0;
    double c1_ = 1.0;
    double c2_ = 0.0;
};

/// Solves the three endpoint constraints. Writing u = I - i_min, the curve
/// is i_min + u + c u^2 with c = (a_end - 1) i_max / (i_max - i_min)^2.
/// It is monotone on the interval iff f'(i_max) = 1 + 2 c (i_max - i_min) >= 0,
/// i.e. a_end >= (i_max + i_min) / (2 i_max).
inline ModulationCurve build_parabolic_curve(double i_min, double i_max, double a_end) {
    if (!(i_min >= 0.0 && i_min < i_max)) throw DataError("modulation curve needs 0 <= i_min < i_max");
    if (!(a_end > 0.0 && a_end <= 1.0)) throw DataError("modulation curve needs 0 < a_end <= 1");
    const double span = i_max - i_min;
    const double c = (a_end - 1.0) * i_max / (span * span);
    const double slope_end = 1.0 + 2.0 * c * span;
    const double a_min = (i_max + i_min) / (2.0 * i_max);
    if (slope_end < -1e-12) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "parabolic modulation with a_end=%.6g is not monotone on [%.6g, %.6g] "
                      "(f'(i_max)=%.6g); minimum feasible a_end is %.6g",
                      a_end, i_min, i_max, slope_end, a_min);
        throw NumericError(buf);
    }
    ModulationCurve m;
    m.i_min_ = i_min;
    m.i_max_ = i_max;
    m.a_end_ = a_end;
    m.c2_ = c;
    m.c1_ = 1.0 - 2.0 * c * i_min;
    m.c0_ = c * i_min * i_min;
    return m;
}

inline double modulate(double i_sc, const ModulationCurve& curve) { return curve(i_sc); }

/// Any monotone scene->target map with a declared input interval can drive the naive mask.
template <typename F>
concept ModulationFunction = requires(const F& f, double v) {
    { f(v) } -> std::convertible_to<double>;
    { f.i_min() } -> std::convertible_to<double>;
    { f.i_max() } -> std::convertible_to<double>;
};

struct NaiveMaskDiagnostics {
    std::size_t clamped_transparent = 0;  ///< target transmittance above what the panel reaches
    std::size_t clamped_opaque = 0;       ///< target transmittance below what the panel reaches
    std::size_t saturated_scene = 0;      ///< scene pixels on the saturated top of f_r
};

struct NaiveMask {
    Image mask;  ///< panel levels on the LCD grid
    NaiveMaskDiagnostics diagnostics;
};

/// Per scene pixel: the radiance seen through the secondary panel is
/// f_r^-1(I_SC) = T_secondary L, the target is I_t = f(I_SC), and the primary
/// panel must supply T_t = f_r^-1(I_t) / L. The level f_s^-1(T_t) is then
/// resampled onto the LCD grid through `sc_to_lcd`.
template <ModulationFunction Mod>
NaiveMask compute_naive_mask(const Image& scene, const Mod& modulation, const radiometry::ResponseCurve& response,
                             const radiometry::TransmittanceCurve& transmittance, double t_max_secondary,
                             const calibration::Homography& sc_to_lcd, int lcd_width, int lcd_height) {
    require_domain(scene, Domain::counts, "compute_naive_mask");
    if (!(t_max_secondary > 0.0 && t_max_secondary <= 1.0))
        throw DataError("compute_naive_mask: secondary transmittance must be in (0,1]");
    if (lcd_width <= 0 || lcd_height <= 0) throw DataError("compute_naive_mask: LCD dimensions must be positive");
    if (sc_to_lcd.is_identity() && (lcd_width != scene.width() || lcd_height != scene.height()))
        throw DataError("compute_naive_mask: identity warp but scene and LCD dimensions differ");
    if (!sc_to_lcd.finite_on(scene.width(), scene.height()))
        throw NumericError("compute_naive_mask: warp sends scene corners to infinity");

    NaiveMask result;
    auto& diag = result.diagnostics;
    Image on_sc(scene.width(), scene.height(), Domain::counts, transmittance.bit_depth());
    auto src = scene.pixels();
    auto dst = on_sc.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double i_sc = src[i];
        if (response.saturated(i_sc)) ++diag.saturated_scene;
        const double seen = response.inverse(i_sc);
        const double i_t = modulation(i_sc);
        const double t_target = seen > 0.0 ? t_max_secondary * response.inverse(i_t) / seen : t_max_secondary;
        const auto lv = radiometry::level_of_transmittance(t_target, transmittance);
        if (lv.clamped) {
            if (lv.level == transmittance.most_transparent_level()) ++diag.clamped_transparent;
            else ++diag.clamped_opaque;
        }
        dst[i] = lv.level;
    }
    result.mask = quantize(calibration::warp_image(on_sc, sc_to_lcd, lcd_width, lcd_height,
                                                   transmittance.most_transparent_level()));
    return result;
}

// Config schema (prefix "modulation."): i_min, i_max, a_end.
inline ModulationCurve load_modulation(const Config& cfg, int bit_depth, const std::string& prefix = "modulation.") {
    return build_parabolic_curve(cfg.get_double(prefix + "i_min", 0.0),
                                 cfg.get_double(prefix + "i_max", max_count_for(bit_depth)),
                                 cfg.get_double(prefix + "a_end", 0.6));
}

}  // namespace occlumask::modulation
