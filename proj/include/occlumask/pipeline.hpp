#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "occlumask/calibration.hpp"
#include "occlumask/config.hpp"
#include "occlumask/deviation.hpp"
#include "occlumask/error.hpp"
#include "occlumask/image.hpp"
#include "occlumask/metrics.hpp"
#include "occlumask/modulation.hpp"
#include "occlumask/optimizer.hpp"
#include "occlumask/pnm.hpp"
#include "occlumask/psf.hpp"
#include "occlumask/radiometry.hpp"
#include "occlumask/scene.hpp"

/// Batch front-end: resolves a configuration into curves, geometry and a
/// scene, runs the mask pipeline, and writes artifacts.
namespace occlumask::pipeline {

namespace fs = std::filesystem;

/// Fully resolved run configuration.
struct Setup {
    radiometry::ResponseCurve response;
    radiometry::TransmittanceCurve transmittance;
    modulation::ModulationCurve modulation;
    double t_max_secondary = 0.10;
    psf::BlurGeometry geometry;
    std::optional<double> radius_override_px;
    calibration::Homography sc_to_lcd;
    int lcd_width = 0;  ///< 0: same as the scene
    int lcd_height = 0;
    optimizer::OptimizerConfig optimizer;
    bool t_b_given = false;
    std::optional<double> t_b_percentile;
    std::string scene_path;  ///< empty: synthetic scene
    scene::SyntheticSceneSpec scene_spec;

    double kernel_radius_px() const { return radius_override_px ? *radius_override_px : psf::blur_radius_px(geometry); }
};

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline Setup load_setup(const Config& cfg) {
    Setup s;
    const int bits = cfg.get_int("radiometry.bit_depth", 12);
    s.response = radiometry::load_response(cfg);
    s.transmittance = radiometry::load_transmittance(cfg);
    s.modulation = modulation::load_modulation(cfg, bits);
    s.t_max_secondary = cfg.get_double("radiometry.t_max_secondary", s.transmittance.t_max());

    s.geometry.aperture_mm = cfg.get_double("psf.aperture_mm", s.geometry.aperture_mm);
    s.geometry.focal_depth_mm = cfg.get_double("psf.focal_depth_mm", s.geometry.focal_depth_mm);
    s.geometry.panel_depth_mm = cfg.get_double("psf.panel_depth_mm", s.geometry.panel_depth_mm);
    s.geometry.pixel_pitch_mm = cfg.get_double("psf.pixel_pitch_mm", s.geometry.pixel_pitch_mm);
    s.geometry.validate();
    if (cfg.has("psf.radius_px")) {
        s.radius_override_px = cfg.get_double("psf.radius_px", 0.0);
        if (!(*s.radius_override_px >= 0.0)) throw UsageError("psf.radius_px must be non-negative");
    }

    if (cfg.has("calibration.sc_to_lcd")) s.sc_to_lcd = calibration::parse_homography(cfg.get_string("calibration.sc_to_lcd"));
    s.lcd_width = cfg.get_int("calibration.lcd_width", 0);
    s.lcd_height = cfg.get_int("calibration.lcd_height", 0);

    s.optimizer = optimizer::load_optimizer(cfg);
    s.t_b_given = cfg.has("optimizer.t_b");
    if (cfg.has("optimizer.t_b_percentile")) {
        s.t_b_percentile = cfg.get_double("optimizer.t_b_percentile", 0.0);
        if (!(*s.t_b_percentile >= 0.0 && *s.t_b_percentile <= 100.0))
            throw UsageError("optimizer.t_b_percentile must be in [0, 100]");
    }

    s.scene_path = cfg.get_string("scene.path");
    s.scene_spec = scene::load_scene_spec(cfg);
    if (s.scene_spec.bit_depth != bits && s.scene_path.empty())
        throw UsageError("scene.bit_depth must equal radiometry.bit_depth");
    if (!s.t_b_given && !s.t_b_percentile) {
        if (!s.scene_path.empty()) throw UsageError("a scene file needs optimizer.t_b or optimizer.t_b_percentile");
        s.optimizer.t_b = std::ceil(max_count_for(bits) / 2.0);
        s.t_b_given = true;
    }
    return s;
}

/// Every setting spelled out; load_setup(canonical_config(s)) reproduces s.
inline Config canonical_config(const Setup& s) {
    Config c;
    const auto& t = s.transmittance;
    c.set("radiometry.bit_depth", std::to_string(t.bit_depth()));
    c.set("radiometry.t_min", fmt_double(t.t_min()));
    c.set("radiometry.t_max", fmt_double(t.t_max()));
    c.set("radiometry.k", fmt_double(t.k()));
    c.set("radiometry.i0", fmt_double(t.i0()));
    c.set("radiometry.orientation", t.orientation() == radiometry::Orientation::increasing ? "increasing" : "decreasing");
    c.set("radiometry.response", radiometry::format_response_table(s.response));
    c.set("radiometry.t_max_secondary", fmt_double(s.t_max_secondary));
    c.set("modulation.i_min", fmt_double(s.modulation.i_min()));
    c.set("modulation.i_max", fmt_double(s.modulation.i_max()));
    c.set("modulation.a_end", fmt_double(s.modulation.a_end()));
    c.set("psf.aperture_mm", fmt_double(s.geometry.aperture_mm));
    c.set("psf.focal_depth_mm", fmt_double(s.geometry.focal_depth_mm));
    c.set("psf.panel_depth_mm", fmt_double(s.geometry.panel_depth_mm));
    c.set("psf.pixel_pitch_mm", fmt_double(s.geometry.pixel_pitch_mm));
    if (s.radius_override_px) c.set("psf.radius_px", fmt_double(*s.radius_override_px));
    {
        std::string h;
        for (double v : s.sc_to_lcd.row_major()) h += (h.empty() ? "" : " ") + fmt_double(v);
        c.set("calibration.sc_to_lcd", h);
    }
    c.set("calibration.lcd_width", std::to_string(s.lcd_width));
    c.set("calibration.lcd_height", std::to_string(s.lcd_height));
    const auto& o = s.optimizer;
    for (int i = 0; i < 4; ++i) c.set("optimizer.sigma" + std::to_string(i + 1), fmt_double(o.sigma[static_cast<std::size_t>(i)]));
    if (s.t_b_percentile) c.set("optimizer.t_b_percentile", fmt_double(*s.t_b_percentile));
    if (s.t_b_given) c.set("optimizer.t_b", fmt_double(o.t_b));
    if (o.te_scale) c.set("optimizer.te_scale", fmt_double(*o.te_scale));
    c.set("optimizer.te_anchor", fmt_double(o.te_anchor));
    c.set("optimizer.alpha_min", std::to_string(o.alpha_min));
    c.set("optimizer.alpha_max", std::to_string(o.alpha_max));
    c.set("optimizer.blur_after_expand", o.blur_after_expand ? "true" : "false");
    c.set("optimizer.blur_radius_px", o.blur_radius_px ? fmt_double(*o.blur_radius_px) : "auto");
    c.set("optimizer.normalize_fs_in_score", o.normalize_fs_in_score ? "true" : "false");
    c.set("optimizer.dark_penalty", o.dark_penalty == optimizer::DarkPenalty::opacity ? "opacity" : "transparency");
    c.set("optimizer.enforce_sigma_ratio", o.enforce_sigma_ratio ? "true" : "false");
    if (!s.scene_path.empty()) c.set("scene.path", s.scene_path);
    const auto& sc = s.scene_spec;
    c.set("scene.preset", "none");
    c.set("scene.width", std::to_string(sc.width));
    c.set("scene.height", std::to_string(sc.height));
    c.set("scene.bit_depth", std::to_string(sc.bit_depth));
    c.set("scene.background", fmt_double(sc.background));
    c.set("scene.primitives", scene::format_primitives(sc.primitives));
    c.set("scene.noise", fmt_double(sc.noise_amplitude));
    c.set("scene.soft_edge", fmt_double(sc.soft_edge));
    c.set("scene.seed", std::to_string(sc.seed));
    return c;
}

/// Smallest intensity v such that at least p percent of pixels are <= v.
inline double percentile(const Image& img, double p) {
    std::vector<double> v(img.pixels().begin(), img.pixels().end());
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
    return v[std::min(v.size() - 1, rank == 0 ? 0 : rank - 1)];
}

/// Scene, naive mask and kernel, all on the LCD grid.
struct Prepared {
    Setup setup;
    Image scene;      ///< scene-camera grid
    Image scene_lcd;  ///< scene resampled onto the LCD grid
    modulation::NaiveMask naive;
    double kernel_radius_px = 0.0;
    psf::DiscKernel kernel;
    optimizer::OptimizerConfig optimizer;  ///< t_b resolved

    optimizer::ScoreContext context(bool blur_after_expand) const {
        auto cfg = optimizer;
        cfg.blur_after_expand = blur_after_expand;
        return optimizer::ScoreContext(scene_lcd, naive.mask, kernel, setup.transmittance, cfg);
    }
};

inline Image load_scene(const Setup& s) {
    if (s.scene_path.empty()) return scene::generate(s.scene_spec);
    Image img = pnm::read_pgm(s.scene_path);
    if (img.bit_depth() != s.response.bit_depth())
        throw DataError("scene bit depth " + std::to_string(img.bit_depth()) + " differs from radiometry.bit_depth");
    return img;
}

inline Prepared prepare(const Setup& s) {
    Prepared p;
    p.setup = s;
    p.scene = load_scene(s);
    const int lw = s.lcd_width > 0 ? s.lcd_width : p.scene.width();
    const int lh = s.lcd_height > 0 ? s.lcd_height : p.scene.height();
    p.naive = modulation::compute_naive_mask(p.scene, s.modulation, s.response, s.transmittance, s.t_max_secondary,
                                             s.sc_to_lcd, lw, lh);
    p.scene_lcd = quantize(calibration::warp_image(p.scene, s.sc_to_lcd, lw, lh, 0.0));
    p.kernel_radius_px = s.kernel_radius_px();
    p.kernel = psf::disc_kernel(p.kernel_radius_px);
    p.optimizer = s.optimizer;
    if (s.t_b_percentile && !s.t_b_given) p.optimizer.t_b = percentile(p.scene, *s.t_b_percentile);
    return p;
}

/// Scene as the eye camera sees it through a mask: f_r(f_s(I_EC) L), with
/// L recovered from the scene camera as f_r^-1(I_SC) / T_secondary.
inline Image ec_view(const Prepared& p, const Image& i_ec) {
    const auto& s = p.setup;
    Image out = i_ec.like(Domain::counts);
    out = Image(i_ec.width(), i_ec.height(), Domain::counts, s.response.bit_depth());
    auto v = i_ec.pixels();
    auto sc = p.scene_lcd.pixels();
    auto o = out.pixels();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double radiance = s.response.inverse(sc[i]) / s.t_max_secondary;
        o[i] = s.response.evaluate(s.transmittance.transmittance(v[i]) * radiance);
    }
    return quantize(std::move(out));
}

struct OptimizedMasks {
    optimizer::ScoreCurve sharp_curve;
    Image sharp;
    optimizer::ScoreCurve blurred_curve;
    Image blurred;
};

inline OptimizedMasks optimize_both(const Prepared& p) {
    OptimizedMasks m;
    const auto sharp_ctx = p.context(false);
    m.sharp_curve = optimizer::optimize(sharp_ctx);
    m.sharp = sharp_ctx.candidate_mask(m.sharp_curve.argmax);
    const auto blur_ctx = p.context(true);
    m.blurred_curve = optimizer::optimize(blur_ctx);
    m.blurred = blur_ctx.candidate_mask(m.blurred_curve.argmax);
    return m;
}

inline void emit_warnings(std::ostream& log, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) log << "warning: " << w << '\n';
}

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
}

inline std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot create " + path.string());
    return out;
}

inline void cmd_gen_scene(const Setup& s, const fs::path& out_path) {
    if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
    pnm::write_pgm(out_path.string(), scene::generate(s.scene_spec));
}

/// naive_mask.pgm, mask.pgm (optimized, blurred when configured), ec_view.pgm, report.csv.
inline void cmd_simulate(const Setup& s, const fs::path& out_dir, std::ostream& log) {
    ensure_dir(out_dir);
    const Prepared p = prepare(s);
    const auto ctx = p.context(s.optimizer.blur_after_expand);
    const auto curve = optimizer::optimize(ctx);
    emit_warnings(log, curve.warnings);
    const Image mask = ctx.candidate_mask(curve.argmax);
    pnm::write_pgm((out_dir / "naive_mask.pgm").string(), p.naive.mask);
    pnm::write_pgm((out_dir / "mask.pgm").string(), mask);
    pnm::write_pgm((out_dir / "ec_view.pgm").string(), ec_view(p, ctx.simulate(mask)));
    const std::string chosen = s.optimizer.blur_after_expand ? "optimized_blur" : "optimized";
    auto out = open_out(out_dir / "report.csv");
    metrics::write_report_csv(out, metrics::compare_masks(ctx, {{"naive", p.naive.mask}, {chosen, mask}}));
    const auto& d = p.naive.diagnostics;
    log << "alpha* = " << curve.argmax << ", kernel radius " << fmt_double(p.kernel_radius_px) << " px; naive mask clamped "
        << d.clamped_transparent << " transparent / " << d.clamped_opaque << " opaque, " << d.saturated_scene
        << " saturated scene pixels\n";
}

/// score_curve.csv, optimize_summary.txt and optionally partitions/alpha_NNN.pgm.
inline void cmd_optimize(const Setup& s, const fs::path& out_dir, bool dump_partitions, std::ostream& log) {
    ensure_dir(out_dir);
    const Prepared p = prepare(s);
    const auto ctx = p.context(s.optimizer.blur_after_expand);
    const auto curve = optimizer::optimize(ctx);
    emit_warnings(log, curve.warnings);
    {
        auto out = open_out(out_dir / "score_curve.csv");
        optimizer::write_score_csv(out, curve);
    }
    {
        auto out = open_out(out_dir / "optimize_summary.txt");
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "alpha_opt=%d\nscore_opt=%.6f\nkernel_radius_px=%.6f\naperture_alpha=%d\nte_scale=%.9g\n"
                      "interior_local_maxima=%d\n",
                      curve.argmax, curve.best(), p.kernel_radius_px, optimizer::aperture_alpha(p.kernel_radius_px),
                      ctx.kappa(), curve.interior_local_maxima());
        out << buf;
    }
    if (dump_partitions) {
        ensure_dir(out_dir / "partitions");
        for (int a : curve.alpha) {
            const auto part =
                optimizer::partition_effective(ctx.scene_partition(), ctx.simulate(ctx.candidate_mask(a)), ctx.t_e());
            char name[32];
            std::snprintf(name, sizeof name, "alpha_%03d.pgm", a);
            pnm::write_pgm((out_dir / "partitions" / name).string(), optimizer::partition_labels(part));
        }
    }
    log << "alpha* = " << curve.argmax << " (score " << fmt_double(curve.best()) << ")\n";
}

/// radius_map.csv: aperture_mm, kernel_r_px, alpha_opt.
inline void cmd_radius_map(const Setup& s, const std::vector<double>& apertures, const fs::path& out_dir,
                           std::ostream& log) {
    if (apertures.empty()) throw UsageError("radius-map needs at least one aperture");
    ensure_dir(out_dir);
    Setup base = s;
    base.radius_override_px.reset();
    const Prepared p = prepare(base);
    auto cfg = p.optimizer;
    const auto map = optimizer::radius_map(apertures, base.geometry, p.scene_lcd, p.naive.mask, base.transmittance, cfg);
    if (!map.monotone) log << "warning: optimal alpha is not monotone in aperture\n";
    auto out = open_out(out_dir / "radius_map.csv");
    out << "aperture_mm,kernel_r_px,alpha_opt\n";
    char buf[96];
    for (const auto& r : map.rows) {
        std::snprintf(buf, sizeof buf, "%.6g,%.6f,%d\n", r.aperture_mm, r.kernel_radius_px, r.alpha_opt);
        out << buf;
    }
}

inline std::vector<std::pair<std::string, Image>> comparison_variants(const Prepared& p, const OptimizedMasks& m) {
    return {{"naive", p.naive.mask},
            {"aperture_expanded", optimizer::expand_mask(p.naive.mask, optimizer::aperture_alpha(p.kernel_radius_px))},
            {"optimized", m.sharp},
            {"optimized_blur", m.blurred}};
}

/// compare.csv and compare.txt for the four mask variants.
inline std::vector<metrics::MaskReport> cmd_compare(const Setup& s, const fs::path& out_dir, std::ostream& log) {
    ensure_dir(out_dir);
    const Prepared p = prepare(s);
    const auto m = optimize_both(p);
    emit_warnings(log, m.sharp_curve.warnings);
    const auto reports = metrics::compare_masks(p.context(false), comparison_variants(p, m));
    {
        auto out = open_out(out_dir / "compare.csv");
        metrics::write_report_csv(out, reports);
    }
    {
        auto out = open_out(out_dir / "compare.txt");
        metrics::write_report_text(out, reports);
        out << "alpha_opt=" << m.sharp_curve.argmax << " alpha_opt_blur=" << m.blurred_curve.argmax
            << " aperture_alpha=" << optimizer::aperture_alpha(p.kernel_radius_px) << '\n';
    }
    metrics::write_report_text(log, reports);
    return reports;
}

/// deviation.csv: sharp optimized mask vs. blurred-edge optimized mask under each offset.
inline void cmd_deviation_sweep(const Setup& s, const std::vector<calibration::Offset>& offsets, const fs::path& out_dir,
                                std::ostream& log) {
    if (offsets.empty()) throw UsageError("deviation-sweep needs at least one offset");
    ensure_dir(out_dir);
    const Prepared p = prepare(s);
    const auto m = optimize_both(p);
    emit_warnings(log, m.sharp_curve.warnings);
    const auto rows =
        calibration::deviation_sweep(p.context(false), {{"optimized", m.sharp}, {"optimized_blur", m.blurred}}, offsets);
    auto out = open_out(out_dir / "deviation.csv");
    calibration::write_deviation_csv(out, rows);
}

/// psf_estimate.txt with the fitted radius and residual.
inline psf::RadiusEstimate cmd_estimate_psf(const std::string& mask_path, const std::string& observed_path,
                                            const psf::RadiusSearch& search, std::optional<Rect> roi,
                                            const fs::path& out_dir, std::ostream& log) {
    ensure_dir(out_dir);
    const Image mask = pnm::read_pgm(mask_path);
    const Image observed = pnm::read_pgm(observed_path);
    const Rect r = roi ? *roi : Rect{0, 0, mask.width(), mask.height()};
    const auto est = psf::estimate_radius(mask, observed, search, r);
    auto out = open_out(out_dir / "psf_estimate.txt");
    out << "radius_px=" << fmt_double(est.radius) << "\nresidual=" << fmt_double(est.residual) << '\n';
    log << "radius " << fmt_double(est.radius) << " px, residual " << fmt_double(est.residual) << '\n';
    return est;
}

/// homography.txt (9 numbers, row-major) from a correspondence CSV.
inline calibration::HomographyEstimate cmd_calibrate(const std::string& points_path, const fs::path& out_dir,
                                                     std::ostream& log) {
    ensure_dir(out_dir);
    std::ifstream in(points_path);
    if (!in) throw DataError("cannot open " + points_path);
    std::vector<calibration::Point> src, dst;
    calibration::read_correspondences(in, src, dst);
    const auto est = calibration::estimate_homography(src, dst);
    auto out = open_out(out_dir / "homography.txt");
    out << calibration::format_homography(est.homography);
    log << "reprojection RMS " << fmt_double(est.reprojection_rms) << " px over " << src.size() << " points\n";
    return est;
}

}  // namespace occlumask::pipeline
