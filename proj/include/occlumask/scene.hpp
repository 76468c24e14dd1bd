#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "occlumask/config.hpp"
#include "occlumask/error.hpp"
#include "occlumask/image.hpp"

/// Synthetic scene-camera images built from discs and rectangles.
namespace occlumask::scene {

struct Primitive {
    enum class Kind { disc, rect } kind = Kind::disc;
    double cx = 0.0;
    double cy = 0.0;
    double size_x = 0.0;  ///< disc radius, or rect width
    double size_y = 0.0;  ///< rect height (unused for discs)
    double intensity = 0.0;

    static Primitive disc(double cx, double cy, double r, double intensity) {
        return {Kind::disc, cx, cy, r, r, intensity};
    }
    static Primitive rect(double cx, double cy, double w, double h, double intensity) {
        return {Kind::rect, cx, cy, w, h, intensity};
    }

    /// Signed distance from (x, y) to the boundary, negative inside.
    double signed_distance(double x, double y) const {
        if (kind == Kind::disc) return std::hypot(x - cx, y - cy) - size_x;
        const double qx = std::abs(x - cx) - size_x / 2.0;
        const double qy = std::abs(y - cy) - size_y / 2.0;
        return std::hypot(std::max(qx, 0.0), std::max(qy, 0.0)) + std::min(std::max(qx, qy), 0.0);
    }
};

struct SyntheticSceneSpec {
    int width = 720;
    int height = 540;
    int bit_depth = 12;
    double background = 200.0;
    std::vector<Primitive> primitives;
    double noise_amplitude = 0.0;  ///< uniform noise in [-a, a] counts
    double soft_edge = 0.0;        ///< width of the linear ramp across primitive edges, pixels
    std::uint64_t seed = 0;

    void validate() const {
        if (width <= 0 || height <= 0) throw DataError("scene: canvas dimensions must be positive");
        if (bit_depth < 1 || bit_depth > 16) throw DataError("scene: bit depth out of range");
        const double hi = max_count_for(bit_depth);
        if (!(background >= 0.0 && background <= hi)) throw DataError("scene: background outside bit depth");
        if (!(noise_amplitude >= 0.0)) throw DataError("scene: noise amplitude must be non-negative");
        if (!(soft_edge >= 0.0)) throw DataError("scene: soft edge width must be non-negative");
        for (const auto& p : primitives) {
            if (!(p.intensity >= 0.0 && p.intensity <= hi)) throw DataError("scene: primitive intensity outside bit depth");
            if (!(p.size_x > 0.0 && p.size_y > 0.0)) throw DataError("scene: primitive size must be positive");
            if (!(p.cx >= 0.0 && p.cx <= width - 1.0 && p.cy >= 0.0 && p.cy <= height - 1.0))
                throw DataError("scene: primitive centre outside canvas");
        }
    }
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits, identical across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Primitives are painted in order; later ones cover earlier ones.
inline Image generate(const SyntheticSceneSpec& spec) {
    spec.validate();
    Image img(spec.width, spec.height, Domain::counts, spec.bit_depth, spec.background);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            double v = spec.background;
            for (const auto& p : spec.primitives) {
                const double sd = p.signed_distance(x, y);
                const double cover =
                    spec.soft_edge > 0.0 ? std::clamp(0.5 - sd / spec.soft_edge, 0.0, 1.0) : (sd <= 0.0 ? 1.0 : 0.0);
                v += (p.intensity - v) * cover;
            }
            img(x, y) = v;
        }
    }
    if (spec.noise_amplitude > 0.0) {
        std::mt19937_64 rng(spec.seed);
        for (double& v : img.pixels()) v += spec.noise_amplitude * (2.0 * detail::unit_uniform(rng) - 1.0);
    }
    return quantize(std::move(img));
}

/// Bright disc of radius 100 on a dim field, centred on a 720x540 canvas.
inline SyntheticSceneSpec disc_preset() {
    SyntheticSceneSpec s;
    s.primitives.push_back(Primitive::disc((s.width - 1) / 2.0, (s.height - 1) / 2.0, 100.0, 4000.0));
    return s;
}

/// Back-lit blob (bright, two stacked discs) in front of dim rectangular statues.
inline SyntheticSceneSpec snowman_preset() {
    SyntheticSceneSpec s;
    s.background = 150.0;
    s.soft_edge = 6.0;
    s.primitives = {
        Primitive::rect(150.0, 360.0, 90.0, 220.0, 800.0),
        Primitive::rect(570.0, 360.0, 100.0, 240.0, 900.0),
        Primitive::rect(359.5, 470.0, 320.0, 80.0, 650.0),
        Primitive::disc(359.5, 270.0, 70.0, 3900.0),
        Primitive::disc(359.5, 160.0, 45.0, 4000.0),
    };
    return s;
}

/// `disc cx cy r intensity; rect cx cy w h intensity; ...`
inline std::vector<Primitive> parse_primitives(const std::string& text) {
    std::vector<Primitive> out;
    std::stringstream all(text);
    std::string item;
    while (std::getline(all, item, ';')) {
        std::istringstream is(item);
        std::string kind;
        if (!(is >> kind)) continue;
        if (kind == "disc") {
            double cx, cy, r, v;
            if (!(is >> cx >> cy >> r >> v)) throw UsageError("scene primitive '" + item + "': disc needs cx cy r intensity");
            out.push_back(Primitive::disc(cx, cy, r, v));
        } else if (kind == "rect") {
            double cx, cy, w, h, v;
            if (!(is >> cx >> cy >> w >> h >> v))
                throw UsageError("scene primitive '" + item + "': rect needs cx cy w h intensity");
            out.push_back(Primitive::rect(cx, cy, w, h, v));
        } else {
            throw UsageError("scene primitive kind '" + kind + "' is not disc or rect");
        }
    }
    return out;
}

inline std::string format_primitives(const std::vector<Primitive>& prims) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < prims.size(); ++i) {
        const auto& p = prims[i];
        if (i) os << "; ";
        if (p.kind == Primitive::Kind::disc) os << "disc " << p.cx << ' ' << p.cy << ' ' << p.size_x << ' ' << p.intensity;
        else os << "rect " << p.cx << ' ' << p.cy << ' ' << p.size_x << ' ' << p.size_y << ' ' << p.intensity;
    }
    return os.str();
}

// Config schema (prefix "scene."): preset = disc | snowman (optional base),
// width, height, bit_depth, background, primitives, noise, soft_edge, seed.
inline SyntheticSceneSpec load_scene_spec(const Config& cfg, const std::string& prefix = "scene.") {
    const std::string preset = cfg.get_string(prefix + "preset", "disc");
    SyntheticSceneSpec s;
    if (preset == "disc") s = disc_preset();
    else if (preset == "snowman") s = snowman_preset();
    else if (preset != "none") throw UsageError(prefix + "preset must be disc, snowman or none");
    s.width = cfg.get_int(prefix + "width", s.width);
    s.height = cfg.get_int(prefix + "height", s.height);
    s.bit_depth = cfg.get_int(prefix + "bit_depth", s.bit_depth);
    s.background = cfg.get_double(prefix + "background", s.background);
    if (cfg.has(prefix + "primitives")) s.primitives = parse_primitives(cfg.get_string(prefix + "primitives"));
    s.noise_amplitude = cfg.get_double(prefix + "noise", s.noise_amplitude);
    s.soft_edge = cfg.get_double(prefix + "soft_edge", s.soft_edge);
    if (cfg.has(prefix + "seed")) {
        const std::string v = cfg.get_string(prefix + "seed");
        try {
            std::size_t used = 0;
            s.seed = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw UsageError(prefix + "seed must be a non-negative integer");
        }
    }
    return s;
}

}  // namespace occlumask::scene
