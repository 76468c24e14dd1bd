#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "occlumask/config.hpp"
#include "occlumask/error.hpp"
#include "occlumask/image.hpp"

/// Radiance/intensity relations: the camera response f_r, the panel
/// transmittance curve f_s, and attenuation of radiance by a transmittance map.
namespace occlumask::radiometry {

/// Piecewise-linear radiance -> counts map, non-decreasing.
/// Radiance is relative (full scale 1); beyond the last sample the output
/// saturates at that sample's count.
class ResponseCurve {
public:
    struct Sample {
        double radiance;
        double counts;
        friend bool operator==(const Sample&, const Sample&) = default;
    };

    ResponseCurve() : ResponseCurve(linear(12)) {}

    ResponseCurve(std::vector<Sample> samples, int bit_depth) : samples_(std::move(samples)), bit_depth_(bit_depth) {
        if (bit_depth < 1 || bit_depth > 16) throw DataError("response curve: bit depth out of range");
        if (samples_.size() < 2) throw DataError("response curve needs at least two samples");
        if (samples_.front().radiance != 0.0) throw DataError("response curve must start at radiance 0");
        const double hi = max_count();
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            const auto& s = samples_[i];
            if (!std::isfinite(s.radiance) || !std::isfinite(s.counts) || s.counts < 0.0 || s.counts > hi)
                throw DataError("response curve sample out of range");
            if (i > 0) {
                if (s.radiance <= samples_[i - 1].radiance)
                    throw DataError("response curve radiance samples must be strictly increasing");
                if (s.counts < samples_[i - 1].counts) throw DataError("response curve must be non-decreasing");
            }
        }
        if (samples_.back().counts <= samples_.front().counts) throw DataError("response curve is constant");
    }

    /// f_r(L) = L * max_count on [0, 1].
    static ResponseCurve linear(int bit_depth = 12) {
        return ResponseCurve({{0.0, 0.0}, {1.0, static_cast<double>(max_count_for(bit_depth))}}, bit_depth);
    }

    int bit_depth() const { return bit_depth_; }
    int max_count() const { return max_count_for(bit_depth_); }
    const std::vector<Sample>& samples() const { return samples_; }

    /// Continuous (unquantized) response.
    double evaluate(double radiance) const {
        if (radiance <= 0.0) return samples_.front().counts;
        if (radiance >= samples_.back().radiance) return samples_.back().counts;
        auto it = std::upper_bound(samples_.begin(), samples_.end(), radiance,
                                   [](double r, const Sample& s) { return r < s.radiance; });
        const Sample& b = *it;
        const Sample& a = *(it - 1);
        const double t = (radiance - a.radiance) / (b.radiance - a.radiance);
        return a.counts + t * (b.counts - a.counts);
    }

    /// Pseudo-inverse: the smallest radiance whose response reaches `counts`.
    /// Defined on all of [0, max_count]; counts above the top sample map to
    /// the top sample's radiance.
    double inverse(double counts) const {
        if (counts <= samples_.front().counts) return 0.0;
        if (counts >= samples_.back().counts) return samples_.back().radiance;
        auto it = std::lower_bound(samples_.begin(), samples_.end(), counts,
                                   [](const Sample& s, double c) { return s.counts < c; });
        const Sample& b = *it;
        const Sample& a = *(it - 1);
        const double t = (counts - a.counts) / (b.counts - a.counts);
        return a.radiance + t * (b.radiance - a.radiance);
    }

    /// True when `counts` lies on the saturated top of the curve, where the inverse is not unique.
    bool saturated(double counts) const { return counts >= samples_.back().counts; }

    friend bool operator==(const ResponseCurve&, const ResponseCurve&) = default;

private:
    std::vector<Sample> samples_;
    int bit_depth_ = 12;
};

enum class Orientation { increasing, decreasing };

/// Logistic fit of panel transmittance against mask level:
/// T(i) = t_min + (t_max - t_min) * logistic(±k (i - i0)).
class TransmittanceCurve {
public:
    TransmittanceCurve() : TransmittanceCurve(defaults(12)) {}

    TransmittanceCurve(double t_min, double t_max, double k, double i0, int bit_depth,
                       Orientation orientation = Orientation::increasing)
        : t_min_(t_min), t_max_(t_max), k_(k), i0_(i0), bit_depth_(bit_depth), orientation_(orientation) {
        if (!(t_min > 0.0 && t_min < t_max && t_max <= 1.0))
            throw DataError("transmittance curve needs 0 < t_min < t_max <= 1");
        if (!(k > 0.0) || !std::isfinite(k)) throw DataError("transmittance curve steepness must be positive");
        if (!std::isfinite(i0)) throw DataError("transmittance curve midpoint must be finite");
        if (bit_depth < 1 || bit_depth > 16) throw DataError("transmittance curve: bit depth out of range");
    }

    /// t_min = 0.002, t_max = 0.10, i0 at mid-scale, and k such that 95% of
    /// the swing falls inside the central half of the level range.
    static TransmittanceCurve defaults(int bit_depth = 12) {
        const double max = max_count_for(bit_depth);
        const double k = 2.0 * std::atanh(0.95) / (max / 4.0);
        return TransmittanceCurve(0.002, 0.10, k, max / 2.0, bit_depth);
    }

    double t_min() const { return t_min_; }
    double t_max() const { return t_max_; }
    double k() const { return k_; }
    double i0() const { return i0_; }
    int bit_depth() const { return bit_depth_; }
    int max_count() const { return max_count_for(bit_depth_); }
    Orientation orientation() const { return orientation_; }

    double transmittance(double level) const {
        return t_min_ + (t_max_ - t_min_) * logistic(signed_arg(level));
    }

    double derivative(double level) const {
        const double s = logistic(signed_arg(level));
        return (t_max_ - t_min_) * k_ * s * (1.0 - s);
    }

    /// Continuous inverse; only meaningful for t strictly inside (t_min, t_max).
    double level_continuous(double t) const {
        const double s = (t - t_min_) / (t_max_ - t_min_);
        const double x = std::log(s / (1.0 - s)) / k_;
        return orientation_ == Orientation::increasing ? i0_ + x : i0_ - x;
    }

    int most_transparent_level() const { return orientation_ == Orientation::increasing ? max_count() : 0; }
    int most_opaque_level() const { return orientation_ == Orientation::increasing ? 0 : max_count(); }

    /// Transmittance reachable by the quantized levels.
    double reachable_min() const { return transmittance(most_opaque_level()); }
    double reachable_max() const { return transmittance(most_transparent_level()); }

    /// f_s min-max normalized over the level range, in [0, 1].
    double normalized(double level) const {
        return (transmittance(level) - reachable_min()) / (reachable_max() - reachable_min());
    }

    friend bool operator==(const TransmittanceCurve&, const TransmittanceCurve&) = default;

private:
    static double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
    double signed_arg(double level) const {
        const double x = k_ * (level - i0_);
        return orientation_ == Orientation::increasing ? x : -x;
    }

    double t_min_;
    double t_max_;
    double k_;
    double i0_;
    int bit_depth_;
    Orientation orientation_;
};

/// Pixelwise f_r with round-half-up quantization into [0, max_count].
inline Image apply_response(const Image& radiance, const ResponseCurve& curve) {
    require_domain(radiance, Domain::radiance, "apply_response");
    Image out(radiance.width(), radiance.height(), Domain::counts, curve.bit_depth());
    auto src = radiance.pixels();
    auto dst = out.pixels();
    const double hi = curve.max_count();
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i] < 0.0) throw DataError("apply_response: negative radiance");
        dst[i] = std::clamp(round_half_up(curve.evaluate(src[i])), 0.0, hi);
    }
    return out;
}

inline double transmittance_of_level(double level, const TransmittanceCurve& curve) {
    return curve.transmittance(level);
}

struct LevelResult {
    int level = 0;
    bool clamped = false;
};

/// Nearest panel level producing transmittance t. Values outside what the
/// level range can reach are clamped to the end level and flagged.
inline LevelResult level_of_transmittance(double t, const TransmittanceCurve& curve) {
    const int hi = curve.max_count();
    if (!(t > curve.t_min())) return {curve.most_opaque_level(), true};
    if (!(t < curve.t_max())) return {curve.most_transparent_level(), true};
    const double lv = round_half_up(curve.level_continuous(t));
    if (lv < 0.0) return {0, true};
    if (lv > hi) return {hi, true};
    return {static_cast<int>(lv), false};
}

/// L' = T L.
inline Image attenuate(const Image& radiance, const Image& transmittance) {
    require_domain(radiance, Domain::radiance, "attenuate");
    require_domain(transmittance, Domain::fraction, "attenuate");
    require_same_shape(radiance, transmittance, "attenuate");
    Image out = radiance;
    auto t = transmittance.pixels();
    auto o = out.pixels();
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (t[i] < 0.0 || t[i] > 1.0) throw DataError("attenuate: transmittance outside [0,1]");
        o[i] *= t[i];
    }
    return out;
}

// Config schema (prefix "radiometry."):
//   bit_depth, t_min, t_max, k, i0, orientation = increasing|decreasing,
//   response = linear | r0:c0, r1:c1, ...   (radiance:counts pairs)

inline ResponseCurve parse_response_table(const std::string& text, int bit_depth) {
    if (text.empty() || text == "linear") return ResponseCurve::linear(bit_depth);
    std::vector<ResponseCurve::Sample> samples;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("response table entry '" + item + "' is not radiance:counts");
        try {
            samples.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
        } catch (const std::exception&) {
            throw UsageError("response table entry '" + item + "' is not numeric");
        }
    }
    return ResponseCurve(std::move(samples), bit_depth);
}

inline std::string format_response_table(const ResponseCurve& curve) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < curve.samples().size(); ++i) {
        if (i) os << ", ";
        os << curve.samples()[i].radiance << ':' << curve.samples()[i].counts;
    }
    return os.str();
}

inline ResponseCurve load_response(const Config& cfg, const std::string& prefix = "radiometry.") {
    const int bits = cfg.get_int(prefix + "bit_depth", 12);
    return parse_response_table(cfg.get_string(prefix + "response", "linear"), bits);
}

inline TransmittanceCurve load_transmittance(const Config& cfg, const std::string& prefix = "radiometry.") {
    const int bits = cfg.get_int(prefix + "bit_depth", 12);
    const TransmittanceCurve d = TransmittanceCurve::defaults(bits);
    const std::string orient = cfg.get_string(prefix + "orientation", "increasing");
    if (orient != "increasing" && orient != "decreasing")
        throw UsageError(prefix + "orientation must be increasing or decreasing");
    return TransmittanceCurve(cfg.get_double(prefix + "t_min", d.t_min()), cfg.get_double(prefix + "t_max", d.t_max()),
                              cfg.get_double(prefix + "k", d.k()), cfg.get_double(prefix + "i0", d.i0()), bits,
                              orient == "increasing" ? Orientation::increasing : Orientation::decreasing);
}

}  // namespace occlumask::radiometry
