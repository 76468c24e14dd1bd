#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "occlumask/error.hpp"
#include "occlumask/image.hpp"

/// Planar homographies between the scene camera, eye camera and panel grids.
///
/// Coordinates are in pixels with pixel centres at integer positions:
/// pixel (x, y) covers [x-0.5, x+0.5] x [y-0.5, y+0.5].
namespace occlumask::calibration {

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

/// 3x3 projective map, scaled so the bottom-right entry is 1 whenever it is nonzero.
class Homography {
public:
    Homography() : m_(Eigen::Matrix3d::Identity()) {}

    explicit Homography(const Eigen::Matrix3d& m) : m_(m) {
        if (!m_.allFinite()) throw NumericError("homography has non-finite entries");
        if (std::abs(m_(2, 2)) > 1e-15) m_ /= m_(2, 2);
        const double det = m_.determinant();
        if (!(std::abs(det) > 1e-12)) throw NumericError("degenerate homography (|det| <= 1e-12)");
    }

    static Homography identity() { return Homography(); }

    static Homography translation(double dx, double dy) {
        Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
        m(0, 2) = dx;
        m(1, 2) = dy;
        return Homography(m);
    }

    static Homography scaling(double sx, double sy) {
        Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
        m(0, 0) = sx;
        m(1, 1) = sy;
        return Homography(m);
    }

    static Homography from_row_major(const std::array<double, 9>& v) {
        Eigen::Matrix3d m;
        m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
        return Homography(m);
    }

    std::array<double, 9> row_major() const {
        return {m_(0, 0), m_(0, 1), m_(0, 2), m_(1, 0), m_(1, 1), m_(1, 2), m_(2, 0), m_(2, 1), m_(2, 2)};
    }

    const Eigen::Matrix3d& matrix() const { return m_; }

    /// Maps p; returns non-finite coordinates for points sent to infinity.
    Point apply(Point p) const {
        const double w = m_(2, 0) * p.x + m_(2, 1) * p.y + m_(2, 2);
        if (w == 0.0) return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        return {(m_(0, 0) * p.x + m_(0, 1) * p.y + m_(0, 2)) / w, (m_(1, 0) * p.x + m_(1, 1) * p.y + m_(1, 2)) / w};
    }

    Homography inverse() const { return Homography(m_.inverse()); }

    /// (a * b) applies b first, then a.
    friend Homography operator*(const Homography& a, const Homography& b) { return Homography(a.m_ * b.m_); }

    bool is_identity() const { return m_ == Eigen::Matrix3d::Identity(); }

    /// True when every corner of a w x h viewport maps to a finite point.
    bool finite_on(int w, int h) const {
        for (Point c : {Point{0, 0}, Point{w - 1.0, 0}, Point{0, h - 1.0}, Point{w - 1.0, h - 1.0}}) {
            Point q = apply(c);
            if (!std::isfinite(q.x) || !std::isfinite(q.y)) return false;
        }
        return true;
    }

private:
    Eigen::Matrix3d m_;
};

struct HomographyEstimate {
    Homography homography;
    double reprojection_rms = 0.0;  ///< sqrt(mean squared Euclidean reprojection error), pixels
};

namespace detail {

// Similarity that moves the centroid to the origin and the mean distance to sqrt(2).
inline Eigen::Matrix3d hartley_transform(const std::vector<Point>& pts) {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
    mean_dist /= static_cast<double>(pts.size());
    if (!(mean_dist > 0.0)) throw NumericError("degenerate correspondences: all points coincide");
    const double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

inline bool collinear(const Point& a, const Point& b, const Point& c, double scale) {
    const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return std::abs(cross) <= 1e-9 * scale * scale;
}

inline double extent(const std::vector<Point>& pts) {
    double lo_x = pts[0].x, hi_x = pts[0].x, lo_y = pts[0].y, hi_y = pts[0].y;
    for (const auto& p : pts) {
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }
    return std::max({hi_x - lo_x, hi_y - lo_y, 1e-300});
}

}  // namespace detail

/// Least-squares homography from point correspondences via the normalized DLT.
inline HomographyEstimate estimate_homography(const std::vector<Point>& src, const std::vector<Point>& dst) {
    if (src.size() != dst.size()) throw DataError("estimate_homography: source and destination counts differ");
    const std::size_t n = src.size();
    if (n < 4) throw DataError("estimate_homography: need at least 4 correspondences, got " + std::to_string(n));

    if (n == 4) {
        for (const auto* pts : {&src, &dst}) {
            const double scale = detail::extent(*pts);
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = i + 1; j < 4; ++j)
                    for (std::size_t k = j + 1; k < 4; ++k)
                        if (detail::collinear((*pts)[i], (*pts)[j], (*pts)[k], scale))
                            throw NumericError("estimate_homography: three collinear points in a minimal set");
        }
    }

    const Eigen::Matrix3d ts = detail::hartley_transform(src);
    const Eigen::Matrix3d td = detail::hartley_transform(dst);

    // At least 9 rows so the SVD always exposes a full 9-dimensional right basis.
    const Eigen::Index rows = std::max<Eigen::Index>(static_cast<Eigen::Index>(2 * n), 9);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
        const Eigen::Vector3d q = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
        const double x = p.x() / p.z(), y = p.y() / p.z();
        const double u = q.x() / q.z(), v = q.y() / q.z();
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(7) > 1e-10 * sv(0))) throw NumericError("estimate_homography: degenerate configuration");
    const Eigen::VectorXd h = svd.matrixV().col(8);

    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    const Homography result(td.inverse() * hn * ts);

    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point q = result.apply(src[i]);
        sq += (q.x - dst[i].x) * (q.x - dst[i].x) + (q.y - dst[i].y) * (q.y - dst[i].y);
    }
    return {result, std::sqrt(sq / static_cast<double>(n))};
}

/// Bilinear sample at continuous coordinates; `fill` outside the raster.
inline double sample_bilinear(const Image& img, double u, double v, double fill) {
    constexpr double eps = 1e-9;
    if (!(u >= -eps && v >= -eps && u <= img.width() - 1 + eps && v <= img.height() - 1 + eps)) return fill;
    u = std::clamp(u, 0.0, img.width() - 1.0);
    v = std::clamp(v, 0.0, img.height() - 1.0);
    const int x0 = static_cast<int>(std::floor(u));
    const int y0 = static_cast<int>(std::floor(v));
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = u - x0;
    const double fy = v - y0;
    const double top = img(x0, y0) + fx * (img(x1, y0) - img(x0, y0));
    const double bottom = img(x0, y1) + fx * (img(x1, y1) - img(x0, y1));
    return top + fy * (bottom - top);
}

/// Resamples `img` into an out_width x out_height raster where output pixel q
/// takes the source value at h^-1(q).
inline Image warp_image(const Image& img, const Homography& h, int out_width, int out_height, double fill) {
    if (h.is_identity() && out_width == img.width() && out_height == img.height()) return img;
    const Homography inv = h.inverse();
    Image out(out_width, out_height, img.domain(), img.bit_depth());
    for (int y = 0; y < out_height; ++y) {
        for (int x = 0; x < out_width; ++x) {
            const Point s = inv.apply({static_cast<double>(x), static_cast<double>(y)});
            out(x, y) = (std::isfinite(s.x) && std::isfinite(s.y)) ? sample_bilinear(img, s.x, s.y, fill) : fill;
        }
    }
    return out;
}

/// Correspondence CSV: `x_src,y_src,x_dst,y_dst` per line; an optional
/// non-numeric header line is skipped.
inline void read_correspondences(std::istream& in, std::vector<Point>& src, std::vector<Point>& dst) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ss(line);
        std::array<double, 4> v{};
        std::string cell;
        std::size_t col = 0;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            if (col >= 4) throw DataError("correspondence line " + std::to_string(line_no) + ": too many columns");
            try {
                std::size_t used = 0;
                v[col] = std::stod(cell, &used);
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
            ++col;
        }
        if (!numeric) {
            if (src.empty() && line_no == 1) continue;
            throw DataError("correspondence line " + std::to_string(line_no) + ": non-numeric value");
        }
        if (col != 4) throw DataError("correspondence line " + std::to_string(line_no) + ": expected 4 columns");
        src.push_back({v[0], v[1]});
        dst.push_back({v[2], v[3]});
    }
}

inline std::string format_homography(const Homography& h) {
    std::ostringstream os;
    os << std::setprecision(17);
    const auto v = h.row_major();
    for (std::size_t i = 0; i < 9; ++i) os << v[i] << (i % 3 == 2 ? '\n' : ' ');
    return os.str();
}

inline Homography parse_homography(const std::string& text) {
    std::istringstream is(text);
    std::array<double, 9> v{};
    for (auto& x : v)
        if (!(is >> x)) throw DataError("homography text must hold 9 numbers");
    std::string rest;
    if (is >> rest) throw DataError("homography text holds more than 9 numbers");
    return Homography::from_row_major(v);
}

}  // namespace occlumask::calibration
