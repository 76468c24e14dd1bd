#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "occlumask/calibration.hpp"
#include "occlumask/metrics.hpp"
#include "occlumask/optimizer.hpp"

namespace occlumask::calibration {

struct Offset {
    double dx = 0.0;
    double dy = 0.0;
};

struct DeviationRow {
    Offset offset;
    std::vector<metrics::MaskReport> reports;  ///< one per input mask, in input order
};

/// Mask as seen after the panel-to-eye mapping is off by `offset` pixels.
/// Uncovered panel area shows the most transparent level.
inline Image shift_mask(const Image& mask, Offset offset, const radiometry::TransmittanceCurve& trans) {
    if (offset.dx == 0.0 && offset.dy == 0.0) return mask;
    return warp_image(mask, Homography::translation(offset.dx, offset.dy), mask.width(), mask.height(),
                      trans.most_transparent_level());
}

/// Re-simulates every mask under each miscalibration offset.
inline std::vector<DeviationRow> deviation_sweep(const optimizer::ScoreContext& ctx,
                                                 const std::vector<std::pair<std::string, Image>>& masks,
                                                 const std::vector<Offset>& offsets) {
    const Image& ref = ctx.naive_mask();
    for (const auto& o : offsets)
        if (!(std::abs(o.dx) <= ref.width() / 4.0 && std::abs(o.dy) <= ref.height() / 4.0))
            throw DataError("deviation_sweep: offset exceeds a quarter of the image");
    std::vector<DeviationRow> rows(offsets.size());
    parallel_for(offsets.size(), [&](std::size_t i) {
        rows[i].offset = offsets[i];
        for (const auto& [name, mask] : masks)
            rows[i].reports.push_back(
                metrics::evaluate_mask(ctx, shift_mask(mask, offsets[i], ctx.transmittance()), name));
    });
    return rows;
}

inline void write_deviation_csv(std::ostream& os, const std::vector<DeviationRow>& rows) {
    os << "dx,dy,variant,effective_area,leak_area,rms_contrast,peak_bright_leak,score\n";
    char buf[256];
    for (const auto& row : rows)
        for (const auto& r : row.reports) {
            std::snprintf(buf, sizeof buf, "%g,%g,%s,%zu,%zu,%.9f,%.6f,%.6f\n", row.offset.dx, row.offset.dy,
                          r.variant.c_str(), r.effective_area, r.leak_area, r.rms_contrast, r.peak_bright_leak, r.score);
            os << buf;
        }
}

}  // namespace occlumask::calibration
