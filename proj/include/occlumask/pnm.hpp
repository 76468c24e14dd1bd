#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "occlumask/error.hpp"
#include "occlumask/image.hpp"

/// Binary PGM (P5). maxval must be 2^b - 1; samples above 255 are stored as
/// 16-bit big-endian, as the Netpbm format requires.
namespace occlumask::pnm {

namespace detail {

inline void skip_space_and_comments(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string ignored;
            std::getline(in, ignored);
        } else if (c != EOF && std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

inline int read_header_int(std::istream& in, const char* what) {
    skip_space_and_comments(in);
    int v = -1;
    if (!(in >> v) || v <= 0) throw DataError(std::string("PGM: bad ") + what);
    return v;
}

inline int bit_depth_of_maxval(int maxval) {
    for (int b = 1; b <= 16; ++b)
        if (maxval == max_count_for(b)) return b;
    throw DataError("PGM: maxval " + std::to_string(maxval) + " is not 2^b-1 for b in [1,16]");
}

}  // namespace detail

inline Image read_pgm(std::istream& in) {
    char magic[2] = {0, 0};
    if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '5') throw DataError("PGM: not a binary P5 file");
    const int w = detail::read_header_int(in, "width");
    const int h = detail::read_header_int(in, "height");
    const int maxval = detail::read_header_int(in, "maxval");
    if (maxval > 65535) throw DataError("PGM: maxval above 65535");
    const int bits = detail::bit_depth_of_maxval(maxval);
    if (!std::isspace(in.get())) throw DataError("PGM: missing whitespace after header");

    Image img(w, h, Domain::counts, bits);
    const bool wide = maxval > 255;
    auto px = img.pixels();
    for (double& v : px) {
        int value;
        if (wide) {
            const int hi = in.get();
            const int lo = in.get();
            if (lo == EOF || hi == EOF) throw DataError("PGM: truncated pixel data");
            value = (hi << 8) | lo;
        } else {
            value = in.get();
            if (value == EOF) throw DataError("PGM: truncated pixel data");
        }
        if (value > maxval) throw DataError("PGM: sample exceeds maxval");
        v = value;
    }
    return img;
}

inline Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return read_pgm(in);
}

/// Writes counts with round-half-up quantization and clamping to [0, max_count].
inline void write_pgm(std::ostream& out, const Image& img) {
    const int maxval = img.max_count();
    out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
    const bool wide = maxval > 255;
    for (double v : img.pixels()) {
        const double q = std::clamp(round_half_up(v), 0.0, static_cast<double>(maxval));
        const int value = static_cast<int>(q);
        if (wide) out.put(static_cast<char>((value >> 8) & 0xff));
        out.put(static_cast<char>(value & 0xff));
    }
    if (!out) throw DataError("PGM: write failed");
}

inline void write_pgm(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot create " + path);
    write_pgm(out, img);
}

}  // namespace occlumask::pnm
