#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mpirecon/error.hpp"
#include "mpirecon/grid.hpp"

namespace mpirecon::io {

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples). Pixel values
/// are scaled so the image maximum maps to 65535; negatives clamp to 0.
/// 2D grids render rows along the first axis; 3D grids render the central
/// slice of the last axis; 1D grids render as a single row.
inline std::vector<unsigned char> encode_pgm16(const ImageGrid& img) {
    const auto& s = img.shape;
    std::size_t H = 1, W = 0, pix_stride = 1, offset = 0;
    if (s.rank() == 1) {
        W = s[0];
    } else if (s.rank() == 2) {
        H = s[0];
        W = s[1];
    } else if (s.rank() == 3) {
        H = s[0];
        W = s[1];
        pix_stride = s[2];
        offset = s[2] / 2;
    } else {
        throw dimension_error("pgm: unsupported grid " + s.to_string());
    }
    double peak = 0;
    for (std::size_t k = 0; k < H * W; ++k)
        peak = std::max(peak, img.values[Eigen::Index(k * pix_stride + offset)]);

    const std::string header = "P5\n" + std::to_string(W) + " " + std::to_string(H) + "\n65535\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(out.size() + 2 * H * W);
    for (std::size_t k = 0; k < H * W; ++k) {
        const double v = img.values[Eigen::Index(k * pix_stride + offset)];
        std::uint16_t g = 0;
        if (peak > 0 && v > 0)
            g = static_cast<std::uint16_t>(std::lround(std::min(1.0, v / peak) * 65535.0));
        out.push_back(static_cast<unsigned char>(g >> 8));
        out.push_back(static_cast<unsigned char>(g & 0xff));
    }
    return out;
}

inline void write_pgm16(const std::string& path, const ImageGrid& img) {
    const auto bytes = encode_pgm16(img);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw io_error("cannot open '" + path + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!os)
        throw io_error("failed writing '" + path + "'");
}

} // namespace mpirecon::io
