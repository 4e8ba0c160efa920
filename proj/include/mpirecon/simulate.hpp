#pragma once

// Synthetic forward model: phantoms, an MPI-like system matrix surrogate,
// colored background noise and the row preprocessing (band-pass, SNR
// threshold, row normalization).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mpirecon/error.hpp"
#include "mpirecon/grid.hpp"
#include "mpirecon/system_matrix.hpp"

namespace mpirecon::simulate {

using Eigen::Index;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class PhantomKind { Shape, VascularTree, Delta, Custom };

inline PhantomKind phantom_kind_from_string(std::string_view s) {
    if (s == "shape") return PhantomKind::Shape;
    if (s == "vascular") return PhantomKind::VascularTree;
    if (s == "delta") return PhantomKind::Delta;
    throw std::invalid_argument("unknown phantom '" + std::string(s) + "'");
}

inline std::string_view to_string(PhantomKind k) {
    switch (k) {
    case PhantomKind::Shape: return "shape";
    case PhantomKind::VascularTree: return "vascular";
    case PhantomKind::Delta: return "delta";
    case PhantomKind::Custom: return "custom";
    }
    return "?";
}

namespace detail {

inline void require_2d(const GridShape& dims, std::size_t min_side, const char* what) {
    if (dims.rank() != 2)
        throw dimension_error(std::string(what) + ": needs a 2D grid, got " + dims.to_string());
    if (dims[0] < min_side || dims[1] < min_side)
        throw dimension_error(std::string(what) + ": grid " + dims.to_string() + " is too small (each side >= " +
                              std::to_string(min_side) + ")");
}

} // namespace detail

/// Regions of the shape phantom.
enum class ShapeRegion : std::uint8_t { Background = 0, Triangle, Ellipse, Rectangle, Disk };

/// Region label of every pixel of the shape phantom. Geometry is given in
/// unit coordinates (u down the rows, v along the columns) and the regions
/// are pairwise disjoint.
inline std::vector<ShapeRegion> shape_phantom_labels(const GridShape& dims) {
    detail::require_2d(dims, 16, "shape phantom");
    const std::size_t H = dims[0], W = dims[1];
    std::vector<ShapeRegion> labels(H * W, ShapeRegion::Background);

    // Triangle (0.55,0.08) (0.92,0.08) (0.92,0.45): right angle at bottom left.
    auto in_triangle = [](double u, double v) {
        return u <= 0.92 && v >= 0.08 && (u - 0.55) >= (v - 0.08);
    };
    auto in_ellipse = [](double u, double v) {
        const double du = (u - 0.70) / 0.17, dv = (v - 0.72) / 0.18;
        return du * du + dv * dv <= 1.0;
    };
    auto in_rect = [](double u, double v) { return u >= 0.10 && u <= 0.40 && v >= 0.55 && v <= 0.90; };
    auto in_disk = [](double u, double v) {
        const double du = u - 0.27, dv = v - 0.25;
        return du * du + dv * dv <= 0.12 * 0.12;
    };

    for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
            const double u = (double(i) + 0.5) / double(H);
            const double v = (double(j) + 0.5) / double(W);
            ShapeRegion r = ShapeRegion::Background;
            if (in_triangle(u, v))
                r = ShapeRegion::Triangle;
            else if (in_ellipse(u, v))
                r = ShapeRegion::Ellipse;
            else if (in_rect(u, v))
                r = ShapeRegion::Rectangle;
            else if (in_disk(u, v))
                r = ShapeRegion::Disk;
            labels[i * W + j] = r;
        }
    }
    return labels;
}

inline double shape_region_value(ShapeRegion r) {
    switch (r) {
    case ShapeRegion::Background: return 0.0;
    case ShapeRegion::Triangle: return 0.75;
    case ShapeRegion::Ellipse: return 0.5;
    case ShapeRegion::Rectangle: return 1.0;
    case ShapeRegion::Disk: return 0.25;
    }
    return 0.0;
}

/// Piecewise-constant test image: triangle (0.75), ellipse (0.5),
/// rectangle (1.0) and disk (0.25) on a zero background.
inline ImageGrid make_shape_phantom(const GridShape& dims) {
    const auto labels = shape_phantom_labels(dims);
    ImageGrid img(dims);
    for (std::size_t k = 0; k < labels.size(); ++k)
        img.values[Index(k)] = shape_region_value(labels[k]);
    return img;
}

namespace detail {

struct Point {
    double u, v;
};

// Marks pixel centres within width/2 of the segment p-q.
inline void draw_segment(ImageGrid& img, Point p, Point q, double width, double value) {
    const std::size_t H = img.shape[0], W = img.shape[1];
    const double r = 0.5 * width + 1e-9;
    const double du = q.u - p.u, dv = q.v - p.v;
    const double len2 = du * du + dv * dv;
    const auto lo_u = std::size_t(std::max(0.0, std::floor(std::min(p.u, q.u) - r - 1)));
    const auto hi_u = std::min(H - 1, std::size_t(std::max(0.0, std::ceil(std::max(p.u, q.u) + r + 1))));
    const auto lo_v = std::size_t(std::max(0.0, std::floor(std::min(p.v, q.v) - r - 1)));
    const auto hi_v = std::min(W - 1, std::size_t(std::max(0.0, std::ceil(std::max(p.v, q.v) + r + 1))));
    for (std::size_t i = lo_u; i <= hi_u; ++i) {
        for (std::size_t j = lo_v; j <= hi_v; ++j) {
            double t = len2 > 0 ? ((double(i) - p.u) * du + (double(j) - p.v) * dv) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double eu = double(i) - (p.u + t * du), ev = double(j) - (p.v + t * dv);
            if (eu * eu + ev * ev <= r * r)
                img.at(i, j) = value;
        }
    }
}

inline void grow_branch(ImageGrid& img, Point start, double angle, double length, int depth, int max_depth) {
    static constexpr double widths[] = {3, 2, 2, 1, 1, 1, 1, 1};
    const double H = double(img.shape[0]), W = double(img.shape[1]);
    Point end{start.u - length * std::cos(angle), start.v + length * std::sin(angle)};
    // Branch points sit on pixel centres so thin children stay 8-connected.
    end.u = std::clamp(std::round(end.u), 1.0, H - 2.0);
    end.v = std::clamp(std::round(end.v), 1.0, W - 2.0);
    draw_segment(img, start, end, widths[std::min(depth, 7)], 1.0);
    if (depth == max_depth)
        return;
    // Asymmetric split keeps the tree from closing into loops.
    grow_branch(img, end, angle + 0.42, length * 0.74, depth + 1, max_depth);
    grow_branch(img, end, angle - 0.58, length * 0.66, depth + 1, max_depth);
}

} // namespace detail

/// Binary branching vessel tree of 1-3 px wide segments at intensity 1 on
/// a zero background, rooted at the bottom centre.
inline ImageGrid make_vascular_phantom(const GridShape& dims) {
    detail::require_2d(dims, 16, "vascular phantom");
    ImageGrid img(dims);
    const double H = double(dims[0]), W = double(dims[1]);
    detail::grow_branch(img, {H - 2.0, std::floor(W / 2.0)}, 0.0, 0.30 * H, 0, 5);
    return img;
}

/// Single unit voxel at the grid centre.
inline ImageGrid make_delta_phantom(const GridShape& dims) {
    if (dims.rank() < 1 || dims.size() == 0)
        throw dimension_error("delta phantom: empty grid");
    ImageGrid img(dims);
    std::size_t idx = 0;
    for (std::size_t a = 0; a < dims.rank(); ++a)
        idx += (dims[a] / 2) * dims.stride(a);
    img.values[Index(idx)] = 1.0;
    return img;
}

inline ImageGrid make_phantom(PhantomKind kind, const GridShape& dims) {
    switch (kind) {
    case PhantomKind::Shape: return make_shape_phantom(dims);
    case PhantomKind::VascularTree: return make_vascular_phantom(dims);
    case PhantomKind::Delta: return make_delta_phantom(dims);
    case PhantomKind::Custom: break;
    }
    throw std::invalid_argument("custom phantoms are loaded from files");
}

enum class MatrixModel { FourierBlur, RandomSmooth };

inline MatrixModel matrix_model_from_string(std::string_view s) {
    if (s == "fourier-blur") return MatrixModel::FourierBlur;
    if (s == "random-smooth") return MatrixModel::RandomSmooth;
    throw std::invalid_argument("unknown matrix model '" + std::string(s) + "'");
}

/// Constants of the synthetic frequency/SNR tagging.
struct TagModel {
    double f_min_hz = 80e3;
    double f_max_hz = 4.375e6;
    double noise_knee_hz = 500e3; ///< corner of the 1/f background envelope
    double snr_peak = 500.0;
    double snr_jitter = 0.25; ///< log-normal spread of the SNR tag
};

/// Magnitude envelope of the receive-chain background: 1/f-shaped, flat
/// below the knee.
inline double background_envelope(double freq_hz, const TagModel& tags = {}) {
    return 1.0 / (1.0 + freq_hz / tags.noise_knee_hz);
}

namespace detail {

inline void smooth_axis_circular(VectorXcd& v, const GridShape& shape, std::size_t axis, const std::vector<double>& k) {
    const std::size_t n = shape[axis], stride = shape.stride(axis);
    const std::size_t outer = shape.size() / (n * stride);
    const std::size_t half = k.size() / 2;
    VectorXcd out(v.size());
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t s = 0; s < stride; ++s)
            for (std::size_t i = 0; i < n; ++i) {
                cplx acc(0);
                for (std::size_t t = 0; t < k.size(); ++t)
                    acc += k[t] * v[Index(o * n * stride + s + ((i + n * k.size() + t - half) % n) * stride)];
                out[Index(o * n * stride + s + i * stride)] = acc;
            }
    v = std::move(out);
}

} // namespace detail

namespace detail {

// Lattice frequencies (cycles per field of view) of the grid sorted by
// radius; ties keep lexicographic order.
inline std::vector<std::vector<double>> sorted_lattice(const GridShape& dims) {
    const std::size_t r = dims.rank();
    std::vector<std::vector<double>> freqs;
    freqs.reserve(dims.size());
    std::vector<std::size_t> c(r, 0);
    for (std::size_t p = 0; p < dims.size(); ++p) {
        std::size_t rem = p;
        std::vector<double> k(r);
        for (std::size_t a = 0; a < r; ++a) {
            c[a] = rem / dims.stride(a);
            rem %= dims.stride(a);
            const auto n = double(dims[a]);
            k[a] = double(c[a]) < n / 2 ? double(c[a]) : double(c[a]) - n;
        }
        freqs.push_back(std::move(k));
    }
    auto radius2 = [](const std::vector<double>& k) {
        double s = 0;
        for (double v : k)
            s += v * v;
        return s;
    };
    std::stable_sort(freqs.begin(), freqs.end(),
                     [&](const auto& a, const auto& b) { return radius2(a) < radius2(b); });
    return freqs;
}

inline double norm2(const std::vector<double>& k) {
    double s = 0;
    for (double v : k)
        s += v * v;
    return std::sqrt(s);
}

} // namespace detail

/// Surrogate for a measured MPI system matrix.
///
/// FourierBlur: row i mixes two periodic complex exponentials on the grid,
/// a primary lattice frequency whose radius grows with i and a nearby
/// secondary one at half weight, each damped by the Gaussian transfer
/// function of a blurred delta response. With m = 2n every lattice
/// frequency is the primary of two rows (two receive channels).
/// RandomSmooth: row i is a smoothed random complex field with the same
/// radial amplitude decay.
///
/// Rows carry an ascending frequency tag and an SNR tag that decays with
/// frequency (signal decay over the background envelope) with seeded jitter.
inline SystemMatrix synth_system_matrix(const GridShape& dims, std::size_t m_rows, std::uint64_t seed,
                                        MatrixModel model = MatrixModel::FourierBlur, const TagModel& tags = {}) {
    if (m_rows < 1)
        throw std::invalid_argument("system matrix needs at least one row");
    if (dims.rank() < 1 || dims.rank() > 3 || dims.size() == 0)
        throw dimension_error("system matrix: grid must be 1D, 2D or 3D and nonempty");
    const std::size_t r = dims.rank();
    const Index n = Index(dims.size());
    const Index m = Index(m_rows);

    const auto lattice = detail::sorted_lattice(dims);
    const double radius_max = detail::norm2(lattice.back());
    const double blur_radius = radius_max / 4.0;
    auto gain_of = [&](double rho) { return std::exp(-0.5 * (rho / blur_radius) * (rho / blur_radius)); };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit;
    std::uniform_int_distribution<std::size_t> mix_offset(1, 8);

    // Phase of every voxel for a lattice frequency: exp(-2 pi i k.p / N).
    std::vector<std::vector<double>> coords(static_cast<std::size_t>(n), std::vector<double>(r));
    for (Index p = 0; p < n; ++p) {
        std::size_t rem = std::size_t(p);
        for (std::size_t a = 0; a < r; ++a) {
            coords[std::size_t(p)][a] = double(rem / dims.stride(a)) / double(dims[a]);
            rem %= dims.stride(a);
        }
    }
    auto add_wave = [&](auto row, const std::vector<double>& k, cplx weight) {
        for (Index p = 0; p < n; ++p) {
            double arg = 0;
            for (std::size_t a = 0; a < r; ++a)
                arg -= 2.0 * std::numbers::pi * k[a] * coords[std::size_t(p)][a];
            row(p) += weight * cplx(std::cos(arg), std::sin(arg));
        }
    };

    RowMajorMatrixXcd a = RowMajorMatrixXcd::Zero(m, n);
    VectorXd freq(m), snr(m);
    for (Index i = 0; i < m; ++i) {
        const std::size_t primary =
            std::min(lattice.size() - 1, std::size_t(double(i) * double(lattice.size()) / double(m)));
        const double rho = detail::norm2(lattice[primary]);
        const double gain = gain_of(rho);
        const double phase = 2.0 * std::numbers::pi * unit(rng);

        if (model == MatrixModel::FourierBlur) {
            const std::size_t secondary = std::min(lattice.size() - 1, primary + mix_offset(rng));
            const double phase2 = 2.0 * std::numbers::pi * unit(rng);
            auto row = a.row(i);
            add_wave(row, lattice[primary], std::polar(gain, phase));
            if (secondary != primary)
                add_wave(row, lattice[secondary], std::polar(0.5 * gain_of(detail::norm2(lattice[secondary])), phase2));
        } else {
            VectorXcd row(n);
            for (Index p = 0; p < n; ++p)
                row[p] = cplx(gauss(rng), gauss(rng));
            // Narrower smoothing for later rows keeps a rough frequency ordering.
            const double width = std::max(0.6, 2.5 * (1.0 - double(i) / double(m)));
            std::vector<double> kernel;
            const int half = int(std::ceil(3 * width));
            double ks = 0;
            for (int t = -half; t <= half; ++t) {
                kernel.push_back(std::exp(-0.5 * (t / width) * (t / width)));
                ks += kernel.back();
            }
            for (auto& kv : kernel)
                kv /= ks;
            for (std::size_t ax = 0; ax < r; ++ax)
                detail::smooth_axis_circular(row, dims, ax, kernel);
            row *= gain * std::sqrt(double(n)) / row.norm() * std::polar(1.0, phase);
            a.row(i) = row.transpose();
        }

        freq[i] = m == 1 ? tags.f_min_hz
                         : tags.f_min_hz + (tags.f_max_hz - tags.f_min_hz) * double(i) / double(m - 1);
        const double env_ratio = background_envelope(tags.f_min_hz, tags) / background_envelope(freq[i], tags);
        snr[i] = tags.snr_peak * gain * env_ratio * std::exp(tags.snr_jitter * gauss(rng));
    }

    SystemMatrix A(std::move(a), dims);
    A.row_freq_hz = std::move(freq);
    A.row_snr = std::move(snr);
    A.validate();
    return A;
}

/// Phantom weight and the fixed background added to every measurement.
struct NoiseModel {
    double sigma = 10.0;
    VectorXcd background; ///< empty means no background
    std::uint64_t seed = 0;
};

/// Colored complex Gaussian background: per-row standard deviation
/// level * background_envelope(freq_i). Rows without a frequency tag use a
/// flat envelope.
inline VectorXcd colored_background(const SystemMatrix& A, double level, std::uint64_t seed,
                                    const TagModel& tags = {}) {
    if (!(level >= 0))
        throw std::invalid_argument("background level must be nonnegative");
    std::mt19937_64 rng(seed ^ 0xa0761d6478bd642fULL);
    std::normal_distribution<double> gauss;
    VectorXcd eta(A.rows());
    for (Index i = 0; i < A.rows(); ++i) {
        const double env = A.has_freq() ? background_envelope(A.row_freq_hz[i], tags) : 1.0;
        const double re = gauss(rng), im = gauss(rng);
        eta[i] = level * env * cplx(re, im) / std::sqrt(2.0);
    }
    return eta;
}

inline NoiseModel make_noise_model(const SystemMatrix& A, double sigma, double level, std::uint64_t seed) {
    return NoiseModel{sigma, colored_background(A, level, seed), seed};
}

/// b = A (x / sigma) + background.
inline VectorXcd forward_simulate(const SystemMatrix& A, const ImageGrid& x, const NoiseModel& noise) {
    if (!(noise.sigma > 0))
        throw std::invalid_argument("phantom weight sigma must be positive, got " + std::to_string(noise.sigma));
    if (std::size_t(A.cols()) != x.size())
        throw shape_error("forward_simulate: phantom has " + std::to_string(x.size()) + " voxels, matrix " +
                          std::to_string(A.cols()) + " columns");
    VectorXcd b = A.entries * (x.values / noise.sigma).cast<cplx>();
    if (noise.background.size() > 0) {
        if (noise.background.size() != A.rows())
            throw shape_error("forward_simulate: background length does not match the matrix rows");
        b += noise.background;
    }
    return b;
}

struct Preprocessed {
    SystemMatrix A;
    VectorXcd b;
    std::vector<Index> kept_rows;
};

/// Keeps rows with f_lo <= freq <= f_hi and snr > snr_min (criteria whose
/// tags are absent are skipped), in their original order, then scales every
/// surviving row and its measurement by 1/||a_i||.
inline Preprocessed preprocess_matrix(const SystemMatrix& A, const VectorXcd& b, double snr_min, double f_lo_hz,
                                      double f_hi_hz) {
    A.validate();
    if (b.size() != A.rows())
        throw shape_error("preprocess: measurement vector length does not match the matrix rows");
    Preprocessed out;
    for (Index i = 0; i < A.rows(); ++i) {
        if (A.has_freq() && !(A.row_freq_hz[i] >= f_lo_hz && A.row_freq_hz[i] <= f_hi_hz))
            continue;
        if (A.has_snr() && !(A.row_snr[i] > snr_min))
            continue;
        out.kept_rows.push_back(i);
    }
    if (out.kept_rows.empty())
        throw solver_error("preprocess: every row was filtered out (snr_min " + std::to_string(snr_min) +
                           ", band " + std::to_string(f_lo_hz) + "-" + std::to_string(f_hi_hz) + " Hz)");

    const Index k = Index(out.kept_rows.size());
    RowMajorMatrixXcd a(k, A.cols());
    out.b.resize(k);
    VectorXd freq(A.has_freq() ? k : 0), snr(A.has_snr() ? k : 0);
    for (Index r = 0; r < k; ++r) {
        const Index i = out.kept_rows[std::size_t(r)];
        const double nrm = A.entries.row(i).norm();
        if (nrm == 0.0)
            throw solver_error("preprocess: row " + std::to_string(i) + " has zero norm");
        a.row(r) = A.entries.row(i) / nrm;
        out.b[r] = b[i] / nrm;
        if (A.has_freq())
            freq[r] = A.row_freq_hz[i];
        if (A.has_snr())
            snr[r] = A.row_snr[i];
    }
    out.A = SystemMatrix(std::move(a), A.grid);
    out.A.row_freq_hz = std::move(freq);
    out.A.row_snr = std::move(snr);
    return out;
}

} // namespace mpirecon::simulate
