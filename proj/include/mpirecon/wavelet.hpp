#pragma once

// Undecimated (a trous) wavelet transform on periodic 1D/2D/3D grids.
//
// Level j filters are the base taps upsampled by 2^(j-1) and, under the
// default Parseval normalization, scaled by 1/sqrt(2) per axis so that the
// stacked analysis operator satisfies Phi^* Phi = I.
//
// Subbands are addressed by a bit mask: bit a set means high-pass along
// axis a. Mask 0 at the coarsest level is the approximation band; every
// other mask is a detail band, so each level holds 2^d - 1 details.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mpirecon/error.hpp"
#include "mpirecon/grid.hpp"

namespace mpirecon::wavelet {

/// Orthonormal quadrature-mirror filter pair. Reconstruction taps are the
/// time reverse of the decomposition taps.
struct FilterPair {
    std::string name;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> lo_r;
    std::vector<double> hi_r;

    std::size_t length() const noexcept { return lo.size(); }

    /// Builds the pair from an orthonormal low-pass, hi[k] = (-1)^k lo[L-1-k].
    static FilterPair from_lowpass(std::string name, std::vector<double> lo) {
        FilterPair f;
        f.name = std::move(name);
        f.lo = std::move(lo);
        const std::size_t L = f.lo.size();
        f.hi.resize(L);
        for (std::size_t k = 0; k < L; ++k)
            f.hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * f.lo[L - 1 - k];
        f.lo_r.assign(f.lo.rbegin(), f.lo.rend());
        f.hi_r.assign(f.hi.rbegin(), f.hi.rend());
        return f;
    }

    static FilterPair haar() {
        const double h = 1.0 / std::sqrt(2.0);
        return from_lowpass("haar", {h, h});
    }

    static FilterPair daubechies2() {
        const double s3 = std::sqrt(3.0);
        const double d = 4.0 * std::sqrt(2.0);
        return from_lowpass("db2", {(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d});
    }

    static FilterPair from_name(std::string_view name) {
        if (name == "haar" || name == "db1")
            return haar();
        if (name == "db2")
            return daubechies2();
        throw std::invalid_argument("unknown wavelet family '" + std::string(name) + "'");
    }

    /// Checks unit energy, orthogonality of lo/hi and the reversal relation.
    void validate(double tol = 1e-12) const {
        const std::size_t L = lo.size();
        if (L < 2 || hi.size() != L || lo_r.size() != L || hi_r.size() != L)
            throw std::invalid_argument("filter pair: inconsistent tap counts");
        double e_lo = 0, e_hi = 0, cross = 0;
        for (std::size_t k = 0; k < L; ++k) {
            e_lo += lo[k] * lo[k];
            e_hi += hi[k] * hi[k];
            cross += lo[k] * hi[k];
            if (lo_r[k] != lo[L - 1 - k] || hi_r[k] != hi[L - 1 - k])
                throw std::invalid_argument("filter pair: reconstruction taps are not reversed");
        }
        if (std::abs(e_lo - 1) > tol || std::abs(e_hi - 1) > tol || std::abs(cross) > tol)
            throw std::invalid_argument("filter pair: taps are not an orthonormal pair");
    }
};

enum class Normalization {
    Parseval, ///< taps scaled by 1/sqrt(2) per axis and level; frame constant 1
    Unscaled, ///< raw orthonormal taps; tight only for one level (constant 2^d)
};

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Redundant subband stack. Every band has the extent of the input grid.
template <class Scalar>
struct WaveletPyramid {
    GridShape shape;
    std::size_t levels = 0;
    std::vector<Vector<Scalar>> details; ///< level-major, (level-1)*(2^d-1) + (mask-1)
    Vector<Scalar> approx;
    double frame_constant = 1.0;

    std::size_t bands_per_level() const noexcept { return (std::size_t{1} << shape.rank()) - 1; }

    Vector<Scalar>& detail(std::size_t level, std::size_t mask) {
        return details.at((level - 1) * bands_per_level() + (mask - 1));
    }
    const Vector<Scalar>& detail(std::size_t level, std::size_t mask) const {
        return details.at((level - 1) * bands_per_level() + (mask - 1));
    }

    std::size_t band_count() const noexcept { return details.size() + 1; }
    std::size_t coefficient_count() const noexcept { return band_count() * shape.size(); }

    /// All coefficients in one vector: details in storage order, then approx.
    Vector<Scalar> flatten() const {
        const Eigen::Index n = Eigen::Index(shape.size());
        Vector<Scalar> out(static_cast<Eigen::Index>(coefficient_count()));
        Eigen::Index off = 0;
        for (const auto& d : details) {
            out.segment(off, n) = d;
            off += n;
        }
        out.segment(off, n) = approx;
        return out;
    }

    /// Inverse of flatten() for a pyramid with the same metadata.
    void assign_flat(const Vector<Scalar>& flat) {
        const Eigen::Index n = Eigen::Index(shape.size());
        if (std::size_t(flat.size()) != coefficient_count())
            throw shape_error("pyramid: flat coefficient vector has the wrong length");
        Eigen::Index off = 0;
        for (auto& d : details) {
            d = flat.segment(off, n);
            off += n;
        }
        approx = flat.segment(off, n);
    }

    double squared_norm() const {
        double s = approx.squaredNorm();
        for (const auto& d : details)
            s += d.squaredNorm();
        return s;
    }

    /// Throws shape_error unless band counts and extents match the metadata.
    void check_consistent() const {
        const std::size_t n = shape.size();
        if (levels == 0 || shape.rank() == 0 || shape.rank() > 3)
            throw shape_error("pyramid: bad level count or rank");
        if (details.size() != levels * bands_per_level())
            throw shape_error("pyramid: detail band count does not match levels");
        if (std::size_t(approx.size()) != n)
            throw shape_error("pyramid: approximation band extent mismatch");
        for (const auto& d : details)
            if (std::size_t(d.size()) != n)
                throw shape_error("pyramid: detail band extent mismatch");
    }
};

namespace detail {

// Circular filtering of every line along `axis`.
//   forward: out[k] = sum_t taps[t] * in[k - t*step]
//   adjoint: out[k] = sum_t taps[t] * in[k + t*step]
template <class Scalar>
void filter_axis(const Vector<Scalar>& in, Vector<Scalar>& out, const GridShape& shape, std::size_t axis,
                 std::span<const double> taps, std::size_t step, bool adjoint) {
    const std::size_t n = shape[axis];
    const std::size_t stride = shape.stride(axis);
    const std::size_t outer = shape.size() / (n * stride);
    std::vector<std::size_t> offset(taps.size());
    for (std::size_t t = 0; t < taps.size(); ++t)
        offset[t] = (t * step) % n;

    out.resize(in.size());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t s = 0; s < stride; ++s) {
            const std::size_t base = o * n * stride + s;
            for (std::size_t k = 0; k < n; ++k) {
                Scalar acc(0);
                for (std::size_t t = 0; t < taps.size(); ++t) {
                    const std::size_t idx = adjoint ? (k + offset[t]) % n : (k + n - offset[t]) % n;
                    acc += taps[t] * in[Eigen::Index(base + idx * stride)];
                }
                out[Eigen::Index(base + k * stride)] = acc;
            }
        }
    }
}

inline std::vector<double> scaled(const std::vector<double>& taps, double factor) {
    std::vector<double> out(taps);
    for (auto& t : out)
        t *= factor;
    return out;
}

} // namespace detail

/// Single-level periodic decimated DWT of an even-length sequence:
/// approx[m] = sum_t lo[t] x[2m - t], detail[m] = sum_t hi[t] x[2m - t].
template <class Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> dwt_single_level(const Vector<Scalar>& x, const FilterPair& f) {
    const std::size_t N = std::size_t(x.size());
    if (N % 2 != 0)
        throw dimension_error("dwt_single_level: odd-length input (" + std::to_string(N) + ")");
    if (N < f.length())
        throw dimension_error("dwt_single_level: input shorter than the filter");
    const std::size_t M = N / 2;
    const auto half_len = static_cast<Eigen::Index>(M);
    Vector<Scalar> a(half_len), d(half_len);
    for (std::size_t m = 0; m < M; ++m) {
        Scalar sa(0), sd(0);
        for (std::size_t t = 0; t < f.length(); ++t) {
            const Scalar v = x[Eigen::Index((2 * m + N - t % N) % N)];
            sa += f.lo[t] * v;
            sd += f.hi[t] * v;
        }
        a[Eigen::Index(m)] = sa;
        d[Eigen::Index(m)] = sd;
    }
    return {a, d};
}

/// Inverse of dwt_single_level using the reconstruction taps:
/// x[2m + s - (L-1)] += lo_r[s] a[m] + hi_r[s] d[m].
template <class Scalar>
Vector<Scalar> idwt_single_level(const Vector<Scalar>& approx, const Vector<Scalar>& detail, const FilterPair& f) {
    if (approx.size() != detail.size())
        throw shape_error("idwt_single_level: approx/detail length mismatch");
    const std::size_t M = std::size_t(approx.size());
    const std::size_t N = 2 * M;
    const std::size_t L = f.length();
    Vector<Scalar> x = Vector<Scalar>::Zero(Eigen::Index(N));
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t s = 0; s < L; ++s) {
            const std::size_t n = (2 * m + s + N * L - (L - 1)) % N;
            x[Eigen::Index(n)] += f.lo_r[s] * approx[Eigen::Index(m)] + f.hi_r[s] * detail[Eigen::Index(m)];
        }
    }
    return x;
}

/// The analysis operator Phi for a fixed grid, filter pair and depth.
class UndecimatedWavelet {
public:
    UndecimatedWavelet(GridShape shape, FilterPair filters, std::size_t levels,
                       Normalization norm = Normalization::Parseval)
        : shape_(std::move(shape)), filters_(std::move(filters)), levels_(levels), norm_(norm) {
        filters_.validate();
        if (levels_ < 1)
            throw std::invalid_argument("wavelet: at least one decomposition level is required");
        if (shape_.rank() < 1 || shape_.rank() > 3)
            throw std::invalid_argument("wavelet: grids must be 1D, 2D or 3D");
        const std::size_t need = filters_.length() << (levels_ - 1);
        for (std::size_t a = 0; a < shape_.rank(); ++a)
            if (shape_[a] < need)
                throw dimension_error("wavelet: axis " + std::to_string(a) + " has " + std::to_string(shape_[a]) +
                                      " points, " + std::to_string(levels_) + " levels of " + filters_.name +
                                      " need at least " + std::to_string(need));
        if (norm_ == Normalization::Unscaled && levels_ > 1)
            throw std::invalid_argument("wavelet: unscaled taps form a tight frame only for a single level");
        const double factor = norm_ == Normalization::Parseval ? 1.0 / std::sqrt(2.0) : 1.0;
        lo_ = detail::scaled(filters_.lo, factor);
        hi_ = detail::scaled(filters_.hi, factor);
    }

    const GridShape& shape() const noexcept { return shape_; }
    const FilterPair& filters() const noexcept { return filters_; }
    std::size_t levels() const noexcept { return levels_; }
    Normalization normalization() const noexcept { return norm_; }

    /// alpha with Phi^* Phi = alpha I.
    double frame_constant() const noexcept {
        return norm_ == Normalization::Parseval ? 1.0 : double(std::size_t{1} << shape_.rank());
    }

    std::size_t bands_per_level() const noexcept { return (std::size_t{1} << shape_.rank()) - 1; }

    template <class Scalar>
    WaveletPyramid<Scalar> forward(const Vector<Scalar>& x) const {
        if (std::size_t(x.size()) != shape_.size())
            throw shape_error("wavelet forward: input has " + std::to_string(x.size()) + " values, grid " +
                              shape_.to_string() + " needs " + std::to_string(shape_.size()));
        WaveletPyramid<Scalar> p;
        p.shape = shape_;
        p.levels = levels_;
        p.frame_constant = frame_constant();
        p.details.reserve(levels_ * bands_per_level());
        Vector<Scalar> c = x;
        for (std::size_t j = 1; j <= levels_; ++j) {
            auto bands = analyze_level(c, std::size_t{1} << (j - 1));
            for (std::size_t mask = 1; mask < bands.size(); ++mask)
                p.details.push_back(std::move(bands[mask]));
            c = std::move(bands[0]);
        }
        p.approx = std::move(c);
        return p;
    }

    /// Phi^*: sum of the adjoint filter bank applied to every band.
    template <class Scalar>
    Vector<Scalar> adjoint(const WaveletPyramid<Scalar>& p) const {
        check_pyramid(p);
        Vector<Scalar> c = p.approx;
        const std::size_t per = bands_per_level();
        for (std::size_t j = levels_; j >= 1; --j) {
            std::vector<Vector<Scalar>> bands(per + 1);
            bands[0] = std::move(c);
            for (std::size_t mask = 1; mask <= per; ++mask)
                bands[mask] = p.details[(j - 1) * per + (mask - 1)];
            c = synthesize_level(std::move(bands), std::size_t{1} << (j - 1));
        }
        return c;
    }

    /// Left inverse (1/alpha) Phi^*.
    template <class Scalar>
    Vector<Scalar> inverse(const WaveletPyramid<Scalar>& p) const {
        Vector<Scalar> x = adjoint(p);
        if (norm_ != Normalization::Parseval)
            x /= frame_constant();
        return x;
    }

    /// Reconstruction through decimated inverse transforms: at every level
    /// and along every axis each coset of stride 2^(j-1) is rebuilt from its
    /// even-phase and its odd-phase samples, and the two results averaged.
    /// Requires every axis to be divisible by 2^levels.
    template <class Scalar>
    Vector<Scalar> inverse_even_odd(const WaveletPyramid<Scalar>& p) const {
        check_pyramid(p);
        const std::size_t blk = std::size_t{1} << levels_;
        for (std::size_t a = 0; a < shape_.rank(); ++a)
            if (shape_[a] % blk != 0)
                throw dimension_error("wavelet: even/odd reconstruction needs every axis divisible by " +
                                      std::to_string(blk));
        const std::size_t d = shape_.rank();
        const std::size_t per = bands_per_level();
        Vector<Scalar> c = p.approx;
        for (std::size_t j = levels_; j >= 1; --j) {
            const std::size_t step = std::size_t{1} << (j - 1);
            std::vector<Vector<Scalar>> cur(per + 1);
            cur[0] = std::move(c);
            for (std::size_t mask = 1; mask <= per; ++mask)
                cur[mask] = p.details[(j - 1) * per + (mask - 1)];
            for (std::size_t a = d; a-- > 0;) {
                const std::size_t half = std::size_t{1} << a;
                std::vector<Vector<Scalar>> prev(half);
                for (std::size_t i = 0; i < half; ++i)
                    prev[i] = merge_axis_even_odd(cur[i], cur[i + half], a, step);
                cur = std::move(prev);
            }
            c = std::move(cur[0]);
        }
        return c;
    }

private:
    template <class Scalar>
    void check_pyramid(const WaveletPyramid<Scalar>& p) const {
        p.check_consistent();
        if (!(p.shape == shape_) || p.levels != levels_)
            throw shape_error("wavelet: pyramid metadata does not match the transform (grid " +
                              p.shape.to_string() + ", " + std::to_string(p.levels) + " levels)");
    }

    // One a trous level. Returns 2^d bands indexed by mask.
    template <class Scalar>
    std::vector<Vector<Scalar>> analyze_level(const Vector<Scalar>& c, std::size_t step) const {
        std::vector<Vector<Scalar>> cur{c};
        for (std::size_t a = 0; a < shape_.rank(); ++a) {
            std::vector<Vector<Scalar>> next(cur.size() * 2);
            for (std::size_t i = 0; i < cur.size(); ++i) {
                detail::filter_axis<Scalar>(cur[i], next[i], shape_, a, lo_, step, false);
                detail::filter_axis<Scalar>(cur[i], next[i + cur.size()], shape_, a, hi_, step, false);
            }
            cur = std::move(next);
        }
        return cur;
    }

    template <class Scalar>
    Vector<Scalar> synthesize_level(std::vector<Vector<Scalar>> cur, std::size_t step) const {
        Vector<Scalar> tmp_lo, tmp_hi;
        for (std::size_t a = shape_.rank(); a-- > 0;) {
            const std::size_t half = std::size_t{1} << a;
            std::vector<Vector<Scalar>> prev(half);
            for (std::size_t i = 0; i < half; ++i) {
                detail::filter_axis<Scalar>(cur[i], tmp_lo, shape_, a, lo_, step, true);
                detail::filter_axis<Scalar>(cur[i + half], tmp_hi, shape_, a, hi_, step, true);
                prev[i] = tmp_lo + tmp_hi;
            }
            cur = std::move(prev);
        }
        return std::move(cur[0]);
    }

    // Undo the low/high split along one axis at a given dilation using the
    // decimated inverse on every coset.
    template <class Scalar>
    Vector<Scalar> merge_axis_even_odd(const Vector<Scalar>& lo_band, const Vector<Scalar>& hi_band,
                                       std::size_t axis, std::size_t step) const {
        const std::size_t n = shape_[axis];
        const std::size_t stride = shape_.stride(axis);
        const std::size_t outer = shape_.size() / (n * stride);
        const std::size_t M = n / step;
        const std::size_t half = M / 2;
        const double gain = norm_ == Normalization::Parseval ? std::sqrt(2.0) : 1.0;

        Vector<Scalar> out(lo_band.size());
        const auto hl = static_cast<Eigen::Index>(half);
        Vector<Scalar> a0(hl), d0(hl), a1(hl), d1(hl);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t s = 0; s < stride; ++s) {
                const std::size_t base = o * n * stride + s;
                for (std::size_t r = 0; r < step; ++r) {
                    auto at = [&](std::size_t i) { return base + (r + i * step) * stride; };
                    for (std::size_t m = 0; m < half; ++m) {
                        a0[Eigen::Index(m)] = gain * lo_band[Eigen::Index(at(2 * m))];
                        d0[Eigen::Index(m)] = gain * hi_band[Eigen::Index(at(2 * m))];
                        a1[Eigen::Index(m)] = gain * lo_band[Eigen::Index(at(2 * m + 1))];
                        d1[Eigen::Index(m)] = gain * hi_band[Eigen::Index(at(2 * m + 1))];
                    }
                    const Vector<Scalar> even = idwt_single_level<Scalar>(a0, d0, filters_);
                    const Vector<Scalar> odd = idwt_single_level<Scalar>(a1, d1, filters_); // coset shifted by one
                    for (std::size_t i = 0; i < M; ++i)
                        out[Eigen::Index(at(i))] =
                            Scalar(0.5) * (even[Eigen::Index(i)] + odd[Eigen::Index((i + M - 1) % M)]);
                }
            }
        }
        return out;
    }

    GridShape shape_;
    FilterPair filters_;
    std::size_t levels_;
    Normalization norm_;
    std::vector<double> lo_;
    std::vector<double> hi_;
};

/// Level-J decomposition of an image.
inline WaveletPyramid<double> udwt_forward(const ImageGrid& x, const FilterPair& filters, std::size_t levels) {
    return UndecimatedWavelet(x.shape, filters, levels).forward<double>(x.values);
}

/// Reconstruction of an image from a pyramid produced by udwt_forward.
inline ImageGrid udwt_inverse(const WaveletPyramid<double>& p, const FilterPair& filters) {
    p.check_consistent();
    return ImageGrid(p.shape, UndecimatedWavelet(p.shape, filters, p.levels).inverse<double>(p));
}

} // namespace mpirecon::wavelet
