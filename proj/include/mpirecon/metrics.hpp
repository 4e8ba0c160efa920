#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "mpirecon/error.hpp"
#include "mpirecon/grid.hpp"

namespace mpirecon::metrics {

/// 10 log10(1 / MSE) with MSE = mean((sigma x_rec - x_true)^2). There is no
/// peak term; phantoms live in [0, 1]. Zero error gives +infinity.
inline double psnr(const ImageGrid& x_rec, const ImageGrid& x_true, double sigma) {
    require_same_shape(x_rec.shape, x_true.shape, "psnr");
    if (!(sigma > 0))
        throw std::invalid_argument("psnr: sigma must be positive");
    const double mse = (sigma * x_rec.values - x_true.values).squaredNorm() / double(x_true.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

/// Local SSIM statistics use an 11x11 Gaussian window (sigma 1.5) over the
/// valid region, K1 = 0.01, K2 = 0.03.
struct SsimOptions {
    int window = 11;
    double window_sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(std::size_t(size * size));
    const double c = 0.5 * (size - 1);
    double sum = 0;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
            w[std::size_t(i * size + j)] = std::exp(-d2 / (2 * sigma * sigma));
            sum += w[std::size_t(i * size + j)];
        }
    for (auto& v : w)
        v /= sum;
    return w;
}

// Mean SSIM of two H x W slices starting at the given offsets with stride.
inline double ssim_slice(const double* x, const double* y, std::size_t H, std::size_t W, std::size_t pix_stride,
                         double range, const SsimOptions& opt) {
    const auto win = gaussian_window(opt.window, opt.window_sigma);
    const std::size_t ws = std::size_t(opt.window);
    const double c1 = (opt.k1 * range) * (opt.k1 * range);
    const double c2 = (opt.k2 * range) * (opt.k2 * range);
    double total = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i + ws <= H; ++i) {
        for (std::size_t j = 0; j + ws <= W; ++j) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (std::size_t a = 0; a < ws; ++a)
                for (std::size_t b = 0; b < ws; ++b) {
                    const double w = win[a * ws + b];
                    const std::size_t k = ((i + a) * W + (j + b)) * pix_stride;
                    mx += w * x[k];
                    my += w * y[k];
                    sxx += w * x[k] * x[k];
                    syy += w * y[k] * y[k];
                    sxy += w * x[k] * y[k];
                }
            const double vx = sxx - mx * mx;
            const double vy = syy - my * my;
            const double cxy = sxy - mx * my;
            total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / double(count);
}

} // namespace detail

/// Mean structural similarity. Both images share the dynamic range
/// [0, max(max x, max y)]; 3D grids are averaged over slices of the last axis.
inline double ssim(const ImageGrid& x, const ImageGrid& y, const SsimOptions& opt = {}) {
    require_same_shape(x.shape, y.shape, "ssim");
    const auto& s = x.shape;
    if (s.rank() != 2 && s.rank() != 3)
        throw dimension_error("ssim: needs a 2D or 3D grid, got " + s.to_string());
    if (s[0] < std::size_t(opt.window) || s[1] < std::size_t(opt.window))
        throw dimension_error("ssim: grid " + s.to_string() + " is smaller than the " +
                              std::to_string(opt.window) + "x" + std::to_string(opt.window) + " window");
    double range = std::max(x.values.maxCoeff(), y.values.maxCoeff());
    if (!(range > 0))
        range = 1.0;
    if (s.rank() == 2)
        return detail::ssim_slice(x.values.data(), y.values.data(), s[0], s[1], 1, range, opt);
    double total = 0;
    for (std::size_t k = 0; k < s[2]; ++k)
        total += detail::ssim_slice(x.values.data() + k, y.values.data() + k, s[0], s[1], s[2], range, opt);
    return total / double(s[2]);
}

} // namespace mpirecon::metrics
