#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "mpirecon/metrics.hpp"
#include "mpirecon/simulate.hpp"

using namespace mpirecon;
using namespace mpirecon::metrics;

namespace {

ImageGrid random_image(GridShape s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    ImageGrid img(std::move(s));
    for (auto& v : img.values)
        v = u(rng);
    return img;
}

} // namespace

TEST(Psnr, HandComputation) {
    ImageGrid rec(GridShape{1}), ref(GridShape{1});
    rec.values[0] = 0.9;
    ref.values[0] = 1.0;
    EXPECT_NEAR(psnr(rec, ref, 1.0), 20.0, 1e-10);
}

TEST(Psnr, ZeroErrorIsInfinite) {
    std::mt19937_64 rng(51);
    const auto ref = random_image(GridShape{8, 8}, rng);
    const ImageGrid rec(ref.shape, ref.values / 4.0);
    EXPECT_EQ(psnr(rec, ref, 4.0), std::numeric_limits<double>::infinity());
    EXPECT_EQ(psnr(ImageGrid(GridShape{4}), ImageGrid(GridShape{4}), 1.0), std::numeric_limits<double>::infinity());
}

TEST(Psnr, MatchesTwoPassReference) {
    std::mt19937_64 rng(52);
    const auto a = random_image(GridShape{8, 8}, rng), b = random_image(GridShape{8, 8}, rng);
    double sum = 0;
    for (Eigen::Index i = 0; i < 64; ++i) {
        const double d = 3.0 * a.values[i] - b.values[i];
        sum += d * d;
    }
    const double ref = -10.0 * std::log10(sum / 64.0);
    EXPECT_NEAR(psnr(a, b, 3.0), ref, 1e-10);
}

TEST(Psnr, DecreasesWithNoise) {
    std::mt19937_64 rng(53);
    const auto ref = random_image(GridShape{16, 16}, rng);
    std::normal_distribution<double> g;
    Eigen::VectorXd noise(256);
    for (auto& v : noise)
        v = g(rng);
    double prev = std::numeric_limits<double>::infinity();
    for (const double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
        const double p = psnr(ImageGrid(ref.shape, ref.values + amp * noise), ref, 1.0);
        EXPECT_LT(p, prev);
        prev = p;
    }
}

TEST(Psnr, Errors) {
    EXPECT_THROW(psnr(ImageGrid(GridShape{4}), ImageGrid(GridShape{5}), 1.0), shape_error);
    EXPECT_THROW(psnr(ImageGrid(GridShape{4}), ImageGrid(GridShape{4}), 0.0), std::invalid_argument);
}

TEST(Ssim, IdentityIsExactlyOne) {
    std::mt19937_64 rng(54);
    const auto x = random_image(GridShape{20, 24}, rng);
    EXPECT_EQ(ssim(x, x), 1.0);
    const auto shape = simulate::make_shape_phantom(GridShape{32, 32});
    EXPECT_EQ(ssim(shape, shape), 1.0);
}

TEST(Ssim, InvertedBinaryImageScoresLow) {
    auto mask = simulate::make_shape_phantom(GridShape{32, 32});
    for (auto& v : mask.values)
        v = v > 0 ? 1.0 : 0.0;
    const ImageGrid inv(mask.shape, (1.0 - mask.values.array()).matrix());
    const double s = ssim(mask, inv);
    EXPECT_LT(s, 0.5);
    RecordProperty("ssim_inverted_shape_mask", std::to_string(s));
}

TEST(Ssim, SymmetricAndScaleInvariant) {
    std::mt19937_64 rng(55);
    const auto x = random_image(GridShape{16, 16}, rng), y = random_image(GridShape{16, 16}, rng);
    EXPECT_NEAR(ssim(x, y), ssim(y, x), 1e-12);
    for (const double a : {0.1, 3.0, 250.0})
        EXPECT_NEAR(ssim(ImageGrid(x.shape, a * x.values), ImageGrid(y.shape, a * y.values)), ssim(x, y), 1e-8);
    const double s = ssim(x, y);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
}

TEST(Ssim, ThreeDimensionalIsMeanOverSlices) {
    std::mt19937_64 rng(56);
    const GridShape s3{12, 12, 3};
    const auto x = random_image(s3, rng), y = random_image(s3, rng);
    const double range = std::max(x.values.maxCoeff(), y.values.maxCoeff());
    double mean = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        ImageGrid xs(GridShape{12, 12}), ys(GridShape{12, 12});
        for (std::size_t p = 0; p < 144; ++p) {
            xs.values[Eigen::Index(p)] = x.values[Eigen::Index(p * 3 + k)];
            ys.values[Eigen::Index(p)] = y.values[Eigen::Index(p * 3 + k)];
        }
        mean += detail::ssim_slice(xs.values.data(), ys.values.data(), 12, 12, 1, range, SsimOptions{});
    }
    EXPECT_NEAR(ssim(x, y), mean / 3.0, 1e-12);
}

TEST(Ssim, Errors) {
    EXPECT_THROW(ssim(ImageGrid(GridShape{8, 8}), ImageGrid(GridShape{8, 8})), dimension_error);
    EXPECT_THROW(ssim(ImageGrid(GridShape{16, 16}), ImageGrid(GridShape{16, 17})), shape_error);
    EXPECT_THROW(ssim(ImageGrid(GridShape{64}), ImageGrid(GridShape{64})), dimension_error);
}
