#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "mpirecon/wavelet.hpp"

using namespace mpirecon;
using namespace mpirecon::wavelet;

namespace {

Eigen::VectorXd random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v)
        x = g(rng);
    return v;
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

// Circular shift by one along `axis`.
Eigen::VectorXd shift(const Eigen::VectorXd& x, const GridShape& s, std::size_t axis) {
    Eigen::VectorXd out(x.size());
    const std::size_t n = s[axis], st = s.stride(axis);
    for (std::size_t p = 0; p < s.size(); ++p) {
        const std::size_t c = (p / st) % n;
        const std::size_t q = p - c * st + ((c + 1) % n) * st;
        out[Eigen::Index(q)] = x[Eigen::Index(p)];
    }
    return out;
}

} // namespace

TEST(FilterPair, HaarAndDb2AreOrthonormal) {
    EXPECT_NO_THROW(FilterPair::haar().validate());
    EXPECT_NO_THROW(FilterPair::daubechies2().validate());
    const auto h = FilterPair::haar();
    EXPECT_NEAR(h.lo[0], 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(h.hi[0], 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(h.hi[1], -1 / std::sqrt(2.0), 1e-15);
    EXPECT_THROW(FilterPair::from_name("sym9"), std::invalid_argument);
}

TEST(DwtSingleLevel, ConstantInput) {
    Eigen::VectorXd x = Eigen::VectorXd::Ones(4);
    auto [a, d] = dwt_single_level(x, FilterPair::haar());
    ASSERT_EQ(a.size(), 2);
    EXPECT_NEAR(a[0], std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(a[1], std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(d.cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(DwtSingleLevel, AlternatingInput) {
    Eigen::VectorXd x(4);
    x << 1, -1, 1, -1;
    auto [a, d] = dwt_single_level(x, FilterPair::haar());
    EXPECT_NEAR(a.cwiseAbs().maxCoeff(), 0.0, 1e-15);
    for (Eigen::Index k = 0; k < d.size(); ++k)
        EXPECT_NEAR(d[k], std::sqrt(2.0), 1e-15);
}

TEST(DwtSingleLevel, EnergyAndInverse) {
    std::mt19937_64 rng(1);
    for (const auto& f : {FilterPair::haar(), FilterPair::daubechies2()}) {
        const auto x = random_vector(32, rng);
        auto [a, d] = dwt_single_level(x, f);
        EXPECT_NEAR(a.squaredNorm() + d.squaredNorm(), x.squaredNorm(), 1e-12 * x.squaredNorm());
        EXPECT_LT(rel(idwt_single_level(a, d, f), x), 1e-13);
    }
}

TEST(DwtSingleLevel, RejectsOddLength) {
    EXPECT_THROW(dwt_single_level(Eigen::VectorXd(Eigen::VectorXd::Ones(5)), FilterPair::haar()), dimension_error);
}

TEST(Udwt, ConstantImageHasZeroDetails) {
    const double c = 0.37;
    const GridShape s{8, 8};
    const UndecimatedWavelet phi(s, FilterPair::haar(), 1);
    const auto p = phi.forward<double>(Eigen::VectorXd::Constant(64, c));
    for (const auto& d : p.details)
        EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-15);
    // Parseval scaling: the 2D low-pass gain is (sqrt(2)/sqrt(2))^2 = 1.
    EXPECT_NEAR(p.approx.minCoeff(), c, 1e-15);
    EXPECT_NEAR(p.approx.maxCoeff(), c, 1e-15);
}

TEST(Udwt, UnscaledHaarHasFrameConstantTwoIn1D) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    x[0] = 1;
    const UndecimatedWavelet phi(GridShape{4}, FilterPair::haar(), 1, Normalization::Unscaled);
    const auto p = phi.forward<double>(x);
    EXPECT_EQ(p.coefficient_count(), 8u);
    EXPECT_NEAR(p.squared_norm(), 2.0 * x.squaredNorm(), 1e-14);
    EXPECT_DOUBLE_EQ(phi.frame_constant(), 2.0);
    EXPECT_LT(rel(phi.inverse(p), x), 1e-14);
    EXPECT_LT(rel(phi.inverse_even_odd(p), x), 1e-14);
}

TEST(Udwt, UnscaledRejectsSeveralLevels) {
    EXPECT_THROW(UndecimatedWavelet(GridShape{16}, FilterPair::haar(), 2, Normalization::Unscaled),
                 std::invalid_argument);
}

TEST(Udwt, ParsevalOnRandom16x16) {
    std::mt19937_64 rng(2);
    const GridShape s{16, 16};
    const UndecimatedWavelet phi(s, FilterPair::haar(), 2);
    const auto x = random_vector(s.size(), rng);
    const auto p = phi.forward<double>(x);
    EXPECT_NEAR(p.squared_norm(), x.squaredNorm(), 1e-10 * x.squaredNorm());
    EXPECT_EQ(p.band_count(), 2u * 3u + 1u);
    EXPECT_EQ(p.coefficient_count(), 7u * 256u);
}

struct UdwtCase {
    GridShape shape;
    const char* filter;
    std::size_t levels;
};

class UdwtProperties : public ::testing::TestWithParam<UdwtCase> {};

TEST_P(UdwtProperties, TightFrameRoundTripAndAdjoint) {
    const auto& c = GetParam();
    std::mt19937_64 rng(3);
    const UndecimatedWavelet phi(c.shape, FilterPair::from_name(c.filter), c.levels);
    const auto x = random_vector(c.shape.size(), rng);
    const auto p = phi.forward<double>(x);
    EXPECT_NEAR(p.squared_norm(), x.squaredNorm(), 1e-10 * x.squaredNorm());
    EXPECT_LT(rel(phi.inverse(p), x), 1e-10);
    EXPECT_LT(rel(phi.adjoint(p), x), 1e-10);

    // <Phi x, y> = <x, Phi^* y> for a random pyramid-shaped y.
    auto y = p;
    y.assign_flat(random_vector(p.coefficient_count(), rng));
    const double lhs = p.flatten().dot(y.flatten());
    const double rhs = x.dot(phi.adjoint(y));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs) + 1e-12);

    bool dyadic = true;
    for (std::size_t a = 0; a < c.shape.rank(); ++a)
        dyadic = dyadic && c.shape[a] % (std::size_t{1} << c.levels) == 0;
    if (dyadic) {
        // The even/odd decimated path reconstructs the same signal.
        EXPECT_LT(rel(phi.inverse_even_odd(p), x), 1e-10);
        EXPECT_LT((phi.inverse_even_odd(p) - phi.inverse(p)).norm(), 1e-10 * x.norm());
    }
}

TEST_P(UdwtProperties, ShiftCovariance) {
    const auto& c = GetParam();
    std::mt19937_64 rng(4);
    const UndecimatedWavelet phi(c.shape, FilterPair::from_name(c.filter), c.levels);
    const auto x = random_vector(c.shape.size(), rng);
    const auto p = phi.forward<double>(x);
    for (std::size_t axis = 0; axis < c.shape.rank(); ++axis) {
        const auto q = phi.forward<double>(shift(x, c.shape, axis));
        for (std::size_t b = 0; b < p.details.size(); ++b)
            EXPECT_EQ(q.details[b], shift(p.details[b], c.shape, axis)) << "band " << b;
        EXPECT_EQ(q.approx, shift(p.approx, c.shape, axis));
    }
}

TEST_P(UdwtProperties, Linearity) {
    const auto& c = GetParam();
    std::mt19937_64 rng(5);
    const UndecimatedWavelet phi(c.shape, FilterPair::from_name(c.filter), c.levels);
    const auto x = random_vector(c.shape.size(), rng);
    const auto y = random_vector(c.shape.size(), rng);
    const double a = 1.7, b = -0.3;
    const auto lhs = phi.forward<double>(Eigen::VectorXd(a * x + b * y)).flatten();
    const auto rhs = (a * phi.forward<double>(x).flatten() + b * phi.forward<double>(y).flatten()).eval();
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
}

INSTANTIATE_TEST_SUITE_P(Grids, UdwtProperties,
                         ::testing::Values(UdwtCase{GridShape{64}, "haar", 3}, UdwtCase{GridShape{64}, "db2", 2},
                                           UdwtCase{GridShape{15}, "haar", 2}, UdwtCase{GridShape{32, 32}, "haar", 2},
                                           UdwtCase{GridShape{16, 12}, "db2", 2},
                                           UdwtCase{GridShape{13, 9}, "haar", 1},
                                           UdwtCase{GridShape{16, 16, 8}, "haar", 2},
                                           UdwtCase{GridShape{8, 8, 8}, "db2", 1}));

TEST(Udwt, ComplexInputMatchesRealAndImaginaryParts) {
    std::mt19937_64 rng(6);
    const GridShape s{16, 8};
    const UndecimatedWavelet phi(s, FilterPair::haar(), 2);
    const auto re = random_vector(s.size(), rng), im = random_vector(s.size(), rng);
    Eigen::VectorXcd z = re.cast<std::complex<double>>() + std::complex<double>(0, 1) * im.cast<std::complex<double>>();
    const auto pz = phi.forward<std::complex<double>>(z).flatten();
    const auto pr = phi.forward<double>(re).flatten();
    const auto pi = phi.forward<double>(im).flatten();
    EXPECT_LT((pz.real() - pr).norm(), 1e-13);
    EXPECT_LT((pz.imag() - pi).norm(), 1e-13);
}

TEST(Udwt, ZeroPyramidGivesZeroImage) {
    const GridShape s{16, 16};
    const UndecimatedWavelet phi(s, FilterPair::haar(), 2);
    auto p = phi.forward<double>(Eigen::VectorXd::Zero(256));
    EXPECT_EQ(phi.inverse(p), Eigen::VectorXd::Zero(256));
    EXPECT_EQ(phi.inverse_even_odd(p), Eigen::VectorXd::Zero(256));
}

TEST(Udwt, ConstantSurvivesZeroedDetails) {
    const GridShape s{16, 16};
    const UndecimatedWavelet phi(s, FilterPair::haar(), 2);
    auto p = phi.forward<double>(Eigen::VectorXd::Constant(256, 0.6));
    for (auto& d : p.details)
        d.setZero();
    EXPECT_LT((phi.inverse(p) - Eigen::VectorXd::Constant(256, 0.6)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Udwt, FreeFunctionsRoundTrip) {
    std::mt19937_64 rng(7);
    const ImageGrid x(GridShape{16, 16}, random_vector(256, rng));
    const auto p = udwt_forward(x, FilterPair::haar(), 2);
    const auto back = udwt_inverse(p, FilterPair::haar());
    EXPECT_EQ(back.shape, x.shape);
    EXPECT_LT(rel(back.values, x.values), 1e-10);
}

TEST(Udwt, Errors) {
    EXPECT_THROW(UndecimatedWavelet(GridShape{4, 4}, FilterPair::haar(), 3), dimension_error);
    EXPECT_THROW(UndecimatedWavelet(GridShape{6}, FilterPair::daubechies2(), 2), dimension_error);
    const UndecimatedWavelet phi(GridShape{8, 8}, FilterPair::haar(), 1);
    EXPECT_THROW(phi.forward<double>(Eigen::VectorXd::Zero(10)), shape_error);
    auto p = phi.forward<double>(Eigen::VectorXd::Zero(64));
    p.details.pop_back();
    EXPECT_THROW(phi.inverse(p), shape_error);
    // Even/odd reconstruction needs every axis divisible by 2^J.
    const UndecimatedWavelet odd(GridShape{10, 8}, FilterPair::haar(), 2);
    EXPECT_THROW(odd.inverse_even_odd(odd.forward<double>(Eigen::VectorXd::Zero(80))), dimension_error);
}
