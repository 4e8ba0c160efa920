#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "mpirecon/wavelet.hpp"

namespace mpirecon::prox {

enum class ThresholdKind { None, Soft, NNG, Hard };

inline std::string_view to_string(ThresholdKind k) {
    switch (k) {
    case ThresholdKind::None: return "none";
    case ThresholdKind::Soft: return "soft";
    case ThresholdKind::NNG: return "nng";
    case ThresholdKind::Hard: return "hard";
    }
    return "?";
}

inline ThresholdKind threshold_kind_from_string(std::string_view s) {
    if (s == "none") return ThresholdKind::None;
    if (s == "soft" || s == "st") return ThresholdKind::Soft;
    if (s == "nng") return ThresholdKind::NNG;
    if (s == "hard") return ThresholdKind::Hard;
    throw std::invalid_argument("unknown threshold rule '" + std::string(s) + "'");
}

struct ThresholdRule {
    ThresholdKind kind = ThresholdKind::None;
    double lambda = 0.0;

    bool is_identity() const noexcept { return kind == ThresholdKind::None || lambda == 0.0; }
};

inline void check_lambda(double lambda) {
    if (!(lambda >= 0.0))
        throw std::invalid_argument("threshold must be nonnegative, got " + std::to_string(lambda));
}

// Scalar maps. All of them send |x| <= lambda to zero and act on the
// magnitude only, so complex inputs keep their phase.

template <class Scalar>
Scalar soft_threshold(Scalar x, double lambda) {
    const double mag = std::abs(x);
    if (mag <= lambda)
        return Scalar(0);
    return x * (1.0 - lambda / mag);
}

template <class Scalar>
Scalar nng_threshold(Scalar x, double lambda) {
    const double mag = std::abs(x);
    if (mag <= lambda)
        return Scalar(0);
    return x * (1.0 - (lambda * lambda) / (mag * mag));
}

template <class Scalar>
Scalar hard_threshold(Scalar x, double lambda) {
    return std::abs(x) > lambda ? x : Scalar(0);
}

template <class Derived>
typename Derived::PlainObject prox_soft(const Eigen::MatrixBase<Derived>& x, double lambda) {
    check_lambda(lambda);
    using S = typename Derived::Scalar;
    return x.unaryExpr([lambda](S v) { return soft_threshold(v, lambda); });
}

template <class Derived>
typename Derived::PlainObject prox_nng(const Eigen::MatrixBase<Derived>& x, double lambda) {
    check_lambda(lambda);
    using S = typename Derived::Scalar;
    return x.unaryExpr([lambda](S v) { return nng_threshold(v, lambda); });
}

template <class Derived>
typename Derived::PlainObject prox_hard(const Eigen::MatrixBase<Derived>& x, double lambda) {
    check_lambda(lambda);
    using S = typename Derived::Scalar;
    return x.unaryExpr([lambda](S v) { return hard_threshold(v, lambda); });
}

/// Applies `rule` in place.
template <class Derived>
void apply_rule(Eigen::MatrixBase<Derived>& x, const ThresholdRule& rule) {
    check_lambda(rule.lambda);
    using S = typename Derived::Scalar;
    const double l = rule.lambda;
    switch (rule.kind) {
    case ThresholdKind::None: return;
    case ThresholdKind::Soft: x = x.unaryExpr([l](S v) { return soft_threshold(v, l); }); return;
    case ThresholdKind::NNG: x = x.unaryExpr([l](S v) { return nng_threshold(v, l); }); return;
    case ThresholdKind::Hard: x = x.unaryExpr([l](S v) { return hard_threshold(v, l); }); return;
    }
}

/// Penalty whose proximal map is the non-negative Garrote with threshold
/// lambda: sum_i lambda^2 (1 + asinh(|x_i|/2lambda) + |x_i|/(sqrt(|x_i|^2+4lambda^2)+|x_i|)).
template <class Derived>
double nng_penalty_eval(const Eigen::MatrixBase<Derived>& x, double lambda) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("nng penalty needs lambda > 0");
    const double l2 = lambda * lambda;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double a = std::abs(x(i));
        sum += l2 + l2 * std::asinh(a / (2.0 * lambda)) + l2 * a / (std::sqrt(a * a + 4.0 * l2) + a);
    }
    return sum;
}

/// Value of the penalty whose prox is `rule`, summed over `x`.
/// Soft: lambda*|x|_1, NNG: nng_penalty_eval, Hard: lambda^2/2 * #nonzeros.
template <class Derived>
double rule_penalty(const Eigen::MatrixBase<Derived>& x, const ThresholdRule& rule) {
    switch (rule.kind) {
    case ThresholdKind::None: return 0.0;
    case ThresholdKind::Soft: return rule.lambda * x.cwiseAbs().sum();
    case ThresholdKind::NNG: return rule.lambda > 0 ? nng_penalty_eval(x, rule.lambda) : 0.0;
    case ThresholdKind::Hard: {
        Eigen::Index nz = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            nz += std::abs(x(i)) != 0.0;
        return 0.5 * rule.lambda * rule.lambda * double(nz);
    }
    }
    return 0.0;
}

struct ComposeOptions {
    bool threshold_approx = false; ///< also threshold the coarsest approximation band
};

/// Proximal map of x -> f(Phi x) for a tight frame Phi^* Phi = alpha I:
///   x + (1/alpha) Phi^*(T(Phi x) - Phi x),
/// where T applies `rule` to every detail band (and optionally the
/// approximation band).
template <class Scalar>
wavelet::Vector<Scalar> prox_composed(const wavelet::Vector<Scalar>& x, const wavelet::UndecimatedWavelet& phi,
                                      const ThresholdRule& rule, ComposeOptions opt = {}) {
    check_lambda(rule.lambda);
    if (rule.is_identity())
        return x;
    auto coeffs = phi.forward<Scalar>(x);
    auto shrink = [&](wavelet::Vector<Scalar>& band) {
        wavelet::Vector<Scalar> t = band;
        apply_rule(t, rule);
        band = t - band;
    };
    for (auto& band : coeffs.details)
        shrink(band);
    if (opt.threshold_approx)
        shrink(coeffs.approx);
    else
        coeffs.approx.setZero();
    wavelet::Vector<Scalar> out = x + phi.adjoint<Scalar>(coeffs) / phi.frame_constant();
    return out;
}

inline ImageGrid prox_composed(const ImageGrid& x, const wavelet::UndecimatedWavelet& phi, const ThresholdRule& rule,
                               ComposeOptions opt = {}) {
    require_same_shape(x.shape, phi.shape(), "prox_composed");
    return ImageGrid(x.shape, prox_composed<double>(x.values, phi, rule, opt));
}

/// Real part clamped at zero.
template <class Derived>
Eigen::VectorXd project_nonneg(const Eigen::MatrixBase<Derived>& x) {
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out[i] = std::max(0.0, double(std::real(x(i))));
    return out;
}

} // namespace mpirecon::prox
