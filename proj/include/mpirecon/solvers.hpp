#pragma once

// Row-action and proximal-gradient solvers for A x = b with a wavelet
// sparsity prior. One epoch is one pass over all rows of A (a Kaczmarz
// sweep or a FISTA gradient step); every solver shares the relative-change
// stopping rule and the ReconReport bookkeeping below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mpirecon/error.hpp"
#include "mpirecon/grid.hpp"
#include "mpirecon/prox.hpp"
#include "mpirecon/system_matrix.hpp"
#include "mpirecon/wavelet.hpp"

namespace mpirecon::solvers {

using Eigen::Index;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class StopReason { Tolerance, MaxEpochs };

inline std::string_view to_string(StopReason r) { return r == StopReason::Tolerance ? "tolerance" : "max_epochs"; }

struct RowOrder {
    enum class Kind { Cyclic, Shuffled } kind = Kind::Cyclic;
    std::uint64_t seed = 0;

    static RowOrder cyclic() { return {}; }
    static RowOrder shuffled(std::uint64_t seed) { return {Kind::Shuffled, seed}; }
};

/// How the FISTA gradient step is derived from the operator norm L
/// (largest eigenvalue of A^*A).
enum class StepRule {
    InverseLipschitz, ///< step 1/L
    InverseSqrt,      ///< step 1/sqrt(L), kept for reproduction experiments
};

/// Called after every epoch with the current iterate. Time spent here is
/// not counted in the solver clock.
using EpochObserver = std::function<void(std::size_t epoch, const VectorXcd& x)>;

struct SolverConfig {
    double lambda = 0.0;
    prox::ThresholdKind rule = prox::ThresholdKind::NNG;
    std::size_t max_epochs = 3000;
    double eps_r = 1e-5;
    std::optional<double> opnorm; ///< FISTA: largest eigenvalue of A^*A
    StepRule step_rule = StepRule::InverseLipschitz;
    double rho = 0.0; ///< Tikhonov weight of the regularized Kaczmarz baseline
    RowOrder row_order;
    bool enforce_nonneg = true;
    bool threshold_approx = false;
    bool track_residual = true;  ///< otherwise residual_history holds NaN
    bool track_objective = false;
    EpochObserver observer;

    void validate() const {
        if (!(eps_r > 0))
            throw std::invalid_argument("eps_r must be positive");
        if (max_epochs < 1)
            throw std::invalid_argument("max_epochs must be at least 1");
        if (!(lambda >= 0))
            throw std::invalid_argument("lambda must be nonnegative");
        if (!(rho >= 0))
            throw std::invalid_argument("rho must be nonnegative");
    }
};

struct ReconReport {
    ImageGrid x;        ///< real part of the final iterate, projected when enforce_nonneg
    VectorXcd iterate;  ///< final iterate as computed
    std::size_t epochs_run = 0;
    std::vector<double> rel_change_history;
    std::vector<double> residual_history;
    std::vector<double> objective_history; ///< empty unless tracked
    std::vector<double> elapsed_history;   ///< solver seconds at the end of each epoch
    double wall_time_s = 0.0;
    StopReason stopped_by = StopReason::MaxEpochs;
};

/// Relative change ||x_prev - x_next|| / ||x_prev||; when x_prev is zero the
/// change is ||x_next||.
template <class DA, class DB>
double relative_change(const Eigen::MatrixBase<DA>& x_prev, const Eigen::MatrixBase<DB>& x_next) {
    if (x_prev.size() != x_next.size())
        throw shape_error("relative_change: iterate lengths differ");
    const double base = x_prev.norm();
    const double diff = (x_prev - x_next).norm();
    return base == 0.0 ? diff : diff / base;
}

template <class DA, class DB>
bool stop_check(const Eigen::MatrixBase<DA>& x_prev, const Eigen::MatrixBase<DB>& x_next, double eps_r) {
    return relative_change(x_prev, x_next) < eps_r;
}

/// One Kaczmarz projection per row, in the given order:
///   x += (b_i - <a_i, x>) / ||a_i||^2 * conj(a_i).
inline void kaczmarz_sweep(const SystemMatrix& A, const VectorXcd& b, VectorXcd& x, std::span<const Index> order) {
    for (const Index i : order) {
        const auto row = A.entries.row(i);
        const double nrm2 = A.row_norms[i] * A.row_norms[i];
        const cplx r = b[i] - row.transpose().cwiseProduct(x).sum();
        x.noalias() += (r / nrm2) * row.adjoint();
    }
}

inline VectorXcd kaczmarz_sweep(const SystemMatrix& A, const VectorXcd& b, VectorXcd x) {
    std::vector<Index> order(std::size_t(A.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    kaczmarz_sweep(A, b, x, order);
    return x;
}

/// Gradient step on 1/2 ||Ax - b||^2: x - gamma A^*(Ax - b).
inline VectorXcd landweber_step(const SystemMatrix& A, const VectorXcd& b, const VectorXcd& x, double gamma) {
    if (!(gamma > 0))
        throw std::invalid_argument("landweber step size must be positive");
    return x - gamma * (A.entries.adjoint() * (A.entries * x - b));
}

inline double residual_norm(const SystemMatrix& A, const VectorXcd& b, const VectorXcd& x) {
    return (A.entries * x - b).norm();
}

/// Largest eigenvalue of A^*A by power iteration. Stops once the eigen
/// residual ||A^*A v - theta v|| drops below tol * theta.
inline double power_iteration_opnorm(const SystemMatrix& A, double tol = 1e-8, std::size_t max_it = 10000) {
    const Index n = A.cols();
    std::mt19937_64 rng(0x5851f42d4c957f2dULL);
    std::normal_distribution<double> gauss;
    VectorXcd v(n);
    for (Index i = 0; i < n; ++i)
        v[i] = cplx(gauss(rng), gauss(rng));
    v.normalize();
    double theta = 0.0;
    for (std::size_t it = 0; it < max_it; ++it) {
        const VectorXcd w = A.entries.adjoint() * (A.entries * v);
        theta = v.dot(w).real();
        const double res = (w - theta * v).norm();
        if (res <= tol * theta || w.norm() == 0.0)
            return theta;
        v = w / w.norm();
    }
    throw convergence_error("power iteration did not reach tolerance " + std::to_string(tol) + " in " +
                                std::to_string(max_it) + " iterations (estimate " + std::to_string(theta) + ")",
                            theta);
}

/// t_k from t_{k-1} in the FISTA momentum sequence.
inline double fista_next_t(double t_prev) { return (1.0 + std::sqrt(4.0 * t_prev * t_prev + 1.0)) / 2.0; }

/// 1/2 ||Ax - b||^2 + penalty(Phi x) over the thresholded bands.
inline double composite_objective(const SystemMatrix& A, const VectorXcd& b, const VectorXcd& x,
                                  const wavelet::UndecimatedWavelet& phi, const prox::ThresholdRule& rule,
                                  prox::ComposeOptions opt = {}) {
    const double fit = 0.5 * (A.entries * x - b).squaredNorm();
    if (rule.kind == prox::ThresholdKind::None)
        return fit;
    const auto coeffs = phi.forward<cplx>(x);
    double pen = 0.0;
    for (const auto& band : coeffs.details)
        pen += prox::rule_penalty(band, rule);
    if (opt.threshold_approx)
        pen += prox::rule_penalty(coeffs.approx, rule);
    return fit + pen;
}

namespace detail {

class Stopwatch {
public:
    using clock = std::chrono::steady_clock;

    void resume() { start_ = clock::now(); }
    void pause() { total_ += std::chrono::duration<double>(clock::now() - start_).count(); }
    double seconds() const { return total_; }

private:
    clock::time_point start_{};
    double total_ = 0.0;
};

inline void check_system(const SystemMatrix& A, const VectorXcd& b) {
    A.validate();
    if (b.size() != A.rows())
        throw shape_error("measurement vector has " + std::to_string(b.size()) + " entries, matrix has " +
                          std::to_string(A.rows()) + " rows");
}

class RowSequencer {
public:
    RowSequencer(Index m, RowOrder order) : order_(order), rows_(std::size_t(m)), rng_(order.seed) {
        std::iota(rows_.begin(), rows_.end(), Index{0});
    }

    std::span<const Index> next_epoch() {
        if (order_.kind == RowOrder::Kind::Shuffled)
            std::shuffle(rows_.begin(), rows_.end(), rng_);
        return rows_;
    }

private:
    RowOrder order_;
    std::vector<Index> rows_;
    std::mt19937_64 rng_;
};

inline VectorXcd as_complex(const VectorXd& v) { return v.cast<cplx>(); }

// Shared epoch loop. `step` advances the iterate by one epoch in place.
template <class Step>
ReconReport run_epochs(const SystemMatrix& A, const VectorXcd& b, const SolverConfig& cfg, VectorXcd x, Step&& step,
                       const std::function<double(const VectorXcd&)>& objective) {
    ReconReport rep;
    Stopwatch clock;
    VectorXcd prev;
    for (std::size_t k = 1; k <= cfg.max_epochs; ++k) {
        clock.resume();
        prev = x;
        step(x);
        const double eps = relative_change(prev, x);
        clock.pause();

        rep.rel_change_history.push_back(eps);
        rep.elapsed_history.push_back(clock.seconds());
        rep.residual_history.push_back(cfg.track_residual ? residual_norm(A, b, x)
                                                          : std::numeric_limits<double>::quiet_NaN());
        if (objective)
            rep.objective_history.push_back(objective(x));
        if (cfg.observer)
            cfg.observer(k, x);
        rep.epochs_run = k;
        if (eps < cfg.eps_r) {
            rep.stopped_by = StopReason::Tolerance;
            break;
        }
    }
    rep.wall_time_s = clock.seconds();
    rep.x = ImageGrid(A.grid, cfg.enforce_nonneg ? prox::project_nonneg(x) : VectorXd(x.real()));
    rep.iterate = std::move(x);
    return rep;
}

inline std::function<double(const VectorXcd&)> make_objective(const SystemMatrix& A, const VectorXcd& b,
                                                               const SolverConfig& cfg,
                                                               const wavelet::UndecimatedWavelet* phi) {
    if (!cfg.track_objective)
        return {};
    const prox::ThresholdRule rule{cfg.rule, cfg.lambda};
    const prox::ComposeOptions opt{cfg.threshold_approx};
    if (phi == nullptr)
        return [&A, &b](const VectorXcd& x) { return 0.5 * (A.entries * x - b).squaredNorm(); };
    return [&A, &b, phi, rule, opt](const VectorXcd& x) { return composite_objective(A, b, x, *phi, rule, opt); };
}

inline void check_phi(const SystemMatrix& A, const wavelet::UndecimatedWavelet& phi) {
    if (!(phi.shape() == A.grid))
        throw shape_error("wavelet grid " + phi.shape().to_string() + " does not match system grid " +
                          A.grid.to_string());
}

} // namespace detail

/// Plain Kaczmarz from x0 = 0, one sweep per epoch, optionally projected
/// onto the nonnegative reals after every sweep.
inline ReconReport kaczmarz_reconstruct(const SystemMatrix& A, const VectorXcd& b, const SolverConfig& cfg) {
    cfg.validate();
    detail::check_system(A, b);
    detail::RowSequencer rows(A.rows(), cfg.row_order);
    auto step = [&](VectorXcd& x) {
        kaczmarz_sweep(A, b, x, rows.next_epoch());
        if (cfg.enforce_nonneg)
            x = detail::as_complex(prox::project_nonneg(x));
    };
    return detail::run_epochs(A, b, cfg, VectorXcd::Zero(A.cols()), step, detail::make_objective(A, b, cfg, nullptr));
}

/// Sparse Kaczmarz: per epoch a full sweep, the nonnegativity projection and
/// one wavelet-domain proximal step with threshold cfg.lambda.
inline ReconReport ska_reconstruct(const SystemMatrix& A, const VectorXcd& b, const SolverConfig& cfg,
                                   const wavelet::UndecimatedWavelet& phi) {
    cfg.validate();
    detail::check_system(A, b);
    detail::check_phi(A, phi);
    if (!A.is_row_normalized(1e-10))
        throw solver_error("sparse Kaczmarz needs a row-normalized system matrix");
    const prox::ThresholdRule rule{cfg.rule, cfg.lambda};
    const prox::ComposeOptions opt{cfg.threshold_approx};
    detail::RowSequencer rows(A.rows(), cfg.row_order);
    auto step = [&](VectorXcd& x) {
        kaczmarz_sweep(A, b, x, rows.next_epoch());
        if (cfg.enforce_nonneg)
            x = detail::as_complex(prox::project_nonneg(x));
        if (!rule.is_identity())
            x = prox::prox_composed<cplx>(x, phi, rule, opt);
    };
    return detail::run_epochs(A, b, cfg, VectorXcd::Zero(A.cols()), step, detail::make_objective(A, b, cfg, &phi));
}

/// FISTA with projection and the composed wavelet prox (threshold
/// lambda * step). Needs cfg.opnorm.
inline ReconReport fista_reconstruct(const SystemMatrix& A, const VectorXcd& b, const SolverConfig& cfg,
                                     const wavelet::UndecimatedWavelet& phi) {
    cfg.validate();
    detail::check_system(A, b);
    detail::check_phi(A, phi);
    if (!cfg.opnorm)
        throw solver_error("FISTA needs the operator norm of A^*A (run power iteration first)");
    if (!(*cfg.opnorm > 0))
        throw solver_error("FISTA operator norm must be positive");
    const double step_size =
        cfg.step_rule == StepRule::InverseLipschitz ? 1.0 / *cfg.opnorm : 1.0 / std::sqrt(*cfg.opnorm);
    const prox::ThresholdRule rule{cfg.rule, cfg.lambda * step_size};
    const prox::ComposeOptions opt{cfg.threshold_approx};

    VectorXcd z = VectorXcd::Zero(A.cols());
    VectorXcd y;
    double t = 1.0;
    auto step = [&](VectorXcd& x) {
        y = z - step_size * (A.entries.adjoint() * (A.entries * z - b));
        if (cfg.enforce_nonneg)
            y = detail::as_complex(prox::project_nonneg(y));
        VectorXcd x_new = rule.is_identity() ? y : prox::prox_composed<cplx>(y, phi, rule, opt);
        const double t_new = fista_next_t(t);
        z = x_new + ((t - 1.0) / t_new) * (x_new - x);
        t = t_new;
        x = std::move(x_new);
    };
    return detail::run_epochs(A, b, cfg, VectorXcd::Zero(A.cols()), step, detail::make_objective(A, b, cfg, &phi));
}

namespace detail {

// One sweep over the augmented system [A, sqrt(rho) I][x; v] = b.
inline void regularized_sweep(const SystemMatrix& A, const VectorXcd& b, double sr, VectorXcd& x, VectorXcd& v,
                              std::span<const Index> order) {
    const double rho = sr * sr;
    for (const Index i : order) {
        const auto row = A.entries.row(i);
        const double denom = A.row_norms[i] * A.row_norms[i] + rho;
        const cplx dot = row.transpose().cwiseProduct(x).sum();
        const cplx beta = (b[i] - dot - sr * v[i]) / denom;
        x.noalias() += beta * row.adjoint();
        v[i] += beta * sr;
    }
}

} // namespace detail

/// Tikhonov-regularized Kaczmarz on the augmented system [A, sqrt(rho) I]:
///   beta = (b_i - <a_i, x> - sqrt(rho) v_i) / (||a_i||^2 + rho)
///   x += beta conj(a_i),  v_i += beta sqrt(rho)
/// with one nonnegativity projection per epoch.
inline ReconReport regkz_reconstruct(const SystemMatrix& A, const VectorXcd& b, const SolverConfig& cfg) {
    cfg.validate();
    detail::check_system(A, b);
    const double sr = std::sqrt(cfg.rho);
    VectorXcd v = VectorXcd::Zero(A.rows());
    detail::RowSequencer rows(A.rows(), cfg.row_order);
    auto step = [&](VectorXcd& x) {
        detail::regularized_sweep(A, b, sr, x, v, rows.next_epoch());
        if (cfg.enforce_nonneg)
            x = detail::as_complex(prox::project_nonneg(x));
    };
    SolverConfig plain = cfg;
    plain.rule = prox::ThresholdKind::None;
    return detail::run_epochs(A, b, cfg, VectorXcd::Zero(A.cols()), step,
                              detail::make_objective(A, b, plain, nullptr));
}

} // namespace mpirecon::solvers
