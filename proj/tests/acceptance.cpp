// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "cli_runner.hpp"
#include "mpirecon/bench.hpp"
#include "mpirecon/prox.hpp"
#include "mpirecon/solvers.hpp"
#include "mpirecon/wavelet.hpp"

using namespace mpirecon;
using cd = std::complex<double>;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Eigen::VectorXd randn(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v)
        x = g(rng);
    return v;
}

RowMajorMatrixXcd randn_c(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    RowMajorMatrixXcd a(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            a(i, j) = cd(g(rng), g(rng));
    return a;
}

Outcome tight_frame() {
    std::mt19937_64 rng(101);
    double worst_frame = 0, worst_trip = 0;
    for (const GridShape s : {GridShape{64}, GridShape{32, 32}, GridShape{16, 16, 8}}) {
        for (const char* f : {"haar", "db2"}) {
            const wavelet::UndecimatedWavelet phi(s, wavelet::FilterPair::from_name(f), 2);
            for (int k = 0; k < 50; ++k) {
                const auto x = randn(s.size(), rng);
                const auto p = phi.forward<double>(x);
                worst_frame = std::max(worst_frame, (phi.adjoint(p) - x).norm() / x.norm());
                worst_trip = std::max(worst_trip, (phi.inverse_even_odd(p) - x).norm() / x.norm());
            }
        }
    }
    return {worst_frame <= 1e-10 && worst_trip <= 1e-10,
            "max frame error " + fmt("%.2e", worst_frame) + ", max round-trip error " + fmt("%.2e", worst_trip)};
}

double grid_argmin(double x, const std::function<double(double)>& pen) {
    const double lo = std::min(0.0, x) - 1.0, hi = std::max(0.0, x) + 1.0, step = 1e-4;
    double best_z = 0, best = std::numeric_limits<double>::infinity();
    const long n = std::lround((hi - lo) / step);
    for (long k = 0; k <= n; ++k) {
        const double z = lo + double(k) * step;
        const double v = pen(z) + 0.5 * (x - z) * (x - z);
        if (v < best) {
            best = v;
            best_z = z;
        }
    }
    return best_z;
}

Outcome prox_oracles() {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> ux(-4, 4), ul(0.1, 2);
    double worst_soft = 0, worst_nng = 0;
    Eigen::VectorXd one(1);
    for (int k = 0; k < 1000; ++k) {
        const double x = ux(rng), lambda = ul(rng);
        const double zs = grid_argmin(x, [&](double z) { return lambda * std::abs(z); });
        worst_soft = std::max(worst_soft, std::abs(prox::soft_threshold(x, lambda) - zs));
        const double zn = grid_argmin(x, [&](double z) {
            one[0] = z;
            return prox::nng_penalty_eval(one, lambda);
        });
        worst_nng = std::max(worst_nng, std::abs(prox::nng_threshold(x, lambda) - zn));
    }
    return {worst_soft <= 1e-3 && worst_nng <= 1e-3,
            "max deviation soft " + fmt("%.2e", worst_soft) + ", nng " + fmt("%.2e", worst_nng)};
}

Outcome kaczmarz_min_norm() {
    std::mt19937_64 rng(103);
    double worst = 0;
    int worst_sweeps = 0;
    for (int t = 0; t < 20; ++t) {
        const SystemMatrix A(randn_c(20, 10, rng), GridShape{10});
        const Eigen::MatrixXcd M = A.entries;
        Eigen::VectorXcd xt(10);
        const auto re = randn(10, rng), im = randn(10, rng);
        for (Eigen::Index j = 0; j < 10; ++j)
            xt[j] = cd(re[j], im[j]);
        const Eigen::VectorXcd b = M * xt;
        const Eigen::VectorXcd ref = (M.adjoint() * M).ldlt().solve(M.adjoint() * b);
        Eigen::VectorXcd x = Eigen::VectorXcd::Zero(10);
        int sweeps = 0;
        double err = 1;
        while (sweeps < 10000 && err > 1e-6) {
            x = solvers::kaczmarz_sweep(A, b, x);
            ++sweeps;
            err = (x - ref).norm() / ref.norm();
        }
        worst = std::max(worst, err);
        worst_sweeps = std::max(worst_sweeps, sweeps);
    }
    return {worst <= 1e-6, "max relative error " + fmt("%.2e", worst) + " after at most " +
                               std::to_string(worst_sweeps) + " sweeps"};
}

Outcome composition() {
    const GridShape s{8, 8};
    const wavelet::UndecimatedWavelet phi(s, wavelet::FilterPair::haar(), 1);
    const Eigen::Index n = 64;
    const auto rows = static_cast<Eigen::Index>(phi.forward<double>(Eigen::VectorXd::Zero(n)).coefficient_count());
    Eigen::MatrixXd P(rows, n);
    for (Eigen::Index j = 0; j < n; ++j)
        P.col(j) = phi.forward<double>(Eigen::VectorXd::Unit(n, j)).flatten();
    std::mt19937_64 rng(104);
    double worst = 0;
    for (const auto kind : {prox::ThresholdKind::Soft, prox::ThresholdKind::NNG})
        for (const double lambda : {0.1, 1.0})
            for (int t = 0; t < 5; ++t) {
                const auto x = randn(std::size_t(n), rng);
                const Eigen::VectorXd c = P * x;
                Eigen::VectorXd tc = c;
                for (Eigen::Index i = 0; i < rows - n; ++i)
                    tc[i] = kind == prox::ThresholdKind::Soft ? prox::soft_threshold(c[i], lambda)
                                                              : prox::nng_threshold(c[i], lambda);
                const Eigen::VectorXd expect = x + P.transpose() * (tc - c);
                const auto got = prox::prox_composed<double>(x, phi, {kind, lambda});
                worst = std::max(worst, (got - expect).cwiseAbs().maxCoeff());
            }
    return {worst <= 1e-10, "max deviation " + fmt("%.2e", worst)};
}

Outcome reductions() {
    std::mt19937_64 rng(105);
    const GridShape s{4, 4};
    RowMajorMatrixXcd a = randn_c(24, 16, rng);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        a.row(i) /= a.row(i).norm();
    const SystemMatrix A(a, s);
    const Eigen::VectorXcd b = randn_c(24, 1, rng).col(0);
    const wavelet::UndecimatedWavelet phi(s, wavelet::FilterPair::haar(), 1);

    solvers::SolverConfig cfg;
    cfg.rule = prox::ThresholdKind::None;
    cfg.enforce_nonneg = false;
    cfg.max_epochs = 50;
    cfg.eps_r = 1e-300;
    const double d1 =
        (solvers::ska_reconstruct(A, b, cfg, phi).iterate - solvers::kaczmarz_reconstruct(A, b, cfg).iterate)
            .cwiseAbs()
            .maxCoeff();

    solvers::SolverConfig rk;
    rk.rho = 0;
    rk.max_epochs = 50;
    rk.eps_r = 1e-300;
    const double d2 =
        (solvers::regkz_reconstruct(A, b, rk).iterate - solvers::kaczmarz_reconstruct(A, b, rk).iterate)
            .cwiseAbs()
            .maxCoeff();

    const GridShape s8{8, 8};
    const SystemMatrix I(RowMajorMatrixXcd::Identity(64, 64), s8);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::VectorXcd bi(64);
    for (auto& v : bi)
        v = u(rng);
    const wavelet::UndecimatedWavelet phi8(s8, wavelet::FilterPair::haar(), 2);
    solvers::SolverConfig fc;
    fc.lambda = 0;
    fc.opnorm = 1.0;
    const double d3 = (solvers::fista_reconstruct(I, bi, fc, phi8).iterate - bi).norm();

    return {d1 <= 1e-12 && d2 <= 1e-12 && d3 <= 1e-8, "ska vs kaczmarz " + fmt("%.1e", d1) + ", regkz vs kaczmarz " +
                                                          fmt("%.1e", d2) + ", fista to b " + fmt("%.1e", d3)};
}

struct BenchOutcome {
    Outcome psnr_order, epoch_order;
};

BenchOutcome benchmark() {
    bench::BenchOptions opt; // 32x32, m = 2048, seed 7
    std::vector<bench::CellSpec> cells;
    const bench::Algo algos[] = {bench::Algo::SkaNng, bench::Algo::SkaSt, bench::Algo::FistaNng,
                                 bench::Algo::FistaSt, bench::Algo::Regkz};
    for (const double sigma : {10.0, 50.0})
        for (const auto a : algos)
            cells.push_back({simulate::PhantomKind::Shape, sigma, a});
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = bench::run_bench(cells, opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fputs(bench::results_csv(rows).c_str(), stderr);

    bool psnr_ok = secs < 300, epochs_ok = true;
    std::string pd, ed;
    for (const double sigma : {10.0, 50.0}) {
        auto get = [&](bench::Algo a) { return bench::find_cell(rows, simulate::PhantomKind::Shape, sigma, a); };
        const auto *nng = get(bench::Algo::SkaNng), *st = get(bench::Algo::SkaSt), *rk = get(bench::Algo::Regkz);
        const auto *fn = get(bench::Algo::FistaNng), *fs = get(bench::Algo::FistaSt);
        if (!nng || !st || !rk || !fn || !fs)
            return {{false, "benchmark cell failed"}, {false, "benchmark cell failed"}};
        psnr_ok = psnr_ok && nng->psnr_db >= st->psnr_db && nng->psnr_db >= rk->psnr_db;
        epochs_ok = epochs_ok && nng->epochs <= fn->epochs && st->epochs <= fs->epochs;
        const std::string tag = "sigma=" + fmt("%g", sigma) + ": ";
        pd += tag + "ska-nng " + fmt("%.2f", nng->psnr_db) + " ska-st " + fmt("%.2f", st->psnr_db) + " regkz " +
              fmt("%.2f", rk->psnr_db) + " dB; ";
        ed += tag + "nng " + std::to_string(nng->epochs) + " vs " + std::to_string(fn->epochs) + ", st " +
              std::to_string(st->epochs) + " vs " + std::to_string(fs->epochs) + "; ";
    }
    pd += "bench time " + fmt("%.0f", secs) + " s";
    ed += "(ska vs fista epochs)";
    return {{psnr_ok, pd}, {epochs_ok, ed}};
}

Outcome stopping_rule() {
    const Eigen::Vector2d a(1, 0), near(1, 1e-6), far(1, 1e-4);
    const bool c1 = solvers::stop_check(a, a, 1e-5) && solvers::stop_check(a, a, 1e-300);
    const bool c2 = solvers::stop_check(a, near, 1e-5);
    const bool c3 = !solvers::stop_check(a, far, 1e-5);
    return {c1 && c2 && c3, std::string("cases ") + (c1 ? "ok" : "bad") + "/" + (c2 ? "ok" : "bad") + "/" +
                                (c3 ? "ok" : "bad")};
}

Outcome operator_norm() {
    std::mt19937_64 rng(109);
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
        const SystemMatrix A(randn_c(30, 20, rng), GridShape{20});
        const Eigen::MatrixXcd M = A.entries;
        const double ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(M.adjoint() * M).eigenvalues().maxCoeff();
        worst = std::max(worst, std::abs(solvers::power_iteration_opnorm(A) - ref) / ref);
    }
    return {worst <= 1e-6, "max relative error " + fmt("%.2e", worst)};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    std::string metrics_out[2];
    std::vector<std::string> files[2];
    const char* names[] = {"sim/phantom.mpir", "sim/matrix.mpir", "sim/data.mpir", "rec/recon.mpir",
                           "rec/recon.pgm",    "rec/convergence.csv", "rec/report.mpir"};
    for (int run = 0; run < 2; ++run) {
        const auto dir = testutil::fresh_dir("mpirecon_acceptance_run" + std::to_string(run));
        const auto sim = (dir / "sim").string(), rec = (dir / "rec").string();
        if (testutil::run_cli("simulate --sigma 10 --seed 7 --out " + sim).exit_code != 0)
            return {false, "simulate failed"};
        if (testutil::run_cli("reconstruct --algo ska-nng --lambda 1e-3 --no-timing --matrix " + sim +
                              "/matrix.mpir --data " + sim + "/data.mpir --out " + rec)
                .exit_code != 0)
            return {false, "reconstruct failed"};
        const auto m = testutil::run_cli("metrics --ref " + sim + "/phantom.mpir --rec " + rec +
                                         "/recon.mpir --sigma 10");
        if (m.exit_code != 0)
            return {false, "metrics failed"};
        metrics_out[run] = m.out;
        for (const char* n : names)
            files[run].push_back(testutil::slurp(dir / n));
    }
    for (std::size_t k = 0; k < files[0].size(); ++k)
        if (files[0][k].empty() || files[0][k] != files[1][k])
            return {false, std::string(names[k]) + " differs between runs"};
    if (metrics_out[0] != metrics_out[1])
        return {false, "metrics output differs"};
    for (int run = 0; run < 2; ++run)
        fs::remove_all(fs::temp_directory_path() / ("mpirecon_acceptance_run" + std::to_string(run)));
    std::string m = metrics_out[0];
    if (!m.empty() && m.back() == '\n')
        m.pop_back();
    return {true, std::to_string(files[0].size()) + " artifacts identical, psnr,ssim = " + m};
}

template <class F>
Outcome timed(F f, double budget_s) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = f();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0) {
        o.detail += " (" + fmt("%.1f", secs) + " s, budget " + fmt("%.0f", budget_s) + " s)";
        o.pass = o.pass && secs < budget_s;
    }
    return o;
}

} // namespace

int main() {
    std::vector<std::pair<std::string, Outcome>> results;
    auto report = [&](const std::string& name, Outcome o) {
        std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        results.emplace_back(name, std::move(o));
    };
    report("1 tight frame and round trip", timed(tight_frame, 10));
    report("2 prox oracles", timed(prox_oracles, 30));
    report("3 kaczmarz min-norm", timed(kaczmarz_min_norm, 20));
    report("4 composed prox", timed(composition, 0));
    report("5 solver reductions", timed(reductions, 0));
    const auto b = benchmark();
    report("6 benchmark psnr ordering", b.psnr_order);
    report("7 convergence-speed ordering", b.epoch_order);
    report("8 stopping rule", timed(stopping_rule, 0));
    report("9 operator norm", timed(operator_norm, 10));
    report("10 end-to-end determinism", timed(determinism, 0));
    bool all = true;
    for (const auto& r : results)
        all = all && r.second.pass;
    return all ? 0 : 1;
}
