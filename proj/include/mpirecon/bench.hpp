#pragma once

// Benchmark harness: phantom x sigma x algorithm cells on a synthetic
// problem, a per-cell lambda search that maximizes PSNR, convergence traces
// and the CSV layout of the results table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mpirecon/error.hpp"
#include "mpirecon/grid.hpp"
#include "mpirecon/io/container.hpp"
#include "mpirecon/io/report.hpp"
#include "mpirecon/metrics.hpp"
#include "mpirecon/simulate.hpp"
#include "mpirecon/solvers.hpp"
#include "mpirecon/wavelet.hpp"

namespace mpirecon::bench {

enum class Algo { SkaNng, SkaSt, FistaNng, FistaSt, Regkz, FusedLasso };

inline Algo algo_from_string(std::string_view s) {
    if (s == "ska-nng") return Algo::SkaNng;
    if (s == "ska-st") return Algo::SkaSt;
    if (s == "fista-nng") return Algo::FistaNng;
    if (s == "fista-st") return Algo::FistaSt;
    if (s == "regkz") return Algo::Regkz;
    if (s == "fused-lasso") return Algo::FusedLasso;
    throw std::invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

inline std::string_view to_string(Algo a) {
    switch (a) {
    case Algo::SkaNng: return "ska-nng";
    case Algo::SkaSt: return "ska-st";
    case Algo::FistaNng: return "fista-nng";
    case Algo::FistaSt: return "fista-st";
    case Algo::Regkz: return "regkz";
    case Algo::FusedLasso: return "fused-lasso";
    }
    return "?";
}

inline bool is_fista(Algo a) { return a == Algo::FistaNng || a == Algo::FistaSt; }

/// Parameters shared by every algorithm of a run.
struct RunParams {
    double eps_r = 1e-5;
    std::size_t max_epochs = 3000;
    std::size_t wavelet_levels = 2;
    std::string wavelet = "haar";
    bool enforce_nonneg = true;
};

/// Runs one algorithm. For regkz, `lambda` is the Tikhonov weight rho.
inline solvers::ReconReport run_algo(Algo algo, const SystemMatrix& A, const Eigen::VectorXcd& b, double lambda,
                                     const RunParams& p, std::optional<double> opnorm = std::nullopt,
                                     solvers::EpochObserver observer = {}, bool track_residual = true) {
    solvers::SolverConfig cfg;
    cfg.lambda = lambda;
    cfg.eps_r = p.eps_r;
    cfg.max_epochs = p.max_epochs;
    cfg.enforce_nonneg = p.enforce_nonneg;
    cfg.opnorm = opnorm;
    cfg.observer = std::move(observer);
    cfg.track_residual = track_residual;
    const bool nng = algo == Algo::SkaNng || algo == Algo::FistaNng;
    cfg.rule = nng ? prox::ThresholdKind::NNG : prox::ThresholdKind::Soft;

    switch (algo) {
    case Algo::SkaNng:
    case Algo::SkaSt:
    case Algo::FistaNng:
    case Algo::FistaSt: {
        const wavelet::UndecimatedWavelet phi(A.grid, wavelet::FilterPair::from_name(p.wavelet), p.wavelet_levels);
        if (is_fista(algo)) {
            if (!cfg.opnorm)
                cfg.opnorm = A.opnorm ? *A.opnorm : solvers::power_iteration_opnorm(A);
            return solvers::fista_reconstruct(A, b, cfg, phi);
        }
        return solvers::ska_reconstruct(A, b, cfg, phi);
    }
    case Algo::Regkz:
        cfg.rho = lambda;
        cfg.lambda = 0.0;
        return solvers::regkz_reconstruct(A, b, cfg);
    case Algo::FusedLasso: break;
    }
    throw solver_error(std::string(to_string(algo)) + " is not implemented");
}

/// Logarithmic grid lo..hi with n points (n >= 2), or {lo} when n == 1.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0) || !(hi >= lo) || n < 1)
        throw std::invalid_argument("lambda grid: need 0 < lo <= hi and at least one point");
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = n == 1 ? 0.0 : double(k) / double(n - 1);
        g[k] = std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo)));
    }
    return g;
}

/// "log:LO:HI:N" or a comma-separated list of values.
inline std::vector<double> parse_lambda_grid(std::string_view spec) {
    auto split = [](std::string_view s, char sep) {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (true) {
            const auto pos = s.find(sep, start);
            out.emplace_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
            if (pos == std::string_view::npos)
                return out;
            start = pos + 1;
        }
    };
    auto number = [](const std::string& item) {
        try {
            return io::parse_double(item);
        } catch (const io_error&) {
            throw std::invalid_argument("lambda grid: '" + item + "' is not a number");
        }
    };
    std::vector<double> grid;
    if (spec.starts_with("log:")) {
        const auto parts = split(spec.substr(4), ':');
        if (parts.size() != 3)
            throw std::invalid_argument("lambda grid: expected log:LO:HI:N, got '" + std::string(spec) + "'");
        const double n = number(parts[2]);
        if (!(n >= 1) || n != std::floor(n))
            throw std::invalid_argument("lambda grid: point count must be a positive integer");
        grid = log_grid(number(parts[0]), number(parts[1]), std::size_t(n));
    } else {
        for (const auto& item : split(spec, ','))
            grid.push_back(number(item));
    }
    if (grid.empty())
        throw std::invalid_argument("lambda grid is empty");
    for (double v : grid)
        if (!(v >= 0) || !std::isfinite(v))
            throw std::invalid_argument("lambda grid values must be finite and nonnegative");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

enum class SearchMode {
    Full,   ///< every grid value
    Greedy, ///< from the largest value down, stop once PSNR has fallen `patience` times in a row
};

inline SearchMode search_mode_from_string(std::string_view s) {
    if (s == "full") return SearchMode::Full;
    if (s == "greedy") return SearchMode::Greedy;
    throw std::invalid_argument("unknown search mode '" + std::string(s) + "'");
}

/// The synthetic problem every cell is drawn from.
struct Scenario {
    GridShape dims{32, 32};
    std::size_t rows = 2048;
    std::uint64_t seed = 7;
    simulate::MatrixModel model = simulate::MatrixModel::FourierBlur;
    double noise_level = 0.05;
    double snr_min = 3.0;
    double f_lo_hz = 70e3;
    double f_hi_hz = 3e6;
};

struct BenchOptions {
    Scenario scenario;
    RunParams params;
    std::vector<double> lambda_grid = log_grid(1e-5, 1e-1, 13);
    SearchMode search = SearchMode::Greedy;
    std::size_t patience = 2;
    std::size_t repeats = 1;
    std::function<void(const std::string&)> log; ///< progress messages, may be empty
};

struct CellSpec {
    simulate::PhantomKind phantom = simulate::PhantomKind::Shape;
    double sigma = 10.0;
    Algo algo = Algo::SkaNng;
};

struct TracePoint {
    std::size_t epoch;
    double seconds;
    double psnr_db;
    double eps_r;
};

struct SearchPoint {
    double lambda;
    double psnr_db;
    double ssim;
    std::size_t epochs;
    double wall_time_s;
};

/// One CSV row: the best lambda of a cell and its quality measures.
struct CellResult {
    CellSpec spec;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double psnr_db = std::numeric_limits<double>::quiet_NaN();
    double ssim = std::numeric_limits<double>::quiet_NaN();
    std::size_t epochs = 0;
    double wall_time_s = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
    std::vector<TracePoint> trace; ///< of the best lambda
    std::vector<SearchPoint> search;

    bool ok() const { return status == "ok"; }
};

/// Phantom, preprocessed system and data for one (phantom, sigma) pair.
struct Instance {
    ImageGrid phantom;
    SystemMatrix A;
    Eigen::VectorXcd b;
    double sigma = 1.0;
};

/// Noise seeds differ per sigma so cells do not share a noise draw by accident.
inline std::uint64_t noise_seed(const Scenario& s, double sigma) {
    return s.seed * 1000003u + std::uint64_t(std::llround(sigma * 1000.0));
}

inline Instance make_instance(const Scenario& s, const SystemMatrix& raw, simulate::PhantomKind phantom, double sigma) {
    Instance inst;
    inst.phantom = simulate::make_phantom(phantom, s.dims);
    inst.sigma = sigma;
    const auto noise = simulate::make_noise_model(raw, sigma, s.noise_level, noise_seed(s, sigma));
    const auto b = simulate::forward_simulate(raw, inst.phantom, noise);
    auto pre = simulate::preprocess_matrix(raw, b, s.snr_min, s.f_lo_hz, s.f_hi_hz);
    inst.A = std::move(pre.A);
    inst.b = std::move(pre.b);
    inst.A.opnorm = solvers::power_iteration_opnorm(inst.A);
    return inst;
}

inline ImageGrid scaled(const ImageGrid& x, double sigma) { return ImageGrid(x.shape, sigma * x.values); }

/// Lambda search for one cell followed by `repeats` timed runs at the best
/// lambda; PSNR and SSIM are deterministic, wall time is averaged.
inline CellResult run_cell(const CellSpec& spec, const Instance& inst, const BenchOptions& opt) {
    CellResult res;
    res.spec = spec;
    if (spec.algo == Algo::FusedLasso) {
        res.status = "not_implemented";
        return res;
    }

    struct Run {
        SearchPoint point;
        std::vector<TracePoint> trace;
    };
    auto run_once = [&](double lambda) {
        Run out;
        std::vector<double> psnr_per_epoch;
        auto observer = [&](std::size_t, const Eigen::VectorXcd& x) {
            ImageGrid img(inst.phantom.shape, prox::project_nonneg(x));
            if (!opt.params.enforce_nonneg)
                img.values = x.real();
            psnr_per_epoch.push_back(metrics::psnr(img, inst.phantom, inst.sigma));
        };
        const auto rep = run_algo(spec.algo, inst.A, inst.b, lambda, opt.params, inst.A.opnorm, observer, false);
        out.point = {lambda, metrics::psnr(rep.x, inst.phantom, inst.sigma),
                     metrics::ssim(scaled(rep.x, inst.sigma), inst.phantom), rep.epochs_run, rep.wall_time_s};
        for (std::size_t k = 0; k < rep.epochs_run; ++k)
            out.trace.push_back({k + 1, rep.elapsed_history[k], psnr_per_epoch[k], rep.rel_change_history[k]});
        return out;
    };

    std::vector<double> order = opt.lambda_grid;
    if (opt.search == SearchMode::Greedy)
        std::reverse(order.begin(), order.end());

    std::optional<Run> best;
    std::size_t falls = 0;
    double last = -std::numeric_limits<double>::infinity();
    for (const double lambda : order) {
        Run r = run_once(lambda);
        res.search.push_back(r.point);
        if (opt.log)
            opt.log(std::string(to_string(spec.algo)) + " sigma=" + io::format_double(spec.sigma) +
                    " lambda=" + io::format_double(lambda) + " psnr=" + io::format_fixed(r.point.psnr_db, 3) +
                    " epochs=" + std::to_string(r.point.epochs));
        const double psnr = r.point.psnr_db;
        if (!best || psnr > best->point.psnr_db)
            best = std::move(r);
        if (opt.search == SearchMode::Greedy) {
            falls = psnr < last ? falls + 1 : 0;
            last = psnr;
            if (falls >= std::max<std::size_t>(opt.patience, 1))
                break;
        }
    }

    res.lambda = best->point.lambda;
    res.psnr_db = best->point.psnr_db;
    res.ssim = best->point.ssim;
    res.epochs = best->point.epochs;
    res.trace = std::move(best->trace);
    double total_time = best->point.wall_time_s;
    for (std::size_t k = 1; k < opt.repeats; ++k) {
        const auto again = run_algo(spec.algo, inst.A, inst.b, res.lambda, opt.params, inst.A.opnorm, {}, false);
        total_time += again.wall_time_s;
    }
    res.wall_time_s = total_time / double(std::max<std::size_t>(opt.repeats, 1));
    return res;
}

/// Runs every cell in order. Instances are built once per (phantom, sigma)
/// from one shared system matrix; failures are recorded in the status column.
inline std::vector<CellResult> run_bench(const std::vector<CellSpec>& cells, const BenchOptions& opt) {
    const auto raw = simulate::synth_system_matrix(opt.scenario.dims, opt.scenario.rows, opt.scenario.seed,
                                                   opt.scenario.model);
    std::map<std::pair<simulate::PhantomKind, double>, Instance> instances;
    std::vector<CellResult> out;
    out.reserve(cells.size());
    for (const auto& cell : cells) {
        try {
            const auto key = std::make_pair(cell.phantom, cell.sigma);
            auto it = instances.find(key);
            if (it == instances.end())
                it = instances.emplace(key, make_instance(opt.scenario, raw, cell.phantom, cell.sigma)).first;
            out.push_back(run_cell(cell, it->second, opt));
        } catch (const std::exception& e) {
            CellResult failed;
            failed.spec = cell;
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            failed.status = "error: " + msg;
            out.push_back(std::move(failed));
        }
    }
    return out;
}

inline constexpr std::string_view csv_header = "algo,phantom,sigma,lambda,psnr_db,ssim,epochs,wall_time_s,status";

inline std::string results_csv(const std::vector<CellResult>& rows) {
    std::ostringstream os;
    os << csv_header << '\n';
    for (const auto& r : rows) {
        const bool ok = r.ok();
        os << to_string(r.spec.algo) << ',' << simulate::to_string(r.spec.phantom) << ','
           << io::format_double(r.spec.sigma) << ',' << (ok ? io::format_double(r.lambda) : "") << ','
           << (ok ? io::format_fixed(r.psnr_db, 4) : "") << ',' << (ok ? io::format_fixed(r.ssim, 4) : "") << ','
           << (ok ? std::to_string(r.epochs) : "") << ',' << (ok ? io::format_fixed(r.wall_time_s, 3) : "") << ','
           << r.status << '\n';
    }
    return os.str();
}

inline std::string trace_csv(const CellResult& r) {
    std::ostringstream os;
    os << "epoch,seconds,psnr_db,eps_r\n";
    for (const auto& t : r.trace)
        os << t.epoch << ',' << io::format_fixed(t.seconds, 6) << ',' << io::format_fixed(t.psnr_db, 4) << ','
           << io::format_double(t.eps_r) << '\n';
    return os.str();
}

inline std::string search_csv(const std::vector<CellResult>& rows) {
    std::ostringstream os;
    os << "algo,phantom,sigma,lambda,psnr_db,ssim,epochs,wall_time_s\n";
    for (const auto& r : rows)
        for (const auto& s : r.search)
            os << to_string(r.spec.algo) << ',' << simulate::to_string(r.spec.phantom) << ','
               << io::format_double(r.spec.sigma) << ',' << io::format_double(s.lambda) << ','
               << io::format_fixed(s.psnr_db, 4) << ',' << io::format_fixed(s.ssim, 4) << ',' << s.epochs << ','
               << io::format_fixed(s.wall_time_s, 3) << '\n';
    return os.str();
}

inline std::string trace_file_name(const CellSpec& c) {
    return std::string(to_string(c.algo)) + "_" + std::string(simulate::to_string(c.phantom)) + "_sigma" +
           io::format_double(c.sigma) + ".csv";
}

inline const CellResult* find_cell(const std::vector<CellResult>& rows, simulate::PhantomKind phantom, double sigma,
                                   Algo algo) {
    for (const auto& r : rows)
        if (r.spec.phantom == phantom && r.spec.sigma == sigma && r.spec.algo == algo && r.ok())
            return &r;
    return nullptr;
}

/// Cells where ska-nng has a lower PSNR than regkz, as readable messages.
inline std::vector<std::string> order_violations(const std::vector<CellResult>& rows) {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (r.spec.algo != Algo::SkaNng || !r.ok())
            continue;
        const auto* base = find_cell(rows, r.spec.phantom, r.spec.sigma, Algo::Regkz);
        if (base && r.psnr_db < base->psnr_db)
            out.push_back(std::string(simulate::to_string(r.spec.phantom)) + " sigma=" + io::format_double(r.spec.sigma) +
                          ": ska-nng " + io::format_fixed(r.psnr_db, 4) + " dB < regkz " +
                          io::format_fixed(base->psnr_db, 4) + " dB");
    }
    return out;
}

} // namespace mpirecon::bench
