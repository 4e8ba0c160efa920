// mpirecon: simulate, reconstruct, metrics and bench front end.
//
// Exit codes: 0 ok, 2 invalid flags or inputs, 3 I/O failure, 4 solver
// failure, 5 ordering assertion violated (bench --assert-order).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpirecon/bench.hpp"
#include "mpirecon/io/container.hpp"
#include "mpirecon/io/pgm.hpp"
#include "mpirecon/io/report.hpp"
#include "mpirecon/metrics.hpp"
#include "mpirecon/simulate.hpp"
#include "mpirecon/solvers.hpp"

namespace fs = std::filesystem;
using namespace mpirecon;

namespace {

enum Exit { ok = 0, bad_args = 2, io_failure = 3, solver_failure = 4, order_violation = 5 };

// Thrown for flag values CLI11 cannot check on its own.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void log(const std::string& msg) { std::cerr << "[mpirecon] " << msg << '\n'; }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    return out;
}

GridShape parse_grid(const std::string& s) {
    try {
        return GridShape{io::parse_dims(s)};
    } catch (const std::exception& e) {
        throw usage_error(std::string("--dims: ") + e.what());
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw io_error("cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void manifest(const std::string& path) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(io::fnv1a_file(path)));
    std::cout << path << " fnv1a64=" << hash << " bytes=" << fs::file_size(path) << '\n';
}

// --- simulate -------------------------------------------------------------------

struct SimulateArgs {
    std::string phantom = "shape";
    std::string phantom_file;
    std::string dims = "32,32";
    double sigma = 10.0;
    std::size_t rows = 2048;
    std::uint64_t seed = 7;
    std::string model = "fourier-blur";
    double noise_level = 0.05;
    std::string out = ".";
};

int cmd_simulate(const SimulateArgs& a) {
    if (!(a.sigma > 0))
        throw usage_error("--sigma must be positive, got " + io::format_double(a.sigma));
    if (a.rows < 1)
        throw usage_error("--rows must be at least 1");
    if (!(a.noise_level >= 0))
        throw usage_error("--noise-level must be nonnegative");
    const GridShape dims = parse_grid(a.dims);

    ImageGrid phantom;
    try {
        phantom = a.phantom_file.empty()
                      ? simulate::make_phantom(simulate::phantom_kind_from_string(a.phantom), dims)
                      : io::image_from_container(io::load_container(a.phantom_file));
    } catch (const dimension_error& e) {
        throw usage_error(std::string("--dims: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw usage_error(std::string("--phantom: ") + e.what());
    }
    if (!a.phantom_file.empty() && !(phantom.shape == dims))
        throw usage_error("--dims " + dims.to_string() + " does not match the phantom file grid " +
                          phantom.shape.to_string());

    const auto model = simulate::matrix_model_from_string(a.model);
    const auto A = simulate::synth_system_matrix(dims, a.rows, a.seed, model);
    const auto noise = simulate::make_noise_model(A, a.sigma, a.noise_level, a.seed);
    const auto b = simulate::forward_simulate(A, phantom, noise);

    ensure_dir(a.out);
    auto data = io::vector_to_container(b);
    data.meta["sigma"] = io::format_double(a.sigma);
    data.meta["seed"] = std::to_string(a.seed);
    data.meta["noise_level"] = io::format_double(a.noise_level);
    const std::string paths[] = {join(a.out, "phantom.mpir"), join(a.out, "matrix.mpir"), join(a.out, "data.mpir")};
    io::save_container(paths[0], io::image_to_container(phantom));
    io::save_container(paths[1], io::matrix_to_container(A));
    io::save_container(paths[2], data);
    for (const auto& p : paths)
        manifest(p);
    return ok;
}

// --- reconstruct ----------------------------------------------------------------

struct ReconstructArgs {
    std::string algo = "ska-nng";
    double lambda = 1e-3;
    double eps = 1e-5;
    std::size_t max_epochs = 3000;
    double snr_min = 3.0;
    double f_lo = 70e3;
    double f_hi = 3e6;
    std::string matrix, data, out = ".";
    double opnorm = 0.0;
    std::size_t levels = 2;
    std::string wavelet = "haar";
    bool no_timing = false;
};

int cmd_reconstruct(const ReconstructArgs& a) {
    bench::Algo algo;
    try {
        algo = bench::algo_from_string(a.algo);
    } catch (const std::invalid_argument& e) {
        throw usage_error(std::string("--algo: ") + e.what());
    }
    if (algo == bench::Algo::FusedLasso)
        throw usage_error("--algo fused-lasso is a benchmark placeholder only");
    if (!(a.lambda >= 0))
        throw usage_error("--lambda must be nonnegative");
    if (!(a.eps > 0))
        throw usage_error("--eps must be positive");
    if (a.max_epochs < 1)
        throw usage_error("--max-epochs must be at least 1");
    if (!(a.f_lo <= a.f_hi))
        throw usage_error("--f-lo must not exceed --f-hi");

    const auto raw = io::matrix_from_container(io::load_container(a.matrix));
    const auto b = io::vector_from_container(io::load_container(a.data));
    if (b.size() != raw.rows())
        throw usage_error("--data has " + std::to_string(b.size()) + " entries, matrix has " +
                          std::to_string(raw.rows()) + " rows");

    auto pre = simulate::preprocess_matrix(raw, b, a.snr_min, a.f_lo, a.f_hi);
    log("rows kept after preprocessing: " + std::to_string(pre.A.rows()) + " of " + std::to_string(raw.rows()));

    std::optional<double> opnorm;
    if (a.opnorm > 0) {
        opnorm = a.opnorm;
    } else if (bench::is_fista(algo)) {
        // A cached norm of the stored matrix is valid only if preprocessing changed nothing.
        const bool unchanged = pre.A.rows() == raw.rows() && raw.is_row_normalized(1e-12);
        if (unchanged && raw.opnorm) {
            opnorm = *raw.opnorm;
        } else {
            opnorm = solvers::power_iteration_opnorm(pre.A);
            log("operator norm (power iteration): " + io::format_double(*opnorm));
        }
    }

    bench::RunParams params;
    params.eps_r = a.eps;
    params.max_epochs = a.max_epochs;
    params.wavelet_levels = a.levels;
    params.wavelet = a.wavelet;
    const auto rep = bench::run_algo(algo, pre.A, pre.b, a.lambda, params, opnorm);

    ensure_dir(a.out);
    io::save_container(join(a.out, "recon.mpir"), io::image_to_container(rep.x));
    io::write_pgm16(join(a.out, "recon.pgm"), rep.x);
    io::write_text(join(a.out, "convergence.csv"), io::convergence_csv(rep, a.no_timing));
    io::save_container(join(a.out, "report.mpir"),
                       io::report_to_container(rep, {std::string(bench::to_string(algo)), a.lambda, a.no_timing}));
    std::cout << "algo=" << bench::to_string(algo) << " lambda=" << io::format_double(a.lambda)
              << " epochs=" << rep.epochs_run << " stopped_by=" << solvers::to_string(rep.stopped_by)
              << " wall_time_s=" << io::format_fixed(a.no_timing ? 0.0 : rep.wall_time_s, 3) << '\n';
    return ok;
}

// --- metrics --------------------------------------------------------------------

struct MetricsArgs {
    std::string ref, rec;
    double sigma = 1.0;
    bool header = false;
};

int cmd_metrics(const MetricsArgs& a) {
    if (!(a.sigma > 0))
        throw usage_error("--sigma must be positive");
    const auto ref = io::image_from_container(io::load_container(a.ref));
    const auto rec = io::image_from_container(io::load_container(a.rec));
    if (!(ref.shape == rec.shape))
        throw usage_error("--ref grid " + ref.shape.to_string() + " and --rec grid " + rec.shape.to_string() +
                          " differ");
    const double psnr = metrics::psnr(rec, ref, a.sigma);
    const double ssim = metrics::ssim(ImageGrid(rec.shape, a.sigma * rec.values), ref);
    if (a.header)
        std::cout << "psnr_db,ssim\n";
    std::cout << io::format_fixed(psnr, 4) << ',' << io::format_fixed(ssim, 4) << '\n';
    return ok;
}

// --- bench ----------------------------------------------------------------------

struct BenchArgs {
    std::string grid = "shape/10,50/ska-nng,ska-st,fista-nng,fista-st,regkz,fused-lasso";
    std::size_t repeats = 1;
    std::string lambda_grid = "log:1e-5:1e-1:13";
    std::string search = "greedy";
    std::size_t patience = 2;
    std::string out = "bench_out";
    bool assert_order = false;
    std::string dims = "32,32";
    std::size_t rows = 2048;
    std::uint64_t seed = 7;
    double noise_level = 0.05;
    double eps = 1e-5;
    std::size_t max_epochs = 3000;
    bool quiet = false;
};

std::vector<bench::CellSpec> parse_cells(const std::string& grid) {
    const auto axes = split(grid, '/');
    if (axes.size() != 3)
        throw usage_error("--grid must look like PHANTOMS/SIGMAS/ALGOS, got '" + grid + "'");
    std::vector<bench::CellSpec> cells;
    try {
        for (const auto& ph : split(axes[0], ','))
            for (const auto& sg : split(axes[1], ','))
                for (const auto& al : split(axes[2], ',')) {
                    bench::CellSpec c{simulate::phantom_kind_from_string(ph), io::parse_double(sg),
                                      bench::algo_from_string(al)};
                    if (!(c.sigma > 0))
                        throw std::invalid_argument("sigma must be positive");
                    cells.push_back(c);
                }
    } catch (const std::invalid_argument& e) {
        throw usage_error(std::string("--grid: ") + e.what());
    }
    if (cells.empty())
        throw usage_error("--grid selects no cells");
    return cells;
}

int cmd_bench(const BenchArgs& a) {
    const auto cells = parse_cells(a.grid);
    bench::BenchOptions opt;
    try {
        opt.lambda_grid = bench::parse_lambda_grid(a.lambda_grid);
        opt.search = bench::search_mode_from_string(a.search);
    } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
    }
    if (a.repeats < 1)
        throw usage_error("--repeats must be at least 1");
    opt.scenario.dims = parse_grid(a.dims);
    opt.scenario.rows = a.rows;
    opt.scenario.seed = a.seed;
    opt.scenario.noise_level = a.noise_level;
    opt.params.eps_r = a.eps;
    opt.params.max_epochs = a.max_epochs;
    opt.patience = a.patience;
    opt.repeats = a.repeats;
    if (!a.quiet)
        opt.log = log;

    const auto results = bench::run_bench(cells, opt);

    ensure_dir(a.out);
    ensure_dir(join(a.out, "traces"));
    io::write_text(join(a.out, "bench.csv"), bench::results_csv(results));
    io::write_text(join(a.out, "lambda_search.csv"), bench::search_csv(results));
    for (const auto& r : results)
        if (r.ok())
            io::write_text(join(join(a.out, "traces"), bench::trace_file_name(r.spec)), bench::trace_csv(r));
    std::cout << bench::results_csv(results);

    const bool any_ok = std::any_of(results.begin(), results.end(), [](const auto& r) { return r.ok(); });
    if (!any_ok) {
        log("no benchmark cell succeeded");
        return solver_failure;
    }
    if (a.assert_order) {
        const auto bad = bench::order_violations(results);
        for (const auto& msg : bad)
            log("ordering violated: " + msg);
        if (!bad.empty())
            return order_violation;
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse row-action image reconstruction for MPI-like systems"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Write a phantom, a synthetic system matrix and measurements");
    s->add_option("--phantom", sim.phantom, "shape | vascular | delta")
        ->check(CLI::IsMember({"shape", "vascular", "delta"}));
    s->add_option("--phantom-file", sim.phantom_file, "Image container to use instead of a built-in phantom");
    s->add_option("--dims", sim.dims, "Grid size, e.g. 32,32");
    s->add_option("--sigma", sim.sigma, "Phantom weight: b = A (x / sigma) + noise");
    s->add_option("--rows", sim.rows, "Rows of the system matrix");
    s->add_option("--seed", sim.seed, "Seed of the matrix and the noise");
    s->add_option("--model", sim.model, "fourier-blur | random-smooth")
        ->check(CLI::IsMember({"fourier-blur", "random-smooth"}));
    s->add_option("--noise-level", sim.noise_level, "Background noise standard deviation at 0 Hz");
    s->add_option("--out", sim.out, "Output directory");

    ReconstructArgs rec;
    auto* r = app.add_subcommand("reconstruct", "Preprocess and solve");
    r->add_option("--algo", rec.algo, "ska-nng | ska-st | fista-nng | fista-st | regkz");
    r->add_option("--lambda", rec.lambda, "Regularization weight (rho for regkz)");
    r->add_option("--eps", rec.eps, "Relative-change tolerance");
    r->add_option("--max-epochs", rec.max_epochs, "Epoch cap");
    r->add_option("--snr-min", rec.snr_min, "Keep rows with SNR above this");
    r->add_option("--f-lo", rec.f_lo, "Lower band edge in Hz");
    r->add_option("--f-hi", rec.f_hi, "Upper band edge in Hz");
    r->add_option("--matrix", rec.matrix, "System matrix container")->required();
    r->add_option("--data", rec.data, "Measurement container")->required();
    r->add_option("--out", rec.out, "Output directory");
    r->add_option("--opnorm", rec.opnorm, "Largest eigenvalue of A^*A of the preprocessed system");
    r->add_option("--levels", rec.levels, "Wavelet levels");
    r->add_option("--wavelet", rec.wavelet, "haar | db2")->check(CLI::IsMember({"haar", "db1", "db2"}));
    r->add_flag("--no-timing", rec.no_timing, "Write zeros for every timing field");

    MetricsArgs met;
    auto* m = app.add_subcommand("metrics", "PSNR and SSIM of a reconstruction");
    m->add_option("--ref", met.ref, "Reference image container")->required();
    m->add_option("--rec", met.rec, "Reconstructed image container")->required();
    m->add_option("--sigma", met.sigma, "Phantom weight used in the simulation");
    m->add_flag("--header", met.header, "Print a CSV header line");

    BenchArgs ben;
    auto* bn = app.add_subcommand("bench", "Benchmark table with per-cell lambda search");
    bn->add_option("--grid", ben.grid, "PHANTOMS/SIGMAS/ALGOS, comma-separated lists");
    bn->add_option("--repeats", ben.repeats, "Timed runs per cell at the chosen lambda");
    bn->add_option("--lambda-grid", ben.lambda_grid, "log:LO:HI:N or a comma-separated list");
    bn->add_option("--search", ben.search, "greedy | full")->check(CLI::IsMember({"greedy", "full"}));
    bn->add_option("--patience", ben.patience, "Greedy search: consecutive PSNR drops before stopping");
    bn->add_option("--out", ben.out, "Output directory");
    bn->add_flag("--assert-order", ben.assert_order, "Exit 5 if ska-nng has lower PSNR than regkz in a cell");
    bn->add_option("--dims", ben.dims, "Grid size");
    bn->add_option("--rows", ben.rows, "Rows of the system matrix");
    bn->add_option("--seed", ben.seed, "Seed of the matrix and the noise");
    bn->add_option("--noise-level", ben.noise_level, "Background noise standard deviation at 0 Hz");
    bn->add_option("--eps", ben.eps, "Relative-change tolerance");
    bn->add_option("--max-epochs", ben.max_epochs, "Epoch cap");
    bn->add_flag("--quiet", ben.quiet, "No progress messages");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : bad_args;
    }

    try {
        if (*s)
            return cmd_simulate(sim);
        if (*r)
            return cmd_reconstruct(rec);
        if (*m)
            return cmd_metrics(met);
        return cmd_bench(ben);
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_args;
    } catch (const io_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return io_failure;
    } catch (const dimension_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_args;
    } catch (const shape_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_args;
    } catch (const solver_error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return solver_failure;
    } catch (const convergence_error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return solver_failure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_args;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return solver_failure;
    }
}
