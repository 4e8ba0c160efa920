#pragma once

// Serialized solver reports: a `report` container holding the per-epoch
// history (eps_r, residual, seconds) plus run metadata, and the matching
// convergence CSV.

#include <cstdio>
#include <fstream>
#include <string>

#include "mpirecon/io/container.hpp"
#include "mpirecon/solvers.hpp"

namespace mpirecon::io {

struct ReportMeta {
    std::string algo;
    double lambda = 0.0;
    bool zero_times = false; ///< write 0 for every timing field
};

inline std::string format_fixed(double v, int digits) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline ContainerFile report_to_container(const solvers::ReconReport& rep, const ReportMeta& meta) {
    ContainerFile f;
    f.kind = "report";
    f.dtype = "f64";
    f.dims = {rep.epochs_run, 3};
    for (std::size_t k = 0; k < rep.epochs_run; ++k) {
        append_f64_le(f.payload, rep.rel_change_history[k]);
        append_f64_le(f.payload, rep.residual_history[k]);
        append_f64_le(f.payload, meta.zero_times ? 0.0 : rep.elapsed_history[k]);
    }
    f.meta["algo"] = meta.algo;
    f.meta["lambda"] = format_double(meta.lambda);
    f.meta["epochs_run"] = std::to_string(rep.epochs_run);
    f.meta["stopped_by"] = std::string(solvers::to_string(rep.stopped_by));
    f.meta["wall_time_s"] = format_double(meta.zero_times ? 0.0 : rep.wall_time_s);
    f.meta["columns"] = "eps_r,residual,seconds";
    return f;
}

/// Reads back the histories of a report container.
inline solvers::ReconReport report_from_container(const ContainerFile& f) {
    expect_kind(f, "report");
    if (f.dims.size() != 2 || f.dims[1] != 3)
        throw io_error("report container must have dims epochs,3");
    const auto vals = unpack_real(f);
    solvers::ReconReport rep;
    rep.epochs_run = f.dims[0];
    for (std::size_t k = 0; k < rep.epochs_run; ++k) {
        rep.rel_change_history.push_back(vals[Eigen::Index(3 * k)]);
        rep.residual_history.push_back(vals[Eigen::Index(3 * k + 1)]);
        rep.elapsed_history.push_back(vals[Eigen::Index(3 * k + 2)]);
    }
    if (auto it = f.meta.find("wall_time_s"); it != f.meta.end())
        rep.wall_time_s = parse_double(it->second);
    if (auto it = f.meta.find("stopped_by"); it != f.meta.end())
        rep.stopped_by = it->second == "tolerance" ? solvers::StopReason::Tolerance : solvers::StopReason::MaxEpochs;
    return rep;
}

/// epoch,eps_r,residual,seconds with LF line endings.
inline std::string convergence_csv(const solvers::ReconReport& rep, bool zero_times = false) {
    std::string out = "epoch,eps_r,residual,seconds\n";
    for (std::size_t k = 0; k < rep.epochs_run; ++k) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu,%.9e,%.9e,%.6f\n", k + 1, rep.rel_change_history[k],
                      rep.residual_history[k], zero_times ? 0.0 : rep.elapsed_history[k]);
        out += buf;
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw io_error("cannot open '" + path + "' for writing");
    os << text;
    if (!os)
        throw io_error("failed writing '" + path + "'");
}

} // namespace mpirecon::io
