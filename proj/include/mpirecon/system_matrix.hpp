#pragma once

#include <complex>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "mpirecon/error.hpp"
#include "mpirecon/grid.hpp"

namespace mpirecon {

using cplx = std::complex<double>;
using RowMajorMatrixXcd = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Complex measurement operator A (m x n) with per-row metadata. Rows are
/// frequency components, columns are voxels of `grid`.
struct SystemMatrix {
    RowMajorMatrixXcd entries;
    Eigen::VectorXd row_norms;
    Eigen::VectorXd row_snr;     ///< empty when absent
    Eigen::VectorXd row_freq_hz; ///< empty when absent
    GridShape grid;
    std::optional<double> opnorm; ///< cached largest eigenvalue of A^*A

    SystemMatrix() = default;

    SystemMatrix(RowMajorMatrixXcd a, GridShape g) : entries(std::move(a)), grid(std::move(g)) {
        recompute_row_norms();
        validate();
    }

    Eigen::Index rows() const noexcept { return entries.rows(); }
    Eigen::Index cols() const noexcept { return entries.cols(); }
    bool has_snr() const noexcept { return row_snr.size() > 0; }
    bool has_freq() const noexcept { return row_freq_hz.size() > 0; }

    void recompute_row_norms() { row_norms = entries.rowwise().norm(); }

    bool is_row_normalized(double tol = 1e-12) const {
        if (row_norms.size() != rows())
            return false;
        return ((row_norms.array() - 1.0).abs() <= tol).all();
    }

    void validate() const {
        if (rows() < 1 || cols() < 1)
            throw shape_error("system matrix must have at least one row and one column");
        if (grid.size() != std::size_t(cols()))
            throw shape_error("system matrix has " + std::to_string(cols()) + " columns but grid " +
                              grid.to_string() + " has " + std::to_string(grid.size()) + " points");
        if (row_norms.size() != rows())
            throw shape_error("system matrix: row norm vector length mismatch");
        if (has_snr() && row_snr.size() != rows())
            throw shape_error("system matrix: row_snr length mismatch");
        if (has_freq() && row_freq_hz.size() != rows())
            throw shape_error("system matrix: row_freq_hz length mismatch");
    }
};

} // namespace mpirecon
