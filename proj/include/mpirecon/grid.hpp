#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mpirecon/error.hpp"

namespace mpirecon {

/// Shape of a voxel grid. Values are stored row-major: the first axis is the
/// slowest varying one.
struct GridShape {
    std::vector<std::size_t> dims;

    GridShape() = default;
    GridShape(std::initializer_list<std::size_t> d) : dims(d) {}
    explicit GridShape(std::vector<std::size_t> d) : dims(std::move(d)) {}

    std::size_t rank() const noexcept { return dims.size(); }

    std::size_t size() const noexcept {
        if (dims.empty())
            return 0;
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
    }

    std::size_t operator[](std::size_t axis) const { return dims.at(axis); }

    /// Distance in the flat buffer between neighbours along `axis`.
    std::size_t stride(std::size_t axis) const {
        std::size_t s = 1;
        for (std::size_t a = axis + 1; a < dims.size(); ++a)
            s *= dims[a];
        return s;
    }

    std::string to_string() const {
        std::string out;
        for (std::size_t a = 0; a < dims.size(); ++a) {
            if (a)
                out += ',';
            out += std::to_string(dims[a]);
        }
        return out;
    }

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Real tracer concentration on a 1D/2D/3D grid.
struct ImageGrid {
    GridShape shape;
    Eigen::VectorXd values;

    ImageGrid() = default;
    explicit ImageGrid(GridShape s) : shape(std::move(s)), values(Eigen::VectorXd::Zero(Eigen::Index(shape.size()))) {}
    ImageGrid(GridShape s, Eigen::VectorXd v) : shape(std::move(s)), values(std::move(v)) {
        if (std::size_t(values.size()) != shape.size())
            throw shape_error("image values do not match grid " + shape.to_string());
    }

    std::size_t size() const noexcept { return shape.size(); }

    double& at(std::size_t i, std::size_t j) { return values[Eigen::Index(i * shape.dims[1] + j)]; }
    double at(std::size_t i, std::size_t j) const { return values[Eigen::Index(i * shape.dims[1] + j)]; }
};

inline void require_same_shape(const GridShape& a, const GridShape& b, const char* what) {
    if (!(a == b))
        throw shape_error(std::string(what) + ": grid " + a.to_string() + " vs " + b.to_string());
}

} // namespace mpirecon
