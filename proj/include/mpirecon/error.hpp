#pragma once

#include <stdexcept>
#include <string>

namespace mpirecon {

/// Base class of all errors raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A grid axis is too short for the requested transform depth, or a grid is
/// too small for a generator.
class dimension_error : public error {
public:
    using error::error;
};

/// Operands whose shapes or metadata do not agree.
class shape_error : public error {
public:
    using error::error;
};

/// Solver preconditions that depend on data (row normalization, missing
/// operator norm, empty systems).
class solver_error : public error {
public:
    using error::error;
};

/// Iterative estimate that failed to reach its tolerance. Carries the best
/// estimate seen.
class convergence_error : public error {
public:
    convergence_error(const std::string& what, double estimate)
        : error(what), estimate_(estimate) {}

    double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

/// Malformed container files and I/O failures.
class io_error : public error {
public:
    using error::error;
};

} // namespace mpirecon
