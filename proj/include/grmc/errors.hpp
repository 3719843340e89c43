#ifndef GRMC_ERRORS_HPP
#define GRMC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace grmc {

/// Bad input data or configuration (CLI exit code 2).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input is well-formed but too small for the requested operation (CLI exit code 3).
struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure inside a solver (CLI exit code 4).
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace grmc

#endif
