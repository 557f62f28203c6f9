#pragma once

#include <stdexcept>
#include <string>

namespace pbec {

/// Bad or inconsistent configuration (unknown key, missing key, bad value).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Newton or integrator failure; carries a human-readable diagnostic.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

/// State left the physical box (n >= 0, f in [0,1]) beyond tolerance,
/// or representation/shape mismatch.
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Fit preconditions not met (too few points, empty window).
struct FitError : std::runtime_error {
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace pbec
