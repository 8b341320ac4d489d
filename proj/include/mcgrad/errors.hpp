#pragma once

#include <stdexcept>
#include <string>

namespace mcgrad {

// Base for all errors thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A distribution (or flow) does not provide the requested capability,
// e.g. cdf() on a multivariate distribution.
struct UnsupportedError : Error {
    explicit UnsupportedError(const std::string& msg) : Error(msg) {}
};

// Evaluation at a point where the quantity is undefined: zero density,
// support edge, out-of-support index, singular Jacobian.
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Internal consistency check failed (e.g. quadrature finite-difference
// cross-check disagreement).
struct CrossCheckError : Error {
    explicit CrossCheckError(const std::string& msg) : Error(msg) {}
};

// Bad run configuration: unknown keys, incompatible estimator/distribution
// pairings, malformed config files.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace mcgrad
