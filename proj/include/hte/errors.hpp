#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hte {

// Error taxonomy shared across the library. Everything derives from
// std::runtime_error so callers can catch coarsely or by exact type.

class SingularMatrixError : public std::runtime_error {
public:
    explicit SingularMatrixError(const std::string& msg) : std::runtime_error(msg) {}
};

class NoConvergenceError : public std::runtime_error {
public:
    NoConvergenceError(const std::string& msg, std::vector<double> last_iterate,
                       double residual_norm)
        : std::runtime_error(msg),
          last_iterate(std::move(last_iterate)),
          residual_norm(residual_norm) {}
    std::vector<double> last_iterate;
    double residual_norm;
};

class DegenerateRangeError : public std::runtime_error {
public:
    explicit DegenerateRangeError(const std::string& msg) : std::runtime_error(msg) {}
};

class DegenerateSampleError : public std::runtime_error {
public:
    explicit DegenerateSampleError(const std::string& msg) : std::runtime_error(msg) {}
};

class OverflowError : public std::runtime_error {
public:
    explicit OverflowError(const std::string& msg) : std::runtime_error(msg) {}
};

class DivergentIntegralError : public std::runtime_error {
public:
    explicit DivergentIntegralError(const std::string& msg) : std::runtime_error(msg) {}
};

class LowDensityError : public std::runtime_error {
public:
    explicit LowDensityError(const std::string& msg) : std::runtime_error(msg) {}
};

class OutOfSupportError : public std::runtime_error {
public:
    explicit OutOfSupportError(const std::string& msg) : std::runtime_error(msg) {}
};

class EmptyDesignError : public std::runtime_error {
public:
    explicit EmptyDesignError(const std::string& msg) : std::runtime_error(msg) {}
};

class RegularizationFailureError : public std::runtime_error {
public:
    explicit RegularizationFailureError(const std::string& msg) : std::runtime_error(msg) {}
};

class InsufficientDataError : public std::runtime_error {
public:
    explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

class InternalError : public std::runtime_error {
public:
    explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hte
