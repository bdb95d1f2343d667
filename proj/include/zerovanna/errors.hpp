#pragma once

#include <stdexcept>
#include <string>

namespace zerovanna {

/// Input outside the domain of an operation (non-finite values, bad shapes, H outside (0,1), ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inversion target has no solution inside the admissible range.
class NoSolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative solver ran out of iterations. Carries the best iterate and its residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double best_iterate, double residual)
        : std::runtime_error(what), best_iterate_(best_iterate), residual_(residual) {}

    double best_iterate() const noexcept { return best_iterate_; }
    double residual() const noexcept { return residual_; }

private:
    double best_iterate_;
    double residual_;
};

/// Numerical breakdown, e.g. a covariance matrix that stays indefinite after jitter.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace zerovanna
