#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdvi {

/// Base class for failures of a numerical routine (as opposed to bad input,
/// which is reported through std::invalid_argument).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A matrix that must be positive definite is not. `minor()` is the 1-based
/// order of the first leading principal minor that is not positive.
class PdViolation : public NumericalError {
public:
    PdViolation(const std::string& what_matrix, int leading_minor)
        : NumericalError(what_matrix + " is not positive definite (leading minor " +
                         std::to_string(leading_minor) + " is not positive)"),
          minor_(leading_minor) {}

    int minor() const noexcept { return minor_; }

private:
    int minor_;
};

/// An integrand produced a non-finite value. `location()` is the quadrature
/// node or the Monte Carlo draw index that produced it.
class IntegrationError : public NumericalError {
public:
    IntegrationError(const std::string& msg, std::size_t location)
        : NumericalError(msg), location_(location) {}

    std::size_t location() const noexcept { return location_; }

private:
    std::size_t location_;
};

/// The fixed-point solver could not make progress (singular system or
/// unrecoverable loss of positive definiteness).
class SolverFailure : public NumericalError {
public:
    SolverFailure(const std::string& msg, int iteration)
        : NumericalError(msg + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

}  // namespace fdvi
