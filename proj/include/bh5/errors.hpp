#pragma once

#include <stdexcept>
#include <string>

namespace bh5 {

// Requested tolerance could not be certified by rule refinement.
struct AccuracyError : std::runtime_error {
    explicit AccuracyError(const std::string& what) : std::runtime_error(what) {}
};

// Integrand does not decay fast enough for the 5-D radial integral.
struct DivergentIntegralError : std::invalid_argument {
    explicit DivergentIntegralError(const std::string& what) : std::invalid_argument(what) {}
};

// ODE state exceeded the overflow guard; carries the radius reached.
struct BlowUpError : std::runtime_error {
    BlowUpError(const std::string& what, double radius_reached_)
        : std::runtime_error(what), radius_reached(radius_reached_) {}
    double radius_reached;
};

struct NoConvergenceError : std::runtime_error {
    explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Newton iterate collapsed onto the zero solution.
struct TrivialSolutionError : std::runtime_error {
    explicit TrivialSolutionError(const std::string& what) : std::runtime_error(what) {}
};

struct PositivityError : std::runtime_error {
    explicit PositivityError(const std::string& what) : std::runtime_error(what) {}
};

struct SingularityError : std::domain_error {
    explicit SingularityError(const std::string& what) : std::domain_error(what) {}
};

struct DomainError : std::domain_error {
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace bh5
