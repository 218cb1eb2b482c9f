#pragma once

#include <stdexcept>
#include <string>

namespace fblab {

/// Base class for all failures raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grid cannot be built (degenerate shape or resolution too coarse).
class GridError : public Error {
public:
    using Error::Error;
};

/// A problem violates its admissibility invariants at construction.
class InvalidProblem : public Error {
public:
    using Error::Error;
};

/// Invalid argument to a geometric or numerical routine.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative solver stopped at max_iters without meeting its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual, long iterations)
        : Error(what), last_residual_(last_residual), iterations_(iterations) {}

    double last_residual() const noexcept { return last_residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    long iterations_;
};

/// Experiment configuration is missing a field or holds an invalid value.
/// field_path uses dotted notation relative to the experiment object, e.g. "body.radius".
class ConfigError : public Error {
public:
    ConfigError(std::string field_path, const std::string& what)
        : Error(field_path + ": " + what), field_path_(std::move(field_path)) {}

    const std::string& field_path() const noexcept { return field_path_; }

private:
    std::string field_path_;
};

}  // namespace fblab
