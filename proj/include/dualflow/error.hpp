#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dualflow {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied an argument outside the operation's domain
/// (non-positive density, bad rate, malformed network, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Vector or matrix sizes do not agree.
class DimensionError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// An iterative solver failed to reach its tolerance. Carries the best
/// iterate seen and its residual so callers can report them.
class SolverError : public Error {
public:
    SolverError(const std::string& what, Eigen::VectorXd best, double residual)
        : Error(what), best_(std::move(best)), residual_(residual) {}

    const Eigen::VectorXd& best_iterate() const { return best_; }
    double residual() const { return residual_; }

private:
    Eigen::VectorXd best_;
    double residual_;
};

}  // namespace dualflow
