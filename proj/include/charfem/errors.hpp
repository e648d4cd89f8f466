#pragma once

#include <stdexcept>
#include <string>

namespace charfem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A point or an image of an element left the computational domain.
class OutOfDomain : public Error {
public:
    using Error::Error;
};

class SingularGeometry : public Error {
public:
    using Error::Error;
};

class SingularMap : public Error {
public:
    using Error::Error;
};

/// Clipped areas failed to partition a source element.
class GeometryConsistency : public Error {
public:
    using Error::Error;
};

class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, double relative_residual)
        : Error(what), relative_residual_(relative_residual) {}

    double relative_residual() const noexcept { return relative_residual_; }

private:
    double relative_residual_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Raised when a quadrature rule cannot integrate the requested degree.
class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace charfem
