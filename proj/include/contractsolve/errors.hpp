#pragma once

#include <stdexcept>
#include <string>

namespace contractsolve {

// Base class for every failure this library reports on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : Error {
    using Error::Error;
};

struct RangeError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct SizeError : Error {
    using Error::Error;
};

struct GridMismatch : Error {
    using Error::Error;
};

struct QuadratureError : Error {
    using Error::Error;
};

// w' vanished at an evaluation point, so 1/w' has no finite value there.
struct SingularDerivative : Error {
    using Error::Error;
};

struct InversionError : Error {
    using Error::Error;
};

struct EvalError : Error {
    using Error::Error;
};

struct InfeasibleProblem : Error {
    using Error::Error;
};

struct NoConvergence : Error {
    NoConvergence(const std::string& what, int iterations_, double residual_)
        : Error(what), iterations(iterations_), residual(residual_) {}
    int iterations;
    double residual;
};

// The terminal slope condition delta'(1) = u'(beta) cannot coexist with the
// barrier delta <= lambda * phi_tilde when lambda is too small; the solve is
// well defined only above a problem-dependent multiplier floor.
struct MultiplierTooSmall : Error {
    MultiplierTooSmall(const std::string& what, double lambda_, double violation_)
        : Error(what), lambda(lambda_), violation(violation_) {}
    double lambda;
    double violation;
};

struct BracketError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace contractsolve
