#pragma once

#include <stdexcept>
#include <string>

namespace qfock {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible range (q outside (-1,1), bad letter, ...).
class RangeError : public Error {
public:
    using Error::Error;
};

/// A request would materialize a matrix larger than the configured caps.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, long long requested, long long limit)
        : Error(what + ": requested " + std::to_string(requested) + ", limit " +
                std::to_string(limit)),
          requested_(requested),
          limit_(limit) {}

    long long requested() const noexcept { return requested_; }
    long long limit() const noexcept { return limit_; }

private:
    long long requested_;
    long long limit_;
};

/// Operands built for different Fock contexts were combined.
class ContextMismatch : public Error {
public:
    using Error::Error;
};

/// A Gram block failed its positivity check.
class DegenerateMetricError : public Error {
public:
    DegenerateMetricError(int level, double min_eig)
        : Error("degenerate q-metric at level " + std::to_string(level) +
                " (min eigenvalue " + std::to_string(min_eig) + ")"),
          level_(level),
          min_eig_(min_eig) {}

    int level() const noexcept { return level_; }
    double min_eig() const noexcept { return min_eig_; }

private:
    int level_;
    double min_eig_;
};

/// An input violates a structural precondition (non-homogeneous vector, absorbing state, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A derivation variant cannot be formed at the requested parameters.
class UnavailableError : public Error {
public:
    using Error::Error;
};

}  // namespace qfock
