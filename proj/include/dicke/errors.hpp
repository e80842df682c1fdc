#pragma once

#include <stdexcept>
#include <string>

namespace dicke {

/// Argument outside the documented domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Linear system too ill-conditioned for the requested arithmetic.
class IllConditionedError : public std::runtime_error {
public:
    IllConditionedError(const std::string& what, double condition_estimate)
        : std::runtime_error(what), condition_(condition_estimate) {}
    double condition_estimate() const { return condition_; }

private:
    double condition_;
};

/// Problem size exceeds what an exhaustive method can hold.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Trajectory step where every branch probability vanished.
class NumericalBreakdown : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Output file or directory could not be written; the message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid command line or configuration; the message names the offending key.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace dicke
