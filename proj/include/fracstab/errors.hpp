#pragma once

#include <stdexcept>
#include <string>

namespace fracstab {

// Parameter outside an operation's documented domain. The CLI maps this to
// its validation exit code.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A numerical routine could not deliver its contract: accuracy target
// unreachable, iteration did not converge, trajectory blew up, matrix not
// positive definite.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AccuracyError : public NumericError {
public:
    using NumericError::NumericError;
};

class ConvergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

class BlowUpError : public NumericError {
public:
    using NumericError::NumericError;
};

namespace detail {

[[noreturn]] inline void domain_fail(const std::string& op, const std::string& what) {
    throw DomainError(op + ": " + what);
}

inline void require(bool ok, const std::string& op, const std::string& what) {
    if (!ok) domain_fail(op, what);
}

}  // namespace detail
}  // namespace fracstab
