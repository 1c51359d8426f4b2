#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pooltest {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad parameters supplied by the caller.
class DomainError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    FitError(const std::string& what, std::vector<double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}
    const std::vector<double>& residuals() const { return residuals_; }

private:
    std::vector<double> residuals_;
};

// Raised when an internal identity does not hold; indicates a bug rather than bad input.
class InternalConsistencyError : public Error {
public:
    using Error::Error;
};

}  // namespace pooltest
