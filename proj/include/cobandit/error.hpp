#pragma once

#include <stdexcept>
#include <string>

namespace cobandit {

// Failure categories; the CLI maps these onto its exit codes.
enum class ErrorKind {
    Validation,     // a model, file or argument violates a stated constraint
    Numerical,      // a solve is singular/indeterminate or an iteration did not converge
    Verification,   // an oracle check disagreed with the implementation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error validation_error(const std::string& what) {
    return Error(ErrorKind::Validation, what);
}

inline Error numerical_error(const std::string& what) {
    return Error(ErrorKind::Numerical, what);
}

} // namespace cobandit
