#pragma once

#include <stdexcept>
#include <string>

namespace fpl {

// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
    argument,            // precondition violated by the caller
    resource,            // size / memory / term budget exceeded
    not_invertible,      // gcd(a, q) > 1 where an inverse was required
    unsupported,         // e.g. derivative order beyond what we implement
    accuracy,            // numerical method did not converge
    truncation,          // series tail not below tolerance
    not_found,           // stationary point absent from the window
    needs_subdivision,   // second-derivative ratio could not be tamed
    decomposition,       // multiple stationary points in one expansion
    invariant,           // a checked mathematical invariant failed
    io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// An error that still carries the best numerical answer that was available.
class NumericError : public Error {
public:
    NumericError(ErrorKind kind, const std::string& what, double best_re,
                 double best_im, double bound)
        : Error(kind, what), best_re_(best_re), best_im_(best_im), bound_(bound) {}

    double best_re() const noexcept { return best_re_; }
    double best_im() const noexcept { return best_im_; }
    // Error estimate (accuracy) or tail bound (truncation) at the point of failure.
    double bound() const noexcept { return bound_; }

private:
    double best_re_;
    double best_im_;
    double bound_;
};

[[noreturn]] void throw_argument(const std::string& what);
[[noreturn]] void throw_resource(const std::string& what);

inline void require(bool condition, const char* what) {
    if (!condition) throw_argument(what);
}

}  // namespace fpl
