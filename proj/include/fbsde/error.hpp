// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace fbsde {

/// Every failure raised by the library carries one of these kinds.
enum class ErrorKind {
    Parse,
    Schema,
    Validation,
    Box,
    Guard,
    SingularDenominator,
    Domain,
    Degenerate,
    Precondition,
    Contraction,
    FixedPoint,
    BandEscape,
    BandExit,
    Monotonicity,
    Inversion,
    Bound,
    NotSolvable,
    SingularHat,
    Quadrature,
    Usage,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    const char* kind_name() const noexcept { return to_string(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

} // namespace fbsde
