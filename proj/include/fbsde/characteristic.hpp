// SPDX-License-Identifier: MIT
#pragma once

#include "fbsde/model.hpp"

#include <vector>

namespace fbsde {

constexpr double kDefaultGuard = 1e-6;

struct GeneratorValue {
    double F = 0.0;       ///< drift of the characteristic equation y' = -F(y)
    double G = 0.0;       ///< coefficient multiplying z in the linearised driver
    double Lambda = 0.0;  ///< sigma3 / (1 - sigma3 y)
};

/// Throws SingularDenominator when |1 - s3 y| < guard.
GeneratorValue eval_generator(const SlopeCoefficients& c, double y, double guard = kDefaultGuard);

/// F only, same guard behaviour as eval_generator.
double generator_F(const SlopeCoefficients& c, double y, double guard = kDefaultGuard);

/// F(y) = a0 + a1 y + a2 y^2 + a3 y^3, valid when s3 == 0.
struct CubicForm {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    double operator()(double y) const noexcept { return a0 + y * (a1 + y * (a2 + y * a3)); }
};

/// Throws PreconditionError when s3 != 0.
CubicForm cubic_form(const SlopeCoefficients& c);

/// F(y) (1 - s3 y) written as a cubic; its zeros away from 1/s3 are the zeros of F.
CubicForm cleared_form(const SlopeCoefficients& c);

/// b2 - b3 s2 / s3, the leading coefficient of F when s3 != 0.
double alpha3(const SlopeCoefficients& c);

/// Pointwise upper and lower envelopes of F over a coefficient box.
class Envelope {
public:
    /// Throws GuardViolation when 1 - s3 y can fall below `guard` in magnitude
    /// for some s3 in the box and y in `y_range`.
    Envelope(const CoefficientBox& box, Interval y_range, double guard = kDefaultGuard);

    double upper(double y) const;
    double lower(double y) const;
    void bounds(double y, double& lo, double& hi) const;

    /// min over s3 in the box of |1 - s3 y|, zero when the sign can change.
    double guard_margin(double y) const noexcept;
    double guard() const noexcept { return guard_; }
    const Interval& s3() const noexcept { return s3_; }
    const Interval& y_range() const noexcept { return y_range_; }
    const std::vector<SlopeCoefficients>& vertices() const noexcept { return vertices_; }

private:
    std::vector<SlopeCoefficients> vertices_;
    Interval s3_;
    Interval y_range_;
    double guard_;
};

Envelope envelope_from_box(const CoefficientBox& box, Interval y_range, double guard = kDefaultGuard);

} // namespace fbsde
