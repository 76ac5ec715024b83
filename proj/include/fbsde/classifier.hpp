// SPDX-License-Identifier: MIT
#pragma once

#include "fbsde/dominating.hpp"
#include "fbsde/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fbsde {

// ---------------------------------------------------------------------------
// Real roots of polynomials of degree at most three

struct RealRoot {
    double value = 0.0;
    int multiplicity = 1;
};

struct CubicRootReport {
    std::vector<RealRoot> roots;  ///< ascending, distinct
    bool identically_zero = false;
    int degree = 0;
};

/// Real roots of a0 + a1 y + a2 y^2 + a3 y^3 with multiplicities.
CubicRootReport real_cubic_roots(double a0, double a1, double a2, double a3);

// ---------------------------------------------------------------------------
// Classification

enum class Verdict { SolvableAllT, SolvableUpTo, NotSolvableAllT, SolvableGivenT, Inconclusive };
const char* to_string(Verdict v);

struct Bracket {
    double lower = 0.0;
    double upper = 0.0;
};

struct Classification {
    Verdict verdict = Verdict::Inconclusive;
    std::string fired_rule;
    /// Horizon of a SolvableGivenT verdict.
    std::optional<double> T;
    /// Length of the longest horizon on which the characteristic ODE survives.
    std::optional<double> T_star;
    /// Answer to "solvable for every horizon?" whenever a sharp rule decided it.
    std::optional<bool> all_T;
    /// (lower(0), upper(0)) of the dominating solutions.
    std::optional<Bracket> bracket;
    /// Largest moment exponent admitted by the stability estimate.
    std::optional<double> p_max;
    std::vector<std::string> attempted;
    std::vector<std::string> notes;
};

struct ClassifierOptions {
    /// The declared smallness tolerance used in place of "epsilon small enough".
    double eps = 1e-3;
    /// Relative width of the band around h and 1/s3 inside which a root is
    /// treated as a boundary case.
    double root_rel_tol = 1e-9;
    /// Horizon searched for the blow-up time when no horizon is given.
    double search_horizon = 1e4;
    IntegratorOptions ode{};
};

/// Sharp all-horizon criterion for constant coefficients with s3 = 0, plus
/// the fixed-horizon refinements when T is given.
Classification classify_constant_sigma3_zero(const SlopeCoefficients& c, double h,
                                             std::optional<double> T = std::nullopt,
                                             const ClassifierOptions& opts = {});

/// Sharp all-horizon criterion for constant coefficients with s3 != 0.
/// Throws DegenerateError when s3 h == 1.
Classification classify_constant_sigma3_nonzero(const SlopeCoefficients& c, double h,
                                                std::optional<double> T = std::nullopt,
                                                const ClassifierOptions& opts = {});

Classification classify_constant(const SlopeCoefficients& c, double h,
                                 std::optional<double> T = std::nullopt,
                                 const ClassifierOptions& opts = {});

/// Sufficient conditions for a box of coefficients on a given horizon.
/// Throws BoxError when the box constants are missing or inconsistent.
Classification classify_box(const CoefficientBox& box, double T, const ClassifierOptions& opts = {});

/// Monotonicity shortcut for constant coefficients. For s3 = 0 the quotient
/// b3 s2 / s3 is read as the limit from the side of s3 that the condition uses.
bool check_monotonicity(const SlopeCoefficients& c, double h);
/// Same condition required uniformly over a box.
bool check_monotonicity(const CoefficientBox& box);

/// Range of b2 - b3 s2 / s3 over a box. When the s3 interval touches zero,
/// `positive_side` picks the one-sided limit s3 -> 0+ (or 0- when false).
Interval alpha3_range(const CoefficientBox& box, bool positive_side);

// ---------------------------------------------------------------------------
// Moment exponent constants

double psi1(double p);
double psi2(double p);
inline double psi(double p) { return psi1(p) * psi2(p); }

/// Largest p with psi(p) c1 c3 <= 1. +infinity when c1 == 0; DomainError
/// when c1 c3 >= 1 or an argument is negative.
double p_max(double c1, double c3);

} // namespace fbsde
