// SPDX-License-Identifier: MIT
#pragma once

#include "fbsde/expression.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace fbsde {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    static Interval point(double v) { return {v, v}; }
    bool is_point() const noexcept { return lo == hi; }
    double width() const noexcept { return hi - lo; }
    double mid() const noexcept { return 0.5 * (lo + hi); }
    double mag() const noexcept;
    bool contains(double v, double tol = 0.0) const noexcept { return v >= lo - tol && v <= hi + tol; }
    bool contains(const Interval& o, double tol = 0.0) const noexcept {
        return o.lo >= lo - tol && o.hi <= hi + tol;
    }
};

/// Slope coefficients of b, sigma and f with respect to (x, y, z).
struct SlopeCoefficients {
    double b1 = 0, b2 = 0, b3 = 0;
    double s1 = 0, s2 = 0, s3 = 0;
    double f1 = 0, f2 = 0, f3 = 0;

    static constexpr std::array<const char*, 9> names = {"b1", "b2", "b3", "s1", "s2",
                                                         "s3", "f1", "f2", "f3"};
    double& operator[](std::size_t i);
    double operator[](std::size_t i) const;
};

using Coefficient = std::function<double(double t, double x, double y, double z)>;
using Terminal = std::function<double(double x)>;

/// Region of (x, y, z) on which coefficients are sampled.
struct SampleDomain {
    Interval x{-5.0, 5.0};
    Interval y{-5.0, 5.0};
    Interval z{-5.0, 5.0};
};

struct CoefficientModel {
    Coefficient b;
    Coefficient sigma;
    Coefficient f;
    Terminal g;
    double lipschitz_K0 = 1.0;
    double horizon_T = 1.0;
    double x0 = 0.0;
    SampleDomain domain;
    /// Human readable identity used for hashing and reports.
    std::string label;
};

CoefficientModel make_model_from_expressions(const std::string& b, const std::string& sigma,
                                             const std::string& f, const std::string& g,
                                             double K0, double T, double x0 = 0.0);

/// Constant-coefficient linear model with slopes `c` and terminal g(x) = h x.
CoefficientModel make_linear_model(const SlopeCoefficients& c, double h, double T, double x0 = 0.0);

/// Constants (c1, c2, c3) used by the case analysis of the classifier.
struct CaseConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

struct CoefficientBox {
    std::array<Interval, 9> slopes{};  // ordered as SlopeCoefficients::names
    Interval h{};
    std::optional<CaseConstants> constants;

    static CoefficientBox point(const SlopeCoefficients& c, double h);

    Interval& operator[](std::size_t i) { return slopes[i]; }
    const Interval& operator[](std::size_t i) const { return slopes[i]; }
    Interval& at(const std::string& name);
    const Interval& at(const std::string& name) const;

    bool is_point() const noexcept;
    SlopeCoefficients lower() const;
    SlopeCoefficients upper() const;
    SlopeCoefficients mid() const;
};

struct SpecOptions {
    std::optional<double> T;
    std::optional<double> dt;
    std::optional<double> dx;
    std::optional<double> band;
    std::optional<double> eps;
    std::optional<double> margin;
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
    std::optional<int> samples;
};

struct ProblemSpec {
    std::optional<CoefficientModel> model;
    std::optional<CoefficientBox> box;
    SpecOptions options;
    /// Canonical serialisation of the input, stable across key order.
    std::string canonical;
};

/// Parses a JSON document. ParseError for malformed JSON or expressions,
/// SchemaError for missing or mistyped fields, ValidationError for
/// violated invariants.
ProblemSpec parse_spec(const std::string& json_text);
ProblemSpec load_spec(const std::string& path);

/// Sampled Lipschitz and box checks. Throws ValidationError.
void validate_model(const CoefficientModel& m, int samples = 2000, std::uint64_t seed = 7);
void validate_box(const CoefficientBox& box);
void validate_consistency(const CoefficientModel& m, const CoefficientBox& box, int samples = 2000);

/// Hull of sampled difference quotients, widened by `margin` times the
/// interval magnitude. The box constants are left empty.
CoefficientBox slope_box_from_model(const CoefficientModel& m, const SampleDomain& domain,
                                    int samples = 2000, double margin = 0.05,
                                    std::uint64_t seed = 11);
inline CoefficientBox slope_box_from_model(const CoefficientModel& m, int samples = 2000,
                                           double margin = 0.05) {
    return slope_box_from_model(m, m.domain, samples, margin);
}

/// Size of the data at the origin:
/// I0^2 = (int |b|+|f|)^2 + int sigma^2 + g(0)^2, all evaluated at (t, 0, 0, 0).
double compute_I0(const CoefficientModel& m);

} // namespace fbsde
