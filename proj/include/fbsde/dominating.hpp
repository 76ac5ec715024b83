// SPDX-License-Identifier: MIT
#pragma once

#include "fbsde/characteristic.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace fbsde {

enum class EventKind { None, BlowUp, SingularHit, BandExit };
enum class Side { Upper, Lower };

const char* to_string(EventKind kind);
const char* to_string(Side side);

struct Event {
    EventKind kind = EventKind::None;
    double t_star = 0.0;  ///< time at which the branch stops existing
    Side side = Side::Upper;
    double y_last = 0.0;  ///< last accepted value before the event
};

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    /// Upper bound on the step in reversed time; zero means no bound.
    double max_step = 0.0;
    /// Width to which event times are bracketed.
    double event_tol = 1e-9;
    double blowup_cap = 1e6;
    double guard = kDefaultGuard;
    /// Number of output times, spread evenly over [0, T].
    int output_points = 201;
    long max_steps = 2'000'000;
};

/// Right-hand side F(t, y) of y' = -F(t, y).
using ScalarField = std::function<double(double t, double y)>;
/// Returns |1 - s3 y| (or any positive distance to a singular set).
using GuardMargin = std::function<double(double y)>;

struct Trajectory {
    std::vector<double> t;  ///< increasing times
    std::vector<double> y;  ///< NaN before an event
    std::optional<Event> event;
    long accepted_steps = 0;
    long rejected_steps = 0;
};

/// Integrates y' = -F(t, y), y(T) = h backward in time with an adaptive
/// Dormand-Prince 5(4) pair in the reversed variable s = T - t.
Trajectory integrate_backward(const ScalarField& F, double h, double T,
                              const IntegratorOptions& opts = {}, const GuardMargin& guard = {},
                              std::optional<Interval> band = std::nullopt, Side side = Side::Upper);

struct DominatingSolution {
    std::vector<double> t_grid;
    std::vector<double> y_upper;
    std::vector<double> y_lower;
    std::optional<Event> upper_event;
    std::optional<Event> lower_event;

    /// The event met first when moving backward from T, if any.
    std::optional<Event> event() const;
    bool complete() const { return !upper_event && !lower_event; }
    double upper_at(double t) const;
    double lower_at(double t) const;
    double upper0() const { return y_upper.front(); }
    double lower0() const { return y_lower.front(); }
};

DominatingSolution integrate_dominating(const Envelope& env, double h_upper, double h_lower, double T,
                                        const IntegratorOptions& opts = {},
                                        std::optional<Interval> band = std::nullopt);

/// y' = -a2 y^2, y(T) = h.
struct QuadraticClosedForm {
    double a2, h, T;
    double y(double t) const { return h / (1.0 - a2 * h * (T - t)); }
    /// T - 1/(a2 h) when a2 h > 0; may lie before 0.
    std::optional<double> t_star() const;
    double y0() const { return y(0.0); }
};
QuadraticClosedForm closed_form_quadratic(double a2, double h, double T);

/// y' = -eps / (1/s3 - y), y(T) = h.
struct SingularClosedForm {
    double eps, sigma3, h, T;
    double y(double t) const;
    /// Time at which y reaches 1/s3 (may lie before 0); empty when eps <= 0.
    std::optional<double> t_hit() const;
    double y0() const { return y(0.0); }
};
SingularClosedForm closed_form_singular(double eps, double sigma3, double h, double T);

/// y' = -eps (y - y1)^3, y(T) = h.
struct CubicClosedForm {
    double eps, h, y1, T;
    double y(double t) const;
    std::optional<double> t_star() const;
};
CubicClosedForm closed_form_cubic(double eps, double h, double y1, double T);

/// Inputs of the comparison lemma for scalar characteristic equations.
/// The candidate solves y' = -F0 with y(T) = h0; `sub` solves
/// y1 = h1 - C1 + int (F1 + c1) and `sup` solves y2 = h2 + C2 + int (F2 - c2).
struct BracketInput {
    ScalarField F0, F1, F2;
    double h0 = 0.0;
    std::function<double(double)> sub, sup;
    double L = 0.0;
    double C1 = 0.0, C2 = 0.0;
    std::function<double(double)> c1, c2;  ///< empty means identically zero
    double T = 1.0;
    int samples = 201;
    double tol = 1e-9;
};

struct BracketReport {
    bool h_ordering = false;
    bool F_ordering = false;
    bool lipschitz = false;
    bool lower_remainder = false;  ///< sufficient condition on (C1, c1)
    bool upper_remainder = false;  ///< sufficient condition on (C2, c2)
    bool contained = false;
    bool ok = false;
    double sampled_lipschitz = 0.0;
    std::string detail;
};

BracketReport check_bracket(const DominatingSolution& candidate, const BracketInput& in);

} // namespace fbsde
