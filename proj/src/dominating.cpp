#include "fbsde/dominating.hpp"

#include "fbsde/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fbsde {

const char* to_string(EventKind kind) {
    switch (kind) {
    case EventKind::None: return "none";
    case EventKind::BlowUp: return "BlowUp";
    case EventKind::SingularHit: return "SingularHit";
    case EventKind::BandExit: return "BandExit";
    }
    return "none";
}

const char* to_string(Side side) { return side == Side::Upper ? "upper" : "lower"; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class Stepper {
public:
    Stepper(const ScalarField& F, double T, const IntegratorOptions& o, const GuardMargin& guard,
            const std::optional<Interval>& band)
        : F_(F), T_(T), o_(o), guard_(guard), band_(band) {}

    EventKind check(double y) const {
        if (!std::isfinite(y) || std::fabs(y) >= o_.blowup_cap) return EventKind::BlowUp;
        if (guard_ && guard_(y) < o_.guard) return EventKind::SingularHit;
        if (band_ && !band_->contains(y)) return EventKind::BandExit;
        return EventKind::None;
    }

    // One trial step from (s, y) of size h. Returns the first failed check
    // among stages and result, or None with y5 and the error estimate.
    EventKind attempt(double s, double y, double h, double& y5, double& err) const {
        EventKind bad;
        auto rhs = [&](double ss, double yy, double& k) {
            bad = check(yy);
            if (bad != EventKind::None) return false;
            k = F_(T_ - ss, yy);
            if (!std::isfinite(k)) {
                bad = EventKind::BlowUp;
                return false;
            }
            return true;
        };
        double k1, k2, k3, k4, k5, k6, k7;
        if (!rhs(s, y, k1)) return bad;
        if (!rhs(s + c2 * h, y + h * a21 * k1, k2)) return bad;
        if (!rhs(s + c3 * h, y + h * (a31 * k1 + a32 * k2), k3)) return bad;
        if (!rhs(s + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4)) return bad;
        if (!rhs(s + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5)) return bad;
        if (!rhs(s + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6)) return bad;
        y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        if (!rhs(s + h, y5, k7)) return bad;
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        return EventKind::None;
    }

    double guard_at(double y) const { return guard_ ? guard_(y) : std::numeric_limits<double>::infinity(); }

private:
    const ScalarField& F_;
    double T_;
    const IntegratorOptions& o_;
    const GuardMargin& guard_;
    const std::optional<Interval>& band_;
};

} // namespace

Trajectory integrate_backward(const ScalarField& F, double h, double T, const IntegratorOptions& opts,
                              const GuardMargin& guard, std::optional<Interval> band, Side side) {
    if (!(T > 0.0)) raise(ErrorKind::Precondition, "integration horizon must be positive");
    const int N = std::max(opts.output_points, 2);
    Trajectory tr;
    tr.t.resize(N);
    tr.y.assign(N, kNaN);
    for (int i = 0; i < N; ++i) tr.t[i] = T * static_cast<double>(i) / (N - 1);
    tr.t[N - 1] = T;

    Stepper stepper(F, T, opts, guard, band);
    auto fire = [&](EventKind kind, double s_event, double y_last) {
        tr.event = Event{kind, T - s_event, side, y_last};
    };

    if (EventKind k = stepper.check(h); k != EventKind::None) {
        fire(k, 0.0, h);
        return tr;
    }
    tr.y[N - 1] = h;

    double s = 0.0, y = h;
    const double min_step = 1e-12 * T;
    double hs = opts.max_step > 0.0 ? std::min(opts.max_step, T / (N - 1)) : T / (N - 1);
    hs = std::min(hs, 1e-2 * T);
    long steps = 0;

    for (int k = 1; k < N; ++k) {
        const double s_target = T - tr.t[N - 1 - k];
        while (s < s_target) {
            if (++steps > opts.max_steps) {
                fire(EventKind::BlowUp, s, y);
                return tr;
            }
            double step = std::min(hs, s_target - s);
            if (opts.max_step > 0.0) step = std::min(step, opts.max_step);
            bool last = step >= s_target - s;

            double y5 = 0.0, err = 0.0;
            EventKind bad = stepper.attempt(s, y, step, y5, err);
            if (bad != EventKind::None) {
                ++tr.rejected_steps;
                if (step <= opts.event_tol) {
                    fire(bad, s + 0.5 * step, y);
                    return tr;
                }
                hs = 0.5 * step;
                continue;
            }
            double scale = opts.atol + opts.rtol * std::max(std::fabs(y), std::fabs(y5));
            double en = std::fabs(err) / scale;
            if (en <= 1.0) {
                s = last ? s_target : s + step;
                y = y5;
                ++tr.accepted_steps;
                double grow = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
                hs = step * std::clamp(grow, 0.2, 5.0);
            } else {
                ++tr.rejected_steps;
                hs = step * std::max(0.2, 0.9 * std::pow(en, -0.2));
                if (hs < min_step) {
                    // The solution is becoming too steep to follow. Near the
                    // singular set that is the approach to 1/s3, otherwise growth.
                    EventKind kind = stepper.guard_at(y) < std::sqrt(opts.guard) ? EventKind::SingularHit
                                                                                 : EventKind::BlowUp;
                    fire(kind, s, y);
                    return tr;
                }
            }
        }
        tr.y[N - 1 - k] = y;
    }
    return tr;
}

std::optional<Event> DominatingSolution::event() const {
    if (upper_event && lower_event)
        return upper_event->t_star >= lower_event->t_star ? upper_event : lower_event;
    return upper_event ? upper_event : lower_event;
}

namespace {
double interp(const std::vector<double>& t, const std::vector<double>& y, double at) {
    if (t.empty()) return kNaN;
    if (at <= t.front()) return y.front();
    if (at >= t.back()) return y.back();
    auto it = std::upper_bound(t.begin(), t.end(), at);
    std::size_t j = static_cast<std::size_t>(it - t.begin());
    double w = (at - t[j - 1]) / (t[j] - t[j - 1]);
    return (1.0 - w) * y[j - 1] + w * y[j];
}
} // namespace

double DominatingSolution::upper_at(double t) const { return interp(t_grid, y_upper, t); }
double DominatingSolution::lower_at(double t) const { return interp(t_grid, y_lower, t); }

DominatingSolution integrate_dominating(const Envelope& env, double h_upper, double h_lower, double T,
                                        const IntegratorOptions& opts, std::optional<Interval> band) {
    if (h_lower > h_upper) raise(ErrorKind::Precondition, "integrate_dominating needs h_lower <= h_upper");
    IntegratorOptions o = opts;
    o.guard = env.guard();
    GuardMargin margin = [&env](double y) { return env.guard_margin(y); };
    ScalarField up = [&env](double, double y) { return env.upper(y); };
    ScalarField lo = [&env](double, double y) { return env.lower(y); };
    Trajectory tu = integrate_backward(up, h_upper, T, o, margin, band, Side::Upper);
    Trajectory tl = integrate_backward(lo, h_lower, T, o, margin, band, Side::Lower);
    DominatingSolution sol;
    sol.t_grid = std::move(tu.t);
    sol.y_upper = std::move(tu.y);
    sol.y_lower = std::move(tl.y);
    sol.upper_event = tu.event;
    sol.lower_event = tl.event;
    return sol;
}

// ---------------------------------------------------------------------------
// Closed forms

std::optional<double> QuadraticClosedForm::t_star() const {
    if (a2 * h > 0.0) return T - 1.0 / (a2 * h);
    return std::nullopt;
}

QuadraticClosedForm closed_form_quadratic(double a2, double h, double T) { return {a2, h, T}; }

double SingularClosedForm::y(double t) const {
    double r = 1.0 / sigma3;
    double d0 = r - h;
    double sq = d0 * d0 - 2.0 * eps * (T - t);
    if (sq < 0.0) return kNaN;
    return r - std::copysign(std::sqrt(sq), d0);
}

std::optional<double> SingularClosedForm::t_hit() const {
    if (!(eps > 0.0)) return std::nullopt;
    double d0 = 1.0 / sigma3 - h;
    return T - d0 * d0 / (2.0 * eps);
}

SingularClosedForm closed_form_singular(double eps, double sigma3, double h, double T) {
    if (sigma3 == 0.0) raise(ErrorKind::Precondition, "closed_form_singular needs sigma3 != 0");
    return {eps, sigma3, h, T};
}

double CubicClosedForm::y(double t) const {
    double d = h - y1;
    if (d == 0.0) return y1;
    double q = 2.0 * eps * (t - T) + 1.0 / (d * d);
    if (q <= 0.0) return kNaN;
    return y1 + std::copysign(1.0 / std::sqrt(q), d);
}

std::optional<double> CubicClosedForm::t_star() const {
    double d = h - y1;
    if (!(eps > 0.0) || d == 0.0) return std::nullopt;
    return T - 1.0 / (2.0 * eps * d * d);
}

CubicClosedForm closed_form_cubic(double eps, double h, double y1, double T) { return {eps, h, y1, T}; }

// ---------------------------------------------------------------------------
// Bracket check

BracketReport check_bracket(const DominatingSolution& candidate, const BracketInput& in) {
    BracketReport r;
    std::ostringstream why;
    const double tol = in.tol;
    const int n = std::max(in.samples, 3);
    auto c1 = [&](double t) { return in.c1 ? in.c1(t) : 0.0; };
    auto c2 = [&](double t) { return in.c2 ? in.c2(t) : 0.0; };

    const double h1 = in.sub(in.T) + in.C1;
    const double h2 = in.sup(in.T) - in.C2;
    r.h_ordering = h1 <= in.h0 + tol && in.h0 <= h2 + tol;
    if (!r.h_ordering) why << "terminal values out of order; ";

    r.F_ordering = true;
    double L_hat = 0.0;
    constexpr int ny = 21;
    for (int i = 0; i < n; ++i) {
        double t = in.T * i / (n - 1);
        double lo = in.sub(t), hi = in.sup(t);
        if (lo > hi + tol) {
            r.F_ordering = false;
            why << "sub above sup at t=" << t << "; ";
            break;
        }
        double prev_y = lo, prev_F = in.F0(t, lo);
        for (int j = 0; j < ny; ++j) {
            double y = lo + (hi - lo) * j / (ny - 1);
            double f0 = in.F0(t, y);
            double f1 = in.F1(t, y), f2 = in.F2(t, y);
            double sc = tol * (1.0 + std::fabs(f0));
            if (f1 > f0 + sc || f0 > f2 + sc) r.F_ordering = false;
            if (j > 0 && y > prev_y) L_hat = std::max(L_hat, std::fabs(f0 - prev_F) / (y - prev_y));
            prev_y = y;
            prev_F = f0;
        }
    }
    if (!r.F_ordering) why << "generators out of order; ";
    r.sampled_lipschitz = L_hat;
    r.lipschitz = L_hat <= in.L * (1.0 + 1e-9) + tol;
    if (!r.lipschitz) why << "sampled Lipschitz constant " << L_hat << " exceeds L; ";

    using boost::math::quadrature::gauss_kronrod;
    auto remainder_ok = [&](double C, auto&& c) {
        bool nonpositive = true;
        for (int i = 0; i < n; ++i)
            if (c(in.T * i / (n - 1)) > tol) nonpositive = false;
        if (std::fabs(C) <= tol && nonpositive) return true;
        auto integrand = [&](double t) { return std::exp(in.L * (in.T - t)) * std::max(c(t), 0.0); };
        double I = gauss_kronrod<double, 31>::integrate(integrand, 0.0, in.T, 8, 1e-12);
        return C >= I - tol;
    };
    r.lower_remainder = remainder_ok(in.C1, c1);
    r.upper_remainder = remainder_ok(in.C2, c2);
    if (!r.lower_remainder) why << "lower remainder condition fails; ";
    if (!r.upper_remainder) why << "upper remainder condition fails; ";

    r.contained = !candidate.event() && !candidate.t_grid.empty();
    for (std::size_t i = 0; r.contained && i < candidate.t_grid.size(); ++i) {
        double t = candidate.t_grid[i];
        double lo = in.sub(t) - tol * (1.0 + std::fabs(in.sub(t)));
        double hi = in.sup(t) + tol * (1.0 + std::fabs(in.sup(t)));
        for (double y : {candidate.y_upper[i], candidate.y_lower[i]})
            if (!(y >= lo && y <= hi)) {
                r.contained = false;
                why << "candidate leaves the bracket at t=" << t << "; ";
                break;
            }
    }
    r.ok = r.h_ordering && r.F_ordering && r.lipschitz && r.lower_remainder && r.upper_remainder &&
           r.contained;
    r.detail = why.str();
    return r;
}

} // namespace fbsde
