#include "fbsde/classifier.hpp"

#include "fbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace fbsde {

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::SolvableAllT: return "SolvableAllT";
    case Verdict::SolvableUpTo: return "SolvableUpTo";
    case Verdict::NotSolvableAllT: return "NotSolvableAllT";
    case Verdict::SolvableGivenT: return "SolvableGivenT";
    case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

bool near(double a, double b, double rel) { return std::fabs(a - b) <= rel * (1.0 + std::fabs(b)); }

// Runs the characteristic ODE of a constant model over `horizon`.
DominatingSolution run_point(const SlopeCoefficients& c, double h, double horizon,
                             const ClassifierOptions& opts) {
    Envelope env(CoefficientBox::point(c, h), Interval::point(h), opts.ode.guard);
    return integrate_dominating(env, h, h, horizon, opts.ode);
}

// Adds the fixed-horizon or blow-up diagnostics to a classification whose
// all-horizon answer is negative or unknown.
void fixed_horizon(const SlopeCoefficients& c, double h, std::optional<double> T,
                   const ClassifierOptions& opts, bool symbolic_ok, Classification& out) {
    const double horizon = T ? *T : opts.search_horizon;
    DominatingSolution sol = run_point(c, h, horizon, opts);
    if (auto ev = sol.event()) {
        out.T_star = horizon - ev->t_star;
        out.notes.push_back(std::string(to_string(ev->kind)) + " of the characteristic ODE after a horizon of " +
                            fmt(*out.T_star));
    }
    if (!T) return;
    out.attempted.push_back("fixed-T:symbolic");
    out.attempted.push_back("fixed-T:ode");
    if (symbolic_ok || sol.complete()) {
        out.verdict = Verdict::SolvableGivenT;
        out.T = *T;
        out.fired_rule = symbolic_ok ? "fixed-T:symbolic" : "fixed-T:ode";
        if (sol.complete()) out.bracket = Bracket{sol.lower0(), sol.upper0()};
        if (symbolic_ok && !sol.complete())
            out.notes.push_back("symbolic bound holds but the numerical ODE did not complete");
        return;
    }
    if (out.T_star) {
        out.verdict = Verdict::SolvableUpTo;
        out.fired_rule = "characteristic-ode";
    }
}

// Explicit form of the small-coefficient bound for F(h) > 0:
// F(y) <= 2 eps y^3 + C1 y + C0 on y >= 0 with eps <= 1.
bool symbolic_fixed_T(const CubicForm& F, double h, double T, double& eps_out) {
    double C1 = std::max(F.a1, 0.0);
    double C0 = std::max(F.a0, 0.0) + 1.0;
    double hp = std::max(h, 0.0);
    double C2 = C1 > 0.0 ? std::exp(C1 * T) * hp + (C0 + 1.0) / C1 * std::expm1(C1 * T)
                         : hp + (C0 + 1.0) * T;
    double eps = std::min(1.0, 1.0 / (2.0 * C2 * C2 * C2));
    eps_out = eps;
    return F.a3 <= eps && F.a2 <= eps;
}

Classification finish_all_T(const SlopeCoefficients& c, double h, std::optional<double> T,
                            const ClassifierOptions& opts, Classification out) {
    out.verdict = Verdict::SolvableAllT;
    out.all_T = true;
    if (T) {
        DominatingSolution sol = run_point(c, h, *T, opts);
        if (sol.complete()) out.bracket = Bracket{sol.lower0(), sol.upper0()};
        else out.notes.push_back("solution exceeds the numerical cap on the given horizon");
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------

Classification classify_constant_sigma3_zero(const SlopeCoefficients& c, double h, std::optional<double> T,
                                             const ClassifierOptions& opts) {
    if (c.s3 != 0.0) raise(ErrorKind::Precondition, "classify_constant_sigma3_zero needs s3 == 0");
    if (T && !(*T > 0.0)) raise(ErrorKind::Precondition, "horizon must be positive");
    Classification out;
    out.p_max = kInf;
    const CubicForm F = cubic_form(c);

    out.attempted.push_back("affine-generator");
    if (F.a3 == 0.0 && F.a2 == 0.0) {
        out.fired_rule = "affine-generator";
        return finish_all_T(c, h, T, opts, out);
    }

    const CubicRootReport rep = real_cubic_roots(F.a0, F.a1, F.a2, F.a3);
    const double Fh = F(h);
    const double tol = opts.root_rel_tol;
    bool near_h = false, above = false, below = false;
    for (const RealRoot& r : rep.roots) {
        if (near(r.value, h, tol)) near_h = true;
        else if (r.value > h) above = true;
        else below = true;
    }
    out.attempted.push_back("root-at-or-above-terminal");
    out.attempted.push_back("root-at-or-below-terminal");

    std::optional<bool> sharp;
    std::string rule;
    if (near_h) {
        // A root sits on h: F(h) has no reliable sign. The answer is positive
        // whichever side the root falls on only if roots exist on both sides.
        if (above && below) {
            sharp = true;
            rule = Fh >= 0.0 ? "root-at-or-above-terminal" : "root-at-or-below-terminal";
        }
    } else if (Fh > 0.0 && above) {
        sharp = true;
        rule = "root-at-or-above-terminal";
    } else if (Fh < 0.0 && below) {
        sharp = true;
        rule = "root-at-or-below-terminal";
    } else {
        sharp = false;
    }

    if (sharp && *sharp) {
        out.fired_rule = rule;
        return finish_all_T(c, h, T, opts, out);
    }

    bool symbolic = false;
    if (T) {
        double eps = 0.0;
        if (Fh > 0.0) symbolic = symbolic_fixed_T(F, h, *T, eps);
        else if (Fh < 0.0) symbolic = symbolic_fixed_T(CubicForm{-F.a0, F.a1, -F.a2, F.a3}, -h, *T, eps);
        if (Fh != 0.0) out.notes.push_back("symbolic smallness threshold " + fmt(eps));
    }

    if (!sharp) {
        out.verdict = Verdict::Inconclusive;
        out.fired_rule = "boundary:root-at-terminal";
        out.notes.push_back("a root of F lies within the tolerance band around h");
        fixed_horizon(c, h, T, opts, symbolic, out);
        return out;
    }
    out.verdict = Verdict::NotSolvableAllT;
    out.all_T = false;
    out.fired_rule = "no-admissible-root";
    fixed_horizon(c, h, T, opts, symbolic, out);
    return out;
}

Classification classify_constant_sigma3_nonzero(const SlopeCoefficients& c, double h, std::optional<double> T,
                                                const ClassifierOptions& opts) {
    if (c.s3 == 0.0) raise(ErrorKind::Precondition, "classify_constant_sigma3_nonzero needs s3 != 0");
    if (T && !(*T > 0.0)) raise(ErrorKind::Precondition, "horizon must be positive");
    if (std::fabs(c.s3 * h - 1.0) <= 1e-12)
        raise(ErrorKind::Degenerate, "s3 * h == 1: the terminal value sits on the singular set");

    Classification out;
    const double r = 1.0 / c.s3;
    const double a3 = alpha3(c);
    const double Fh = generator_F(c, h, 0.0);
    const bool below_pole = h < r;
    const double a3_scale = 1.0 + std::fabs(c.b2) + std::fabs(c.b3 * c.s2 / c.s3);
    const bool a3_zero = std::fabs(a3) <= 1e-12 * a3_scale;

    out.attempted.push_back(below_pole ? "below-pole:alpha3-zero" : "above-pole:alpha3-zero");
    if (a3_zero && ((below_pole && Fh <= 0.0) || (!below_pole && Fh >= 0.0))) {
        out.fired_rule = below_pole ? "below-pole:alpha3-zero" : "above-pole:alpha3-zero";
        return finish_all_T(c, h, T, opts, out);
    }

    const CubicForm P = cleared_form(c);
    const CubicRootReport rep = real_cubic_roots(P.a0, P.a1, P.a2, P.a3);
    const double tol = opts.root_rel_tol;

    // Zeros of F are the zeros of P away from the pole. A root of P exactly on
    // the pole is a removable factor, one merely close to it is ambiguous.
    std::vector<double> firm, loose;
    for (const RealRoot& rr : rep.roots) {
        if (near(rr.value, r, 1e-14)) {
            out.notes.push_back("removable factor of F at 1/s3 discarded");
            continue;
        }
        (near(rr.value, h, tol) || near(rr.value, r, tol) ? loose : firm).push_back(rr.value);
    }

    auto decide = [&](const std::vector<double>& zs, double Fsign, std::string& rule) {
        auto any = [&](auto pred) { return std::any_of(zs.begin(), zs.end(), pred); };
        if (below_pole) {
            if (Fsign <= 0.0 && any([&](double z) { return z <= h; })) {
                rule = "below-pole:root-below-terminal";
                return true;
            }
            if (Fsign >= 0.0 && any([&](double z) { return z >= h && z < r; })) {
                rule = "below-pole:root-before-pole";
                return true;
            }
        } else {
            if (Fsign >= 0.0 && any([&](double z) { return z >= h; })) {
                rule = "above-pole:root-above-terminal";
                return true;
            }
            if (Fsign <= 0.0 && any([&](double z) { return z <= h && z > r; })) {
                rule = "above-pole:root-after-pole";
                return true;
            }
        }
        return false;
    };
    if (below_pole) {
        out.attempted.push_back("below-pole:root-below-terminal");
        out.attempted.push_back("below-pole:root-before-pole");
    } else {
        out.attempted.push_back("above-pole:root-above-terminal");
        out.attempted.push_back("above-pole:root-after-pole");
    }

    std::string rule;
    bool firm_yes = decide(firm, Fh, rule);
    std::optional<bool> sharp = firm_yes;
    if (!loose.empty()) {
        // Boundary roots: the verdict stands only if it does not depend on
        // which side of h or 1/s3 they really fall, nor on the sign of F(h).
        std::vector<double> all = firm;
        all.insert(all.end(), loose.begin(), loose.end());
        std::string tmp;
        bool robust_yes = decide(firm, +1.0, tmp) && decide(firm, -1.0, tmp);
        bool any_yes = decide(all, +1.0, tmp) || decide(all, -1.0, tmp);
        if (robust_yes) sharp = true;
        else if (!any_yes) sharp = false;
        else sharp.reset();
        if (sharp && *sharp && !firm_yes) rule = "robust:roots-on-both-sides";
    }

    if (sharp && *sharp) {
        out.fired_rule = rule;
        return finish_all_T(c, h, T, opts, out);
    }
    if (!sharp) {
        out.verdict = Verdict::Inconclusive;
        out.fired_rule = "boundary:root-at-terminal-or-pole";
        out.notes.push_back("a root of F lies within the tolerance band around h or 1/s3");
        fixed_horizon(c, h, T, opts, false, out);
        return out;
    }
    out.verdict = Verdict::NotSolvableAllT;
    out.all_T = false;
    out.fired_rule = "no-admissible-root";
    fixed_horizon(c, h, T, opts, false, out);
    return out;
}

Classification classify_constant(const SlopeCoefficients& c, double h, std::optional<double> T,
                                 const ClassifierOptions& opts) {
    Classification out = c.s3 == 0.0 ? classify_constant_sigma3_zero(c, h, T, opts)
                                      : classify_constant_sigma3_nonzero(c, h, T, opts);
    if (check_monotonicity(c, h)) out.notes.push_back("monotonicity condition holds");
    return out;
}

// ---------------------------------------------------------------------------
// Boxes

namespace {

template <class Fn>
Interval vertex_range(const CoefficientBox& box, Fn&& fn) {
    std::vector<SlopeCoefficients> verts(1, box.lower());
    for (std::size_t i = 0; i < 9; ++i) {
        if (box.slopes[i].is_point()) continue;
        std::size_t n = verts.size();
        for (std::size_t k = 0; k < n; ++k) {
            SlopeCoefficients v = verts[k];
            v[i] = box.slopes[i].hi;
            verts.push_back(v);
        }
    }
    Interval out{kInf, -kInf};
    for (const auto& v : verts) {
        double x = fn(v);
        out.lo = std::min(out.lo, x);
        out.hi = std::max(out.hi, x);
    }
    return out;
}

// Range of -P / s over s in (0, S] (positive side) or [-S, 0) (negative side),
// with the convention that 0/0 = 0 and the limit s -> 0 otherwise.
Interval quotient_range(Interval P, double S, bool positive) {
    auto div = [](double num, double den) {
        if (den != 0.0) return num / den;
        if (num == 0.0) return 0.0;
        return num > 0.0 ? kInf : -kInf;
    };
    Interval t;
    if (positive) {
        t.lo = P.hi > 0.0 ? -kInf : div(-P.hi, S);
        t.hi = P.lo < 0.0 ? kInf : div(-P.lo, S);
    } else {
        t.lo = P.lo < 0.0 ? -kInf : div(P.lo, S);
        t.hi = P.hi > 0.0 ? kInf : div(P.hi, S);
    }
    return t;
}

} // namespace

Interval alpha3_range(const CoefficientBox& box, bool positive_side) {
    const Interval& s3 = box.slopes[5];
    const Interval& b2 = box.slopes[1];
    if (s3.lo > 0.0 || s3.hi < 0.0)
        return vertex_range(box, [](const SlopeCoefficients& v) { return v.b2 - v.b3 * v.s2 / v.s3; });
    Interval P = vertex_range(box, [](const SlopeCoefficients& v) { return v.b3 * v.s2; });
    Interval tau;
    if (s3.lo < 0.0 && s3.hi > 0.0) {
        tau = (P.lo == 0.0 && P.hi == 0.0) ? Interval{0.0, 0.0} : Interval{-kInf, kInf};
    } else if (s3.lo >= 0.0 && (s3.hi > 0.0 || positive_side)) {
        tau = quotient_range(P, s3.hi, true);
    } else {
        tau = quotient_range(P, -s3.lo, false);
    }
    return {b2.lo + tau.lo, b2.hi + tau.hi};
}

bool check_monotonicity(const CoefficientBox& box) {
    const Interval& s3 = box.slopes[5];
    const Interval& f1 = box.slopes[6];
    bool nonneg = s3.lo >= 0.0 && box.h.hi <= 0.0 && f1.hi <= 0.0 && alpha3_range(box, true).lo >= 0.0;
    if (nonneg) return true;
    return s3.hi <= 0.0 && box.h.lo >= 0.0 && f1.lo >= 0.0 && alpha3_range(box, false).hi <= 0.0;
}

bool check_monotonicity(const SlopeCoefficients& c, double h) {
    return check_monotonicity(CoefficientBox::point(c, h));
}

namespace {

struct BoxRule {
    std::string name;
    bool hypotheses = false;
    Interval band;
};

} // namespace

Classification classify_box(const CoefficientBox& box, double T, const ClassifierOptions& opts) {
    if (!(T > 0.0)) raise(ErrorKind::Precondition, "classify_box needs a positive horizon");
    if (!box.constants) raise(ErrorKind::Box, "box constants c1, c2, c3 are required");
    const auto [c1, c2, c3] = *box.constants;
    if (!(c1 >= 0.0)) raise(ErrorKind::Box, "box constants require c1 >= 0");
    if (!(c2 > 0.0 && c2 < c3)) raise(ErrorKind::Box, "box constants require 0 < c2 < c3");
    if (!(c1 * c3 < 1.0)) raise(ErrorKind::Box, "box constants require c1 * c3 < 1");
    for (std::size_t i = 0; i < 9; ++i)
        if (!(box.slopes[i].lo <= box.slopes[i].hi)) raise(ErrorKind::Box, "box interval with lo > hi");
    if (!(box.h.lo <= box.h.hi)) raise(ErrorKind::Box, "box interval h has lo > hi");

    const double eps = opts.eps;
    const double cap = opts.ode.blowup_cap;
    const Interval& s3 = box.slopes[5];
    const Interval& f1 = box.slopes[6];
    const Interval& h = box.h;

    Classification out;
    out.p_max = p_max(c1, c3);

    // Envelope values at a single point; empty when the guard fails there.
    auto Fbar = [&](double y) -> std::optional<double> {
        try {
            return Envelope(box, Interval::point(y), opts.ode.guard).upper(y);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    auto Flow = [&](double y) -> std::optional<double> {
        try {
            return Envelope(box, Interval::point(y), opts.ode.guard).lower(y);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    auto le = [](std::optional<double> v, double bound) { return v && *v <= bound; };
    auto ge = [](std::optional<double> v, double bound) { return v && *v >= bound; };

    std::vector<BoxRule> rules;
    rules.push_back({"case-I:small-band",
                     s3.lo >= -c1 && s3.hi <= c1 && h.lo >= -c2 && h.hi <= c2 && le(Fbar(c3), eps) &&
                         ge(Flow(-c3), -eps),
                     {-c3, c3}});
    if (c1 > 0.0) {
        const double ic1 = 1.0 / c1, ic2 = 1.0 / c2, ic3 = 1.0 / c3;
        bool hi_h = h.lo >= ic2, lo_h = h.hi <= -ic2;
        bool pos_s = s3.lo >= ic1, neg_s = s3.hi <= -ic1;
        bool up_ok = ge(Flow(ic3), -eps);
        bool dn_ok = le(Fbar(-ic3), eps);
        Interval a3 = (pos_s || neg_s) ? alpha3_range(box, true) : Interval{-kInf, kInf};
        rules.push_back({"case-II:s3-positive,h-positive", pos_s && hi_h && up_ok && a3.hi <= eps, {ic3, kInf}});
        rules.push_back({"case-II:s3-negative,h-positive", neg_s && hi_h && up_ok && a3.hi <= eps, {ic3, kInf}});
        rules.push_back({"case-II:s3-positive,h-negative", pos_s && lo_h && dn_ok && a3.lo >= -eps, {-kInf, -ic3}});
        rules.push_back({"case-II:s3-negative,h-negative", neg_s && lo_h && dn_ok && a3.lo >= -eps, {-kInf, -ic3}});
    }
    rules.push_back({"case-III:nonnegative",
                     s3.hi <= c1 && h.lo >= 0.0 && h.hi <= c2 && le(Fbar(c3), eps) && f1.lo >= 0.0,
                     {0.0, c3}});
    rules.push_back({"case-III:bounded-above",
                     s3.lo >= 0.0 && s3.hi <= c1 && h.hi <= c2 && le(Fbar(c3), eps) &&
                         alpha3_range(box, true).lo >= -eps,
                     {-kInf, c3}});
    rules.push_back({"case-III:nonpositive",
                     s3.lo >= -c1 && h.lo >= -c2 && h.hi <= 0.0 && ge(Flow(-c3), -eps) && f1.hi <= 0.0,
                     {-c3, 0.0}});
    rules.push_back({"case-III:bounded-below",
                     s3.lo >= -c1 && s3.hi <= 0.0 && h.lo >= -c2 && ge(Flow(-c3), -eps) &&
                         alpha3_range(box, false).hi <= eps,
                     {-c3, kInf}});

    if (s3.lo == 0.0 && s3.hi == 0.0) {
        Interval cubic = vertex_range(box, [](const SlopeCoefficients& v) { return v.s2 * v.b3; });
        Interval quad = vertex_range(box, [](const SlopeCoefficients& v) {
            return v.b2 + v.f3 * v.s2 + v.b3 * v.s1;
        });
        rules.push_back({"sigma3-zero:negative-cubic", cubic.hi <= -eps, {-kInf, kInf}});
        // Barriers: the nearest lambda on a grid beyond h where the envelope has the right sign.
        const double step = std::max(1.0, std::max(std::fabs(h.lo), std::fabs(h.hi))) / 20.0;
        std::optional<double> lam_lo, lam_hi;
        for (int k = 0; k <= 400 && !lam_lo; ++k)
            if (ge(Flow(h.lo - k * step), 0.0)) lam_lo = h.lo - k * step;
        for (int k = 0; k <= 400 && !lam_hi; ++k)
            if (le(Fbar(h.hi + k * step), 0.0)) lam_hi = h.hi + k * step;
        rules.push_back({"sigma3-zero:barrier-below",
                         lam_lo && cubic.hi <= eps && quad.hi <= eps,
                         {lam_lo.value_or(-kInf), kInf}});
        rules.push_back({"sigma3-zero:barrier-above",
                         lam_hi && cubic.hi <= eps && quad.lo >= -eps,
                         {-kInf, lam_hi.value_or(kInf)}});
    }

    for (const BoxRule& rule : rules) {
        out.attempted.push_back(rule.name);
        if (!rule.hypotheses) continue;
        Interval range{std::max(rule.band.lo, -cap), std::min(rule.band.hi, cap)};
        try {
            Envelope env(box, range, opts.ode.guard);
            DominatingSolution sol = integrate_dominating(env, h.hi, h.lo, T, opts.ode, rule.band);
            if (!sol.complete()) {
                auto ev = sol.event();
                out.notes.push_back(rule.name + ": dominating ODE stopped (" + to_string(ev->kind) + ")");
                continue;
            }
            out.verdict = Verdict::SolvableGivenT;
            out.fired_rule = rule.name;
            out.T = T;
            out.bracket = Bracket{sol.lower0(), sol.upper0()};
            break;
        } catch (const Error& e) {
            out.notes.push_back(rule.name + ": " + e.what());
        }
    }

    bool monotone = check_monotonicity(box);
    out.attempted.push_back("monotone");
    if (out.verdict == Verdict::SolvableGivenT) {
        if (monotone) {
            out.all_T = true;
            out.notes.push_back("monotonicity condition holds: solvable on every horizon");
        }
        return out;
    }
    if (monotone) {
        out.verdict = Verdict::SolvableAllT;
        out.fired_rule = "monotone";
        out.all_T = true;
        return out;
    }
    out.verdict = Verdict::Inconclusive;
    out.fired_rule.clear();
    return out;
}

} // namespace fbsde
