#include "fbsde/acceptance.hpp"

#include "fbsde/characteristic.hpp"
#include "fbsde/classifier.hpp"
#include "fbsde/dominating.hpp"
#include "fbsde/error.hpp"
#include "fbsde/oracle.hpp"
#include "fbsde/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

namespace fbsde {

namespace {

// Pinned tolerances.
constexpr double kPsiTol = 1e-12;
constexpr double kEventTol = 1e-3;
constexpr double kSharpMargin = 1e-3;
constexpr double kSharpAgreement = 0.99;
constexpr double kHeatTol = 1e-2;
constexpr double kHeatRatio = 1.8;
constexpr double kLinearTol = 1e-2;
constexpr double kBracketTol = 1e-2;
constexpr double kFpResidual = 1e-10;
constexpr int kFpIterations = 100;
constexpr double kTerminalResidual = 1e-3;
constexpr double kComparisonSlack = 1e-6;
constexpr double kShiftTol = 1e-2;
constexpr double kSlopeTol = 1e-9;
constexpr double kEnvelopeTol = 1e-9;

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            passed = false;
            detail << "FAILED " << what << "; ";
        }
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------

void psi_constants(Outcome& o) {
    double e1 = std::fabs(psi1(2.0) - 1.0), e2 = std::fabs(psi2(2.0) - 1.0);
    o.require(e1 <= kPsiTol && e2 <= kPsiTol, "psi_i(2) = 1");
    bool increasing = true;
    double prev = psi(2.0);
    for (int k = 1; k <= 80; ++k) {
        double v = psi(2.0 + 0.1 * k);
        increasing = increasing && v > prev;
        prev = v;
    }
    o.require(increasing, "psi strictly increasing on [2, 10]");
    o.detail << "|psi1(2)-1| = " << fmt(e1) << ", |psi2(2)-1| = " << fmt(e2) << ", psi(10) = " << fmt(prev);
}

DominatingSolution point_dominating(const SlopeCoefficients& c, double h, double T) {
    CoefficientBox box = CoefficientBox::point(c, h);
    Envelope env(box, Interval{-1e7, 1e7});
    return integrate_dominating(env, h, h, T);
}

void blowup_oracle(Outcome& o) {
    SlopeCoefficients q;
    q.b2 = 1.0;  // F(y) = y^2
    DominatingSolution d = point_dominating(q, 1.0, 2.0);
    auto ev = d.event();
    o.require(ev && ev->kind == EventKind::BlowUp, "quadratic blow-up detected");
    double err = ev ? std::fabs(ev->t_star - 1.0) : INFINITY;
    o.require(err <= kEventTol, "quadratic t_star within 1e-3 of 1");
    o.detail << "quadratic |t*-1| = " << fmt(err);

    const double T = 2.0;
    const double cases[3][3] = {{1, 1, 0}, {2, 1, -1}, {0.5, 2, 0}};
    for (const auto& cs : cases) {
        const double eps = cs[0], h = cs[1], y1 = cs[2];
        // eps (y - y1)^3 through sigma2 = 1 and the b, f slopes.
        SlopeCoefficients c;
        c.s2 = 1.0;
        c.b3 = eps;
        c.b2 = -3.0 * eps * y1;
        c.f2 = 3.0 * eps * y1 * y1;
        c.f1 = -eps * y1 * y1 * y1;
        DominatingSolution dc = point_dominating(c, h, T);
        auto e = dc.event();
        const double expected = T - 1.0 / (2.0 * eps * (h - y1) * (h - y1));
        double ce = e ? std::fabs(e->t_star - expected) : INFINITY;
        o.require(e && e->kind == EventKind::BlowUp && ce <= kEventTol,
                  "cubic (" + fmt(eps) + ", " + fmt(h) + ", " + fmt(y1) + ")");
        o.detail << ", cubic(" << eps << "," << h << "," << y1 << ") err " << fmt(ce);
    }
}

void singular_hit(Outcome& o) {
    // F(y) = 1 / (1 - y): the singular closed form with eps = 1, s3 = 1.
    SlopeCoefficients c;
    c.f1 = 1.0;
    c.s1 = 1.0;
    c.f3 = 1.0;
    c.s3 = 1.0;
    const double T = 1.0;
    CoefficientBox box = CoefficientBox::point(c, 0.0);
    Envelope env(box, Interval{-1e7, 1.0 - 1e-5});
    DominatingSolution d = integrate_dominating(env, 0.0, 0.0, T);
    auto ev = d.event();
    o.require(ev && ev->kind == EventKind::SingularHit, "singular hit detected");
    double err = ev ? std::fabs(ev->t_star - (T - 0.5)) : INFINITY;
    o.require(err <= kEventTol, "hit time within 1e-3 of T - 0.5");
    o.detail << "|t_hit - 0.5| = " << fmt(err);
}

void classifier_sharpness(Outcome& o) {
    std::mt19937_64 gen(20240);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int used = 0, agree = 0, filtered = 0;
    IntegratorOptions io;
    io.output_points = 2;
    for (int k = 0; k < 500; ++k) {
        SlopeCoefficients c;
        for (std::size_t i = 0; i < 9; ++i) c[i] = U(gen);
        c.s3 = 0.0;
        const double h = U(gen);
        CubicForm F = cubic_form(c);
        double margin = std::fabs(F(h));
        CubicRootReport roots = real_cubic_roots(F.a0, F.a1, F.a2, F.a3);
        for (const RealRoot& r : roots.roots) margin = std::min(margin, std::fabs(r.value - h));
        if (margin < kSharpMargin) {
            ++filtered;
            continue;
        }
        Classification cls = classify_constant_sigma3_zero(c, h);
        bool blown = false;
        for (double T : {1.0, 5.0, 20.0}) {
            Trajectory tr = integrate_backward([&](double, double y) { return F(y); }, h, T, io);
            blown = blown || tr.event.has_value();
        }
        ++used;
        bool all_T = cls.verdict == Verdict::SolvableAllT;
        if (cls.verdict != Verdict::Inconclusive && all_T == !blown) ++agree;
    }
    double rate = used ? static_cast<double>(agree) / used : 0.0;
    o.require(rate >= kSharpAgreement, "agreement >= 99%");
    o.detail << agree << "/" << used << " agree (" << fmt(100.0 * rate) << "%), " << filtered
             << " filtered by margin";
}

// Heat kernel benchmark, shared with the bracket criterion.
CoefficientModel heat_model() { return make_model_from_expressions("0", "1", "0", "sin(x)", 1.0, 1.0, 0.0); }

double heat_error(const DecouplingField& F) {
    const double T = F.t_grid.back();
    double err = 0.0;
    for (std::size_t i = 0; i < F.nt(); ++i)
        for (std::size_t j = F.core_lo; j <= F.core_hi; ++j)
            err = std::max(err, std::fabs(F.U(i, j) - std::sin(F.x_grid[j]) * std::exp(-(T - F.t_grid[i]) / 2.0)));
    return err;
}

void heat_kernel(Outcome& o) {
    CoefficientModel m = heat_model();
    SolverOptions a;
    a.dt = 0.01;
    a.dx = 0.05;
    a.band = 2.0;
    SolverOptions b = a;
    b.dt /= 2.0;
    b.dx /= 2.0;
    double e1 = heat_error(solve_field(m, a));
    double e2 = heat_error(solve_field(m, b));
    o.require(e1 <= kHeatTol, "sup error <= 1e-2");
    o.require(e1 >= kHeatRatio * e2, "halving improves error by >= 1.8");
    o.detail << "error " << fmt(e1) << " -> " << fmt(e2) << " (ratio " << fmt(e1 / e2) << ")";
}

SlopeCoefficients linear_benchmark() {
    SlopeCoefficients c;
    c.b2 = -0.5;
    c.f2 = 0.3;
    return c;
}

void linear_oracle_match(Outcome& o) {
    SlopeCoefficients c = linear_benchmark();
    LinearSolution L = linear_oracle(c, 0.4, 1.0);
    CoefficientModel m = make_linear_model(c, 0.4, 1.0);
    SolverOptions so;
    so.band = 2.0;
    DecouplingField F = solve_field(m, so);
    double err = 0.0;
    int nodes = 0;
    for (std::size_t j = F.core_lo; j <= F.core_hi; ++j) {
        double x = F.x_grid[j];
        if (std::fabs(x) < 0.1) continue;
        err = std::max(err, std::fabs(F.U(0, j) / x - L.yhat0()));
        ++nodes;
    }
    o.require(nodes > 0 && err <= kLinearTol, "|u(0,x)/x - yhat(0)| <= 1e-2");
    o.detail << "yhat(0) = " << fmt(L.yhat0()) << ", max error " << fmt(err) << " over " << nodes << " nodes";
}

void bracket_check(Outcome& o) {
    IntegratorOptions io;
    io.output_points = 401;
    auto run = [&](const CoefficientModel& m, const SolverOptions& so, const char* name) {
        CoefficientBox box = slope_box_from_model(m, 2000, 0.05);
        Envelope env(box, Interval{-100.0, 100.0});
        DominatingSolution d = integrate_dominating(env, box.h.hi, box.h.lo, m.horizon_T, io);
        o.require(d.complete(), std::string(name) + " dominating solutions exist on [0, T]");
        SolverOptions s = so;
        s.bracket_tol = kBracketTol;
        DecouplingField F = solve_field(m, s, &d);
        o.require(F.diag.bracket_checked > 0 && F.diag.bracket_violations == 0,
                  std::string(name) + " slopes inside bracket +- 1e-2");
        o.detail << name << ": " << F.diag.bracket_checked << " slopes, " << F.diag.bracket_violations
                 << " outside, max excess " << fmt(F.diag.bracket_excess_max) << "; ";
    };
    SolverOptions so;
    so.band = 2.0;
    run(heat_model(), so, "heat");
    run(make_linear_model(linear_benchmark(), 0.4, 1.0), so, "linear");
}

void z_coupled(Outcome& o) {
    CoefficientModel m = make_model_from_expressions("0", "1 + 0.3*z", "0", "0.4*sin(x)", 1.0, 1.0, 0.5);
    SolverOptions so;
    so.band = 2.0;
    so.c3 = 0.5;
    DecouplingField F = solve_field(m, so);
    o.require(F.diag.fp_residual_max <= kFpResidual, "solver fixed-point residual <= 1e-10");
    o.require(F.diag.fp_iterations_max <= kFpIterations, "solver fixed-point iterations <= 100");
    VerifyOptions vo;
    vo.paths = 10000;
    vo.dt = 1e-3;
    vo.seed = 8;
    PathStats ps = forward_verify(F, m, vo);
    o.require(ps.fp_residual_max <= kFpResidual, "path fixed-point residual <= 1e-10");
    o.require(ps.fp_iterations_max <= kFpIterations, "path fixed-point iterations <= 100");
    o.require(ps.terminal_residual <= kTerminalResidual, "terminal residual <= 1e-3");
    o.detail << "fp residual " << fmt(std::max(F.diag.fp_residual_max, ps.fp_residual_max)) << ", iterations "
             << std::max(F.diag.fp_iterations_max, ps.fp_iterations_max) << ", terminal residual "
             << fmt(ps.terminal_residual);
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << v << ")";
    return os.str();
}

void comparison(Outcome& o) {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.0, 1.0);
    ComparisonOptions co;
    co.solver.dt = 0.02;
    co.solver.dx = 0.1;
    co.solver.band = 1.5;
    co.slack = kComparisonSlack;
    int passed = 0;
    double worst = -INFINITY;
    const double T = 0.5;
    for (int k = 0; k < 20; ++k) {
        double a[8];
        for (double& v : a) v = U(gen);
        std::string b = num(0.5 * a[0]) + "*sin(x) + " + num(0.3 * a[1]) + "*cos(y)";
        std::string s = "1 + " + num(0.3 * a[2]) + "*sin(x) + " + num(0.1 * a[3]) + "*sin(z)";
        std::string f1 = num(0.5 * a[4]) + "*sin(y) + " + num(0.5 * a[5]) + "*cos(x) + " + num(0.2 * a[6]) + "*z";
        std::string g1 = num(0.4 * a[7]) + "*sin(x) + 0.2*x";
        std::string f2 = f1 + " + " + num(0.5 * P(gen)) + "*(1 + cos(x))";
        std::string g2 = g1 + " + " + num(0.5 * P(gen)) + "*(1 + sin(2*x))";
        CoefficientModel m1 = make_model_from_expressions(b, s, f1, g1, 2.0, T, 0.0);
        CoefficientModel m2 = make_model_from_expressions(b, s, f2, g2, 2.0, T, 0.0);
        ComparisonReport r = comparison_check(m1, m2, co);
        worst = std::max(worst, r.max_diff - r.scheme_error);
        passed += r.passed ? 1 : 0;
    }
    o.require(passed == 20, "20 randomized monotone pairs");
    o.detail << passed << "/20 pairs ordered (worst max(u1-u2) - scheme error " << fmt(worst) << ")";

    // Additive shifts.
    SolverOptions so;
    so.band = 1.5;
    so.dt = 0.02;
    so.dx = 0.1;
    auto shift = [&](const std::string& f1, const std::string& g1, const std::string& f2, const std::string& g2,
                     double expected) {
        CoefficientModel m1 = make_model_from_expressions("0", "1", f1, g1, 1.0, 1.0, 0.0);
        CoefficientModel m2 = make_model_from_expressions("0", "1", f2, g2, 1.0, 1.0, 0.0);
        DecouplingField u1 = solve_field(m1, so), u2 = solve_field(m2, so);
        double err = 0.0;
        for (std::size_t j = u1.core_lo; j <= u1.core_hi; ++j) err = std::max(err, std::fabs(u2.U(0, j) - u1.U(0, j) - expected));
        return err;
    };
    double e1 = shift("0", "sin(x)", "0", "sin(x) + 1", 1.0);
    double e2 = shift("0", "sin(x)", "0.5", "sin(x)", 0.5);
    o.require(e1 <= kShiftTol, "terminal shift reproduces 1");
    o.require(e2 <= kShiftTol, "driver shift reproduces 0.5 T");
    o.detail << "; shift errors " << fmt(e1) << ", " << fmt(e2);
}

void transforms(Outcome& o) {
    // Reverse twice on random linear models.
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        double c[9];
        for (double& v : c) v = U(gen);
        double s3 = (U(gen) < 0 ? -1.0 : 1.0) * (0.5 + std::fabs(U(gen)));
        double h = (U(gen) < 0 ? -1.0 : 1.0) * (0.5 + std::fabs(U(gen)));
        auto lin = [](double a, double b, double d) {
            return num(a) + "*x + " + num(b) + "*y + " + num(d) + "*z";
        };
        CoefficientModel m = make_model_from_expressions(lin(c[0], c[1], c[2]), "1 + " + lin(c[3], c[4], s3),
                                                         lin(c[6], c[7], c[8]), num(h) + "*x", 10.0, 1.0, 0.0);
        CoefficientModel r = reverse_roles(reverse_roles(m));
        const double t = 0.3, x = 0.2, y = -0.1, z = 0.4;
        for (const Coefficient* pair : {&m.b, &m.sigma, &m.f}) {
            const Coefficient& fm = *pair;
            const Coefficient& fr = pair == &m.b ? r.b : pair == &m.sigma ? r.sigma : r.f;
            double base_m = fm(t, x, y, z), base_r = fr(t, x, y, z);
            double dm[3] = {fm(t, x + 1, y, z) - base_m, fm(t, x, y + 1, z) - base_m, fm(t, x, y, z + 1) - base_m};
            double dr[3] = {fr(t, x + 1, y, z) - base_r, fr(t, x, y + 1, z) - base_r, fr(t, x, y, z + 1) - base_r};
            for (int i = 0; i < 3; ++i) worst = std::max(worst, std::fabs(dm[i] - dr[i]));
        }
        worst = std::max(worst, std::fabs((m.g(1.0) - m.g(0.0)) - (r.g(1.0) - r.g(0.0))));
    }
    o.require(worst <= kSlopeTol, "reverse twice reproduces slopes within 1e-9");
    o.detail << "reverse^2 slope error " << fmt(worst);

    // Bound identities on a linear model with s3 = c1 and h = c2.
    const double eps = 0.1, c1 = 1.0, c2 = 0.5;
    CoefficientModel lm = make_model_from_expressions("0", "1 + z", "0", "0.5*x", 5.0, 1.0, 0.0);
    PhiTransform P = phi_eps_transform(lm, eps, c1, c2);
    double s3t = P.model.sigma(0, 0.1, 0.05, 1.0) - P.model.sigma(0, 0.1, 0.05, 0.0);
    double ht = P.model.g(1.0) - P.model.g(0.0);
    double e_c1 = std::fabs(P.c1_bar - 1.2 / 1.1), e_c2 = std::fabs(P.c2_bar - 0.6 / 0.7);
    o.require(e_c1 <= 1e-12 && e_c2 <= 1e-12, "c1_bar, c2_bar formulas");
    o.require(P.c1_bar * P.c2_bar < 1.0, "c1_bar c2_bar < 1");
    o.require(std::fabs(s3t - P.c1_bar) <= kSlopeTol && std::fabs(ht - P.c2_bar) <= kSlopeTol,
              "transformed slopes equal the predicted bounds");
    o.detail << "; c1_bar c2_bar = " << fmt(P.c1_bar * P.c2_bar) << ", slope errors " << fmt(std::fabs(s3t - P.c1_bar))
             << ", " << fmt(std::fabs(ht - P.c2_bar));

    // Benchmark solved directly and through the transform.
    CoefficientModel m = make_model_from_expressions("0", "1", "0", "0.4*x + 0.1*sin(x)", 1.0, 1.0, 0.0);
    SolverOptions so;
    so.band = 2.0;
    DecouplingField direct = solve_field(m, so);
    double direct_err = 0.0;
    for (std::size_t i = 0; i < direct.nt(); ++i)
        for (std::size_t j = direct.core_lo; j <= direct.core_hi; ++j) {
            double t = direct.t_grid[i], x = direct.x_grid[j];
            double exact = 0.4 * x + 0.1 * std::sin(x) * std::exp(-(1.0 - t) / 2.0);
            direct_err = std::max(direct_err, std::fabs(direct.U(i, j) - exact));
        }
    PhiTransform Pm = phi_eps_transform(m, eps);
    SolverOptions st;
    st.dt = so.dt;
    st.dx = so.dx * (2.0 * eps + Pm.c2);
    st.band = so.band * (2.0 * eps + Pm.c2) + 0.2;
    DecouplingField tilde = solve_field(Pm.model, st);
    DecouplingField back = map_back_phi(tilde, eps, direct);
    double gap = 0.0;
    for (std::size_t i = 0; i < direct.nt(); ++i)
        for (std::size_t j = direct.core_lo; j <= direct.core_hi; ++j)
            gap = std::max(gap, std::fabs(back.U(i, j) - direct.U(i, j)));
    o.require(gap <= 2.0 * direct_err, "mapped-back solution within 2x direct error");
    o.detail << "; mapped-back gap " << fmt(gap) << " vs direct error " << fmt(direct_err);
}

void envelope_exactness(Outcome& o) {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> U(-1.0, 1.0), W(0.0, 0.5);
    CoefficientBox box;
    for (std::size_t i = 0; i < 9; ++i) {
        double c = U(gen), w = W(gen);
        box[i] = Interval{c - w, c + w};
    }
    box.at("s3") = Interval{-0.3, 0.4};
    box.h = Interval{-0.5, 0.5};
    const Interval yr{-2.0, 2.0};
    Envelope env(box, yr);
    std::uniform_real_distribution<double> Y(yr.lo, yr.hi), P(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        SlopeCoefficients c;
        for (std::size_t i = 0; i < 9; ++i) c[i] = box[i].lo + box[i].width() * P(gen);
        double y = Y(gen);
        double F = generator_F(c, y);
        worst = std::max(worst, F - env.upper(y));
        worst = std::max(worst, env.lower(y) - F);
    }
    o.require(worst <= kEnvelopeTol, "vertex envelopes dominate 1e4 samples");
    o.detail << "largest violation " << fmt(worst);
}

struct Entry {
    int id;
    const char* name;
    double budget;  ///< seconds
    void (*run)(Outcome&);
};

const Entry kEntries[] = {
    {1, "psi constants", 1.0, psi_constants},
    {2, "blow-up oracle agreement", 5.0, blowup_oracle},
    {3, "singular-hit agreement", 5.0, singular_hit},
    {4, "classifier sharpness", 120.0, classifier_sharpness},
    {5, "solver vs heat kernel", 120.0, heat_kernel},
    {6, "solver vs linear oracle", 120.0, linear_oracle_match},
    {7, "Lipschitz bracket", 240.0, bracket_check},
    {8, "z-coupled fixed point", 180.0, z_coupled},
    {9, "comparison theorem", 300.0, comparison},
    {10, "transform round trips", 120.0, transforms},
    {11, "envelope exactness", 10.0, envelope_exactness},
};

} // namespace

std::vector<int> acceptance_ids() {
    std::vector<int> ids;
    for (const Entry& e : kEntries) ids.push_back(e.id);
    return ids;
}

CriterionResult run_criterion(int id) {
    const Entry* entry = nullptr;
    for (const Entry& e : kEntries)
        if (e.id == id) entry = &e;
    if (!entry) raise(ErrorKind::Usage, "unknown acceptance criterion " + std::to_string(id));
    CriterionResult r;
    r.id = id;
    r.name = entry->name;
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
        entry->run(o);
    } catch (const Error& e) {
        o.passed = false;
        o.detail << e.kind_name() << ": " << e.what();
    } catch (const std::exception& e) {
        o.passed = false;
        o.detail << "exception: " << e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.seconds > entry->budget) {
        o.passed = false;
        o.detail << "; FAILED runtime " << fmt(r.seconds) << " s exceeds " << entry->budget << " s";
    }
    r.passed = o.passed;
    r.detail = o.detail.str();
    return r;
}

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids) {
    std::vector<CriterionResult> out;
    for (int id : ids.empty() ? acceptance_ids() : ids) out.push_back(run_criterion(id));
    return out;
}

} // namespace fbsde
