#include "fbsde/oracle.hpp"

#include "fbsde/characteristic.hpp"
#include "fbsde/classifier.hpp"
#include "fbsde/dominating.hpp"
#include "fbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace fbsde {

namespace {

double interp(const std::vector<double>& t, const std::vector<double>& v, double s) {
    if (s <= t.front()) return v.front();
    if (s >= t.back()) return v.back();
    const double dt = t[1] - t[0];
    std::size_t i = std::min(static_cast<std::size_t>((s - t.front()) / dt), t.size() - 2);
    double w = (s - t[i]) / (t[i + 1] - t[i]);
    return (1.0 - w) * v[i] + w * v[i + 1];
}

} // namespace

double LinearSolution::yhat_at(double s) const { return interp(t, yhat, s); }

double LinearSolution::H(double y) const {
    return c.b1 + c.b2 * y + c.b3 * y * (c.s1 + c.s2 * y) / (1.0 - c.s3 * y);
}

double LinearSolution::I(double y) const { return (c.s1 + c.s2 * y) / (1.0 - c.s3 * y); }

double LinearSolution::meanX(double x, double s) const { return x * std::exp(interp(t, cum_H, s)); }

LinearSolution linear_oracle(const SlopeCoefficients& c, double h, double T, int grid_points) {
    if (!(T > 0.0) || grid_points < 2) raise(ErrorKind::Precondition, "linear_oracle needs T > 0 and two grid points");
    Classification cls = classify_constant(c, h, T);
    if (cls.verdict == Verdict::SolvableUpTo || cls.verdict == Verdict::NotSolvableAllT) {
        std::ostringstream os;
        os << "classifier rejects horizon " << T << " (" << cls.fired_rule << ")";
        raise(ErrorKind::NotSolvable, os.str());
    }

    IntegratorOptions io;
    io.output_points = grid_points;
    const double s3 = c.s3;
    Trajectory tr = integrate_backward([&](double, double y) { return generator_F(c, y, 0.0); }, h, T, io,
                                       [s3](double y) { return std::fabs(1.0 - s3 * y); });
    if (tr.event) {
        std::ostringstream os;
        os << "characteristic solution stops at t = " << tr.event->t_star;
        raise(tr.event->kind == EventKind::SingularHit ? ErrorKind::SingularHat : ErrorKind::NotSolvable, os.str());
    }

    LinearSolution s;
    s.c = c;
    s.h = h;
    s.T = T;
    s.t = tr.t;
    s.yhat = tr.y;
    const std::size_t n = s.t.size();
    for (double y : s.yhat)
        if (std::fabs(1.0 - s3 * y) < kDefaultGuard) raise(ErrorKind::SingularHat, "1 - s3 yhat reaches the guard");
    s.cum_H.assign(n, 0.0);
    s.cum_Q.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double dt = s.t[i] - s.t[i - 1];
        double h0 = s.H(s.yhat[i - 1]), h1 = s.H(s.yhat[i]);
        double i0 = s.I(s.yhat[i - 1]), i1 = s.I(s.yhat[i]);
        s.cum_H[i] = s.cum_H[i - 1] + 0.5 * dt * (h0 + h1);
        s.cum_Q[i] = s.cum_Q[i - 1] + 0.5 * dt * (i0 * i0 + i1 * i1);
    }
    return s;
}

LinearPath simulate_linear_path(const LinearSolution& s, double x, int steps, PathRng& rng) {
    LinearPath p;
    const double dt = s.T / steps;
    p.t.resize(steps + 1);
    p.X.resize(steps + 1);
    p.Y.resize(steps + 1);
    p.Z.resize(steps + 1);
    p.dB.resize(steps);
    double X = x;
    for (int n = 0; n <= steps; ++n) {
        const double t = s.T * n / steps;
        const double y = s.yhat_at(t);
        p.t[n] = t;
        p.X[n] = X;
        p.Y[n] = y * X;
        p.Z[n] = y * s.I(y) * X;
        if (n == steps) break;
        const double t1 = s.T * (n + 1) / steps;
        const double dH = interp(s.t, s.cum_H, t1) - interp(s.t, s.cum_H, t);
        const double dQ = interp(s.t, s.cum_Q, t1) - interp(s.t, s.cum_Q, t);
        const double Imid = s.I(s.yhat_at(0.5 * (t + t1)));
        const double Ibar = (Imid < 0.0 ? -1.0 : 1.0) * std::sqrt(std::max(dQ, 0.0) / dt);
        const double dB = std::sqrt(dt) * rng.normal();
        p.dB[n] = dB;
        X *= std::exp(dH - 0.5 * dQ + Ibar * dB);
    }
    return p;
}

MonteCarloMean simulate_mean_XT(const LinearSolution& s, double x, int steps, int paths, std::uint64_t seed) {
    MonteCarloMean m;
    m.paths = paths;
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < paths; ++k) {
        PathRng rng(seed, static_cast<std::uint64_t>(k));
        LinearPath p = simulate_linear_path(s, x, steps, rng);
        double v = p.X.back();
        sum += v;
        sum2 += v * v;
    }
    m.mean = sum / paths;
    double var = paths > 1 ? (sum2 - paths * m.mean * m.mean) / (paths - 1) : 0.0;
    m.std_error = std::sqrt(std::max(var, 0.0) / paths);
    return m;
}

// ---------------------------------------------------------------------------

namespace {

double scheme_error(const CoefficientModel& m, const SolverOptions& fine_opts, const DecouplingField& fine) {
    SolverOptions coarse_opts = fine_opts;
    coarse_opts.dt *= 2.0;
    coarse_opts.dx *= 2.0;
    DecouplingField coarse = solve_field(m, coarse_opts);
    double err = 0.0;
    for (std::size_t i = 0; i < coarse.nt(); ++i)
        for (std::size_t j = coarse.core_lo; j <= coarse.core_hi; ++j)
            err = std::max(err, std::fabs(fine.value(coarse.t_grid[i], coarse.x_grid[j]) - coarse.U(i, j)));
    return err;
}

} // namespace

ComparisonReport comparison_check(const CoefficientModel& m1, const CoefficientModel& m2,
                                  const ComparisonOptions& o) {
    std::mt19937_64 gen(o.seed);
    const SampleDomain& d = m1.domain;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto draw = [&](const Interval& iv) { return iv.lo + iv.width() * U(gen); };
    for (int k = 0; k < o.samples; ++k) {
        double t = m1.horizon_T * U(gen), x = draw(d.x), y = draw(d.y), z = draw(d.z);
        std::ostringstream os;
        if (m1.b(t, x, y, z) != m2.b(t, x, y, z) || m1.sigma(t, x, y, z) != m2.sigma(t, x, y, z)) {
            os << "models differ in b or sigma at (" << t << ", " << x << ", " << y << ", " << z << ")";
            raise(ErrorKind::Precondition, os.str());
        }
        if (m1.f(t, x, y, z) > m2.f(t, x, y, z)) {
            os << "f1 > f2 at (" << t << ", " << x << ", " << y << ", " << z << ")";
            raise(ErrorKind::Precondition, os.str());
        }
        if (m1.g(x) > m2.g(x)) {
            os << "g1 > g2 at x = " << x;
            raise(ErrorKind::Precondition, os.str());
        }
    }

    DecouplingField u1 = solve_field(m1, o.solver);
    DecouplingField u2 = solve_field(m2, o.solver);
    ComparisonReport r;
    r.slack = o.slack;
    r.max_diff = -std::numeric_limits<double>::infinity();
    r.min_diff = std::numeric_limits<double>::infinity();
    const bool same_grid = u1.t_grid == u2.t_grid && u1.x_grid == u2.x_grid;
    for (std::size_t i = 0; i < u1.nt(); ++i)
        for (std::size_t j = u1.core_lo; j <= u1.core_hi; ++j) {
            double v2 = same_grid ? u2.U(i, j) : u2.value(u1.t_grid[i], u1.x_grid[j]);
            double dlt = u1.U(i, j) - v2;
            r.max_diff = std::max(r.max_diff, dlt);
            r.min_diff = std::min(r.min_diff, dlt);
        }
    r.scheme_error = std::max(scheme_error(m1, o.solver, u1), scheme_error(m2, o.solver, u2));
    r.passed = r.max_diff <= o.slack + r.scheme_error;
    return r;
}

StabilityReport stability_check(const CoefficientModel& m, const CoefficientModel& p, const StabilityOptions& o) {
    DecouplingField u = solve_field(m, o.solver);
    DecouplingField up = solve_field(p, o.solver);
    const double x0 = o.solver.x0.value_or(m.x0);
    StabilityReport r;
    double dlt = up.value(0.0, x0) - u.value(0.0, x0);
    r.diff_sq = dlt * dlt;

    const double T = m.horizon_T;
    const int steps = std::max(1, static_cast<int>(std::llround(T / o.paths.dt)));
    const double dt = T / steps, sq = std::sqrt(dt);
    const double x_lo = u.x_grid.front(), x_hi = u.x_grid.back();
    double acc = 0.0;
    for (int k = 0; k < o.paths.paths; ++k) {
        PathRng rng(o.paths.seed, static_cast<std::uint64_t>(k));
        double X = x0, drift = 0.0, vol = 0.0;
        for (int n = 0; n < steps; ++n) {
            const double t = n * dt;
            const double y = u.value(t, X);
            const double z = solve_z(m.sigma, t, X, y, u.slope(t, X)).z;
            drift += (std::fabs(p.b(t, X, y, z) - m.b(t, X, y, z)) + std::fabs(p.f(t, X, y, z) - m.f(t, X, y, z))) * dt;
            double ds = p.sigma(t, X, y, z) - m.sigma(t, X, y, z);
            vol += ds * ds * dt;
            const double dW = sq * rng.normal();
            X = std::clamp(X + m.b(t, X, y, z) * dt + m.sigma(t, X, y, z) * dW, x_lo, x_hi);
        }
        double dg = p.g(X) - m.g(X);
        acc += dg * dg + drift * drift + vol;
    }
    r.rhs = acc / o.paths.paths;
    if (r.rhs > 0.0)
        r.ratio = r.diff_sq / r.rhs;
    else
        r.ratio = r.diff_sq > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return r;
}

StabilitySweep stability_sweep(const CoefficientModel& m, const std::function<CoefficientModel(double)>& perturb,
                               const std::vector<double>& scales, double bound, const StabilityOptions& o) {
    StabilitySweep s;
    s.scales = scales;
    s.bound = bound;
    for (double d : scales) {
        s.reports.push_back(stability_check(m, perturb(d), o));
        s.max_ratio = std::max(s.max_ratio, s.reports.back().ratio);
    }
    s.passed = s.max_ratio <= bound;
    return s;
}

} // namespace fbsde
