#include "fbsde/error.hpp"
#include "fbsde/oracle.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fbsde;
using Catch::Matchers::WithinAbs;

namespace {

SolverOptions coarse() {
    SolverOptions o;
    o.dt = 0.02;
    o.dx = 0.1;
    o.band = 1.5;
    return o;
}

} // namespace

TEST_CASE("zero coefficients", "[oracle]") {
    LinearSolution s = linear_oracle({}, 1.0, 2.0);
    for (double y : s.yhat) CHECK(y == 1.0);
    PathRng rng(1, 0);
    LinearPath p = simulate_linear_path(s, 0.7, 10, rng);
    for (std::size_t n = 0; n < p.t.size(); ++n) {
        CHECK(p.X[n] == 0.7);
        CHECK(p.Y[n] == 0.7);
        CHECK(p.Z[n] == 0.0);
    }
}

TEST_CASE("linear characteristic equation", "[oracle]") {
    SlopeCoefficients c;
    c.f2 = 1.0;
    LinearSolution s = linear_oracle(c, 1.0, 1.0);
    CHECK_THAT(s.yhat0(), WithinAbs(std::exp(1.0), 1e-6));
    CHECK_THAT(s.yhat_at(0.5), WithinAbs(std::exp(0.5), 1e-6));
}

TEST_CASE("forward mean with constant drift slope", "[oracle]") {
    SlopeCoefficients c;
    c.b1 = 1.0;
    LinearSolution s = linear_oracle(c, 1.0, 1.0);
    for (double t : {0.0, 0.3, 1.0}) CHECK_THAT(s.meanX(2.0, t), WithinAbs(2.0 * std::exp(t), 1e-6));
}

TEST_CASE("Monte Carlo mean matches within three standard errors", "[oracle]") {
    SlopeCoefficients c;
    c.b1 = 1.0;
    c.s1 = 0.5;
    LinearSolution s = linear_oracle(c, 1.0, 1.0);
    MonteCarloMean mc = simulate_mean_XT(s, 1.0, 20, 100000, 42);
    INFO("mean " << mc.mean << " se " << mc.std_error);
    CHECK(mc.std_error > 0.0);
    CHECK(std::fabs(mc.mean - s.meanX(1.0, 1.0)) <= 3.0 * mc.std_error);
}

TEST_CASE("simulated paths satisfy the backward equation to first order", "[oracle]") {
    SlopeCoefficients c;
    c.b2 = -0.5;
    c.s1 = 0.3;
    c.f2 = 0.3;
    const double h = 0.4;
    LinearSolution s = linear_oracle(c, h, 1.0);
    auto residual = [&](int steps) {
        double acc = 0.0;
        const int paths = 400;
        for (int k = 0; k < paths; ++k) {
            PathRng rng(9, static_cast<std::uint64_t>(k));
            LinearPath p = simulate_linear_path(s, 1.0, steps, rng);
            double r = p.Y.back() - p.Y.front();
            const double dt = 1.0 / steps;
            for (int n = 0; n < steps; ++n) {
                double f = c.f1 * p.X[n] + c.f2 * p.Y[n] + c.f3 * p.Z[n];
                r += f * dt - p.Z[n] * p.dB[n];
            }
            acc += r * r;
        }
        return acc / paths;
    };
    double r1 = residual(50), r2 = residual(100);
    INFO("residuals " << r1 << " " << r2);
    CHECK(s.yhat.back() == h);
    CHECK(r1 < 1e-2);
    CHECK(r2 < 0.7 * r1);
}

TEST_CASE("oracle rejects horizons past blow-up", "[oracle]") {
    SlopeCoefficients c;
    c.b2 = 1.0;
    try {
        linear_oracle(c, 1.0, 2.0);
        FAIL("expected NotSolvable");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotSolvable);
    }
}

TEST_CASE("comparison of shifted terminal values", "[oracle]") {
    CoefficientModel m1 = make_model_from_expressions("0", "1", "0", "sin(x)", 1.0, 0.5);
    CoefficientModel m2 = make_model_from_expressions("0", "1", "0", "sin(x) + 1", 1.0, 0.5);
    ComparisonOptions o;
    o.solver = coarse();
    ComparisonReport r = comparison_check(m1, m2, o);
    CHECK(r.passed);
    CHECK_THAT(r.max_diff, WithinAbs(-1.0, 1e-10));
    CHECK_THAT(r.min_diff, WithinAbs(-1.0, 1e-10));

    ComparisonReport same = comparison_check(m1, m1, o);
    CHECK(same.passed);
    CHECK(same.max_diff == 0.0);
    CHECK(same.min_diff == 0.0);
}

TEST_CASE("comparison of shifted drivers", "[oracle]") {
    CoefficientModel m1 = make_model_from_expressions("0", "1", "0", "0.5*x", 1.0, 1.0);
    CoefficientModel m2 = make_model_from_expressions("0", "1", "0.5", "0.5*x", 1.0, 1.0);
    ComparisonOptions o;
    o.solver = coarse();
    ComparisonReport r = comparison_check(m1, m2, o);
    CHECK(r.passed);
    // Zero on the terminal row, -0.5 T at t = 0.
    CHECK_THAT(r.max_diff, WithinAbs(0.0, 1e-12));
    CHECK_THAT(r.min_diff, WithinAbs(-0.5, 1e-2));
}

TEST_CASE("comparison requires ordered data", "[oracle]") {
    CoefficientModel m1 = make_model_from_expressions("0", "1", "0", "x + 1", 1.0, 1.0);
    CoefficientModel m2 = make_model_from_expressions("0", "1", "0", "x", 1.0, 1.0);
    ComparisonOptions o;
    o.solver = coarse();
    CHECK_THROWS_AS(comparison_check(m1, m2, o), Error);
}

TEST_CASE("stability under perturbations", "[oracle]") {
    CoefficientModel m = make_model_from_expressions("0", "1", "0", "0.5*x", 1.0, 1.0);
    StabilityOptions o;
    o.solver = coarse();
    o.paths.paths = 500;

    StabilityReport zero = stability_check(m, m, o);
    CHECK(zero.diff_sq == 0.0);
    CHECK(zero.ratio == 0.0);

    CoefficientModel shifted = make_model_from_expressions("0", "1", "0", "0.5*x + 0.1", 1.0, 1.0);
    StabilityReport shift = stability_check(m, shifted, o);
    CHECK_THAT(shift.diff_sq, WithinAbs(0.01, 1e-9));
    CHECK_THAT(shift.ratio, WithinAbs(1.0, 1e-6));

    auto perturb = [](double d) {
        return make_model_from_expressions("0", "1", std::to_string(d), "0.5*x", 1.0, 1.0);
    };
    StabilitySweep sweep = stability_sweep(m, perturb, {1e-1, 1e-2}, 10.0, o);
    CHECK(sweep.passed);
    for (const StabilityReport& r : sweep.reports) CHECK(r.ratio <= 10.0);
}
