#include "fbsde/error.hpp"
#include "fbsde/solver.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace fbsde;
using Catch::Matchers::WithinAbs;

namespace {

CoefficientModel identity_model() { return make_model_from_expressions("0", "1", "0", "x", 1.0, 1.0); }

SolverOptions coarse() {
    SolverOptions o;
    o.dt = 0.02;
    o.dx = 0.1;
    o.band = 1.5;
    return o;
}

double slope_z(const CoefficientModel& m, double x, double y, double z) {
    const double d = 1e-5;
    return (m.sigma(0.0, x, y, z + d) - m.sigma(0.0, x, y, z - d)) / (2.0 * d);
}

} // namespace

TEST_CASE("driftless identity terminal gives u = x", "[solver]") {
    CoefficientModel m = identity_model();
    DecouplingField F = solve_field(m, coarse());
    REQUIRE(F.nt() == 51);
    double err = 0.0, zerr = 0.0;
    for (std::size_t i = 0; i < F.nt(); ++i)
        for (std::size_t j = F.core_lo; j <= F.core_hi; ++j) {
            err = std::max(err, std::fabs(F.U(i, j) - F.x_grid[j]));
            zerr = std::max(zerr, std::fabs(F.Ux(i, j) - 1.0));
        }
    CHECK(err <= 1e-10);
    CHECK(zerr <= 1e-8);
    SolveReport r = make_report(F, m);
    CHECK_THAT(r.z0, WithinAbs(1.0, 1e-8));
}

TEST_CASE("terminal row equals g", "[solver]") {
    CoefficientModel m = make_model_from_expressions("0", "1", "0", "sin(x)", 1.0, 0.5);
    DecouplingField F = solve_field(m, coarse());
    const std::size_t last = F.nt() - 1;
    for (std::size_t j = 0; j < F.nx(); ++j) CHECK(F.U(last, j) == std::sin(F.x_grid[j]));
}

TEST_CASE("heat kernel on a coarse grid", "[solver]") {
    CoefficientModel m = make_model_from_expressions("0", "1", "0", "sin(x)", 1.0, 0.5);
    DecouplingField F = solve_field(m, coarse());
    double err = 0.0;
    for (std::size_t i = 0; i < F.nt(); ++i)
        for (std::size_t j = F.core_lo; j <= F.core_hi; ++j) {
            double exact = std::sin(F.x_grid[j]) * std::exp(-0.5 * (0.5 - F.t_grid[i]));
            err = std::max(err, std::fabs(F.U(i, j) - exact));
        }
    CHECK(err <= 2e-2);
}

TEST_CASE("z-coupled model satisfies the fixed point", "[solver]") {
    CoefficientModel m = make_model_from_expressions("0", "1 + 0.3*z", "0", "0.4*sin(x)", 1.0, 0.5, 0.5);
    DecouplingField F = solve_field(m, coarse());
    CHECK(F.diag.fp_residual_max <= 1e-10);
    CHECK(F.diag.fp_iterations_max <= 100);
    CHECK(F.diag.contraction_max < 1.0);
}

TEST_CASE("fixed point z = sigma ux", "[solver]") {
    Coefficient sigma = [](double, double, double, double z) { return 1.0 + 0.3 * z; };
    FixedPointResult r = solve_z(sigma, 0.0, 0.0, 0.0, 0.4);
    REQUIRE(r.converged);
    CHECK_THAT(r.z, WithinAbs(0.4 / (1.0 - 0.12), 1e-12));
    CHECK(r.residual <= 1e-12);
}

TEST_CASE("field interpolation and csv", "[solver]") {
    DecouplingField F = solve_field(identity_model(), coarse());
    CHECK_THAT(F.value(0.33, 0.123), WithinAbs(0.123, 1e-10));
    CHECK_THAT(F.slope(0.33, 0.123), WithinAbs(1.0, 1e-8));
    CHECK(F.value(0.0, 1e6) == F.U(0, F.nx() - 1));
    std::ostringstream os;
    F.write_csv(os);
    std::string first = os.str().substr(0, os.str().find('\n'));
    CHECK(first == "t,x,u,ux");
}

TEST_CASE("monotone inversion", "[solver]") {
    auto phi = [](double z) { return z + 0.5 * std::sin(z); };
    double z = invert_monotone(phi, 2.0);
    CHECK_THAT(phi(z), WithinAbs(2.0, 1e-12));
    CHECK_THROWS_AS(invert_monotone([](double) { return 1.0; }, 2.0), Error);
}

TEST_CASE("reversing roles of linear coefficients", "[solver]") {
    CoefficientModel m = make_model_from_expressions("0", "2*z", "0", "4*x", 4.0, 1.0);
    CoefficientModel r = reverse_roles(m);
    CHECK_THAT(slope_z(r, 0.3, -0.2, 0.7), WithinAbs(0.5, 1e-8));
    const double d = 1e-5;
    CHECK_THAT((r.g(0.4 + d) - r.g(0.4 - d)) / (2.0 * d), WithinAbs(0.25, 1e-8));
}

TEST_CASE("reversal twice is the identity", "[solver][property]") {
    CoefficientModel m = make_model_from_expressions("0.2*x - 0.1*y", "1 + 0.5*z + 0.1*x", "0.3*y", "2*x + 0.5", 4.0, 1.0);
    CoefficientModel rr = reverse_roles(reverse_roles(m));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        double t = 0.5 * (U(rng) + 1.0), x = U(rng), y = U(rng), z = U(rng);
        CHECK_THAT(rr.b(t, x, y, z), WithinAbs(m.b(t, x, y, z), 1e-9));
        CHECK_THAT(rr.sigma(t, x, y, z), WithinAbs(m.sigma(t, x, y, z), 1e-9));
        CHECK_THAT(rr.f(t, x, y, z), WithinAbs(m.f(t, x, y, z), 1e-9));
        CHECK_THAT(rr.g(x), WithinAbs(m.g(x), 1e-9));
    }
}

TEST_CASE("reversal needs strict monotonicity", "[solver]") {
    CoefficientModel m = make_model_from_expressions("0", "z^3", "0", "x", 4.0, 1.0);
    try {
        reverse_roles(m);
        FAIL("expected MonotonicityError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Monotonicity);
    }
}

TEST_CASE("transformed slope bounds", "[solver]") {
    CHECK_THAT(phi_c1_bar(1.0, 0.1), WithinAbs(1.2 / 1.1, 1e-12));
    CHECK_THAT(phi_c2_bar(0.5, 0.1), WithinAbs(0.6 / 0.7, 1e-12));
    CHECK(phi_c1_bar(1.0, 0.1) * phi_c2_bar(0.5, 0.1) < 1.0);
    CHECK_THAT(phi_c1_bar(0.7, 1e-12), WithinAbs(1.0, 1e-9));
    CHECK_THAT(phi_c2_bar(0.7, 1e-12), WithinAbs(1.0, 1e-9));
    CoefficientModel m = make_model_from_expressions("0", "1 + 0.5*z", "0", "0.5*x", 1.0, 1.0);
    try {
        phi_eps_transform(m, 0.0, 1.0, 0.5);
        FAIL("expected BoundError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Bound);
    }
    PhiTransform p = phi_eps_transform(m, 0.1, 1.0, 0.5);
    CHECK(p.c1_bar * p.c2_bar < 1.0);
}

TEST_CASE("forward verification", "[solver]") {
    CoefficientModel m = identity_model();
    DecouplingField F = solve_field(m, coarse());
    VerifyOptions vo;
    vo.paths = 2000;
    vo.seed = 11;
    PathStats base = forward_verify(F, m, vo);
    CHECK(base.terminal_residual <= 1e-4);
    CHECK_THAT(base.mean_XT, WithinAbs(0.0, 4.0 * std::sqrt(1.0 / 2000.0)));

    PathStats again = forward_verify(F, m, vo);
    CHECK(again.terminal_residual == base.terminal_residual);
    CHECK(again.mean_XT == base.mean_XT);

    DecouplingField bad = F;
    for (double& v : bad.u) v += 0.1;
    PathStats corrupt = forward_verify(bad, m, vo);
    CHECK(corrupt.terminal_residual > 5.0 * base.terminal_residual);
    CHECK_THAT(corrupt.terminal_residual, WithinAbs(1e-2, 2e-3));
}

TEST_CASE("path streams depend only on seed and index", "[solver]") {
    PathRng a(3, 17), b(3, 17), c(3, 18);
    double va = a.normal(), vb = b.normal(), vc = c.normal();
    CHECK(va == vb);
    CHECK(va != vc);
}
