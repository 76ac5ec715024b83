#include "fbsde/dominating.hpp"
#include "fbsde/error.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fbsde;
using Catch::Matchers::WithinAbs;

namespace {

CoefficientBox b2_box(double lo, double hi) {
    CoefficientBox box;
    box.slopes[1] = {lo, hi};
    return box;
}

DominatingSolution quadratic(double h, double T, const IntegratorOptions& opts = {}) {
    Envelope env(b2_box(1.0, 1.0), {-1e7, 1e7});
    return integrate_dominating(env, h, h, T, opts);
}

} // namespace

TEST_CASE("zero generator keeps the terminal value", "[dominating]") {
    Envelope env(CoefficientBox{}, {-10.0, 10.0});
    DominatingSolution d = integrate_dominating(env, 0.7, 0.7, 3.0);
    CHECK(d.complete());
    for (std::size_t i = 0; i < d.t_grid.size(); ++i) {
        CHECK(d.y_upper[i] == 0.7);
        CHECK(d.y_lower[i] == 0.7);
    }
}

TEST_CASE("quadratic generator on a short horizon", "[dominating]") {
    DominatingSolution d = quadratic(1.0, 0.5);
    CHECK(d.complete());
    CHECK_THAT(d.upper0(), WithinAbs(2.0, 1e-6));
    CHECK_THAT(d.lower0(), WithinAbs(2.0, 1e-6));
    CHECK(d.t_grid.front() == 0.0);
    CHECK(d.t_grid.back() == 0.5);
}

TEST_CASE("quadratic generator blows up", "[dominating]") {
    DominatingSolution d = quadratic(1.0, 2.0);
    auto ev = d.event();
    REQUIRE(ev);
    CHECK(ev->kind == EventKind::BlowUp);
    CHECK_THAT(ev->t_star, WithinAbs(1.0, 1e-3));
}

TEST_CASE("cubic lower bound blows up at the closed-form time", "[dominating]") {
    // F(y) = y^3 through s2 = b3 = 1.
    CoefficientBox box;
    box.slopes[2] = {1.0, 1.0};
    box.slopes[4] = {1.0, 1.0};
    Envelope env(box, {-1e7, 1e7});
    DominatingSolution d = integrate_dominating(env, 1.0, 1.0, 1.0);
    auto ev = d.event();
    REQUIRE(ev);
    CHECK(ev->kind == EventKind::BlowUp);
    auto cf = closed_form_cubic(1.0, 1.0, 0.0, 1.0).t_star();
    REQUIRE(cf);
    CHECK_THAT(*cf, WithinAbs(0.5, 1e-12));
    CHECK_THAT(ev->t_star, WithinAbs(0.5, 1e-3));
}

TEST_CASE("quadratic closed form", "[dominating]") {
    CHECK_THAT(closed_form_quadratic(1.0, 1.0, 0.5).y0(), WithinAbs(2.0, 1e-15));
    CHECK_THAT(closed_form_quadratic(-1.0, 1.0, 10.0).y0(), WithinAbs(1.0 / 11.0, 1e-15));
    for (double T : {0.5, 3.0, 100.0}) {
        auto q = closed_form_quadratic(1.0, -1.0, T);
        CHECK_FALSE(q.t_star());
        CHECK_THAT(q.y0(), WithinAbs(-1.0 / (1.0 + T), 1e-15));
    }
    auto blow = closed_form_quadratic(1.0, 1.0, 2.0).t_star();
    REQUIRE(blow);
    CHECK_THAT(*blow, WithinAbs(1.0, 1e-15));
}

TEST_CASE("singular closed form", "[dominating]") {
    auto hit = closed_form_singular(1.0, 1.0, 0.0, 1.0).t_hit();
    REQUIRE(hit);
    CHECK_THAT(*hit, WithinAbs(0.5, 1e-15));
    CHECK_THAT(closed_form_singular(1.0, 1.0, 0.0, 0.25).y0(), WithinAbs(1.0 - std::sqrt(0.5), 1e-14));
    CHECK_THAT(closed_form_singular(1.0, 1.0, 0.3, 1e-12).y0(), WithinAbs(0.3, 1e-9));
}

TEST_CASE("integrator meets the singular closed form", "[dominating]") {
    // F = 1 / (1 - y): f1 = s1 = f3 = s3 = 1 gives (1 + y * 0) / (1 - y) after clearing.
    SlopeCoefficients c;
    c.f1 = 1.0;
    c.s1 = 1.0;
    c.f3 = 1.0;
    c.s3 = 1.0;
    REQUIRE_THAT(generator_F(c, 0.3), WithinAbs(1.0 / 0.7, 1e-12));
    Envelope env(CoefficientBox::point(c, 0.0), {-10.0, 1.0 - 1e-5});
    DominatingSolution d = integrate_dominating(env, 0.0, 0.0, 1.0);
    auto ev = d.event();
    REQUIRE(ev);
    CHECK(ev->kind == EventKind::SingularHit);
    CHECK_THAT(ev->t_star, WithinAbs(0.5, 1e-3));

    DominatingSolution s = integrate_dominating(env, 0.0, 0.0, 0.25);
    CHECK(s.complete());
    CHECK_THAT(s.upper0(), WithinAbs(1.0 - std::sqrt(0.5), 1e-6));
}

TEST_CASE("step cap gives fifth-order convergence", "[dominating]") {
    const double exact = closed_form_quadratic(1.0, 1.0, 0.5).y0();
    auto err = [&](double h) {
        IntegratorOptions o;
        o.rtol = 1.0;
        o.atol = 1.0;
        o.max_step = h;
        o.output_points = 2;  // steps are otherwise capped by the output spacing
        return std::fabs(quadratic(1.0, 0.5, o).upper0() - exact);
    };
    double e1 = err(0.1), e2 = err(0.05);
    INFO("errors " << e1 << " " << e2);
    CHECK(e1 > 0.0);
    CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("lower solution stays below the upper one", "[dominating][property]") {
    CoefficientBox box;
    box.slopes[1] = {-0.5, 0.3};
    box.slopes[0] = {-0.2, 0.4};
    box.slopes[6] = {-0.1, 0.1};
    Envelope env(box, {-100.0, 100.0});
    DominatingSolution d = integrate_dominating(env, 0.6, 0.2, 2.0);
    REQUIRE(d.complete());
    for (std::size_t i = 0; i < d.t_grid.size(); ++i) CHECK(d.y_lower[i] <= d.y_upper[i]);
}

TEST_CASE("bracket checks", "[dominating]") {
    SECTION("constant solution") {
        Envelope env(CoefficientBox{}, {-10.0, 10.0});
        DominatingSolution d = integrate_dominating(env, 0.4, 0.4, 1.0);
        BracketInput in;
        in.F0 = in.F1 = in.F2 = [](double, double) { return 0.0; };
        in.h0 = 0.4;
        in.sub = [](double) { return -0.6; };
        in.sup = [](double) { return 1.4; };
        in.T = 1.0;
        CHECK(check_bracket(d, in).ok);
    }
    SECTION("quadratic candidate") {
        DominatingSolution d = quadratic(1.0, 0.5);
        BracketInput in;
        in.F0 = in.F1 = in.F2 = [](double, double y) { return y * y; };
        in.h0 = 1.0;
        in.L = 4.0;
        in.sub = [](double) { return 1.0; };
        in.sup = [](double) { return 2.0; };
        in.T = 0.5;
        in.tol = 1e-6;
        BracketReport r = check_bracket(d, in);
        INFO(r.detail);
        CHECK(r.ok);
        in.sup = [](double) { return 1.5; };
        in.L = 3.0;
        BracketReport bad = check_bracket(d, in);
        CHECK_FALSE(bad.ok);
        CHECK_FALSE(bad.contained);
    }
}
