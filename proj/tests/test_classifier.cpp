#include "fbsde/classifier.hpp"
#include "fbsde/error.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

using namespace fbsde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("real roots of small polynomials", "[classifier]") {
    CubicRootReport a = real_cubic_roots(0.0, -1.0, 0.0, 1.0);
    REQUIRE(a.roots.size() == 3);
    CHECK_THAT(a.roots[0].value, WithinAbs(-1.0, 1e-12));
    CHECK_THAT(a.roots[1].value, WithinAbs(0.0, 1e-12));
    CHECK_THAT(a.roots[2].value, WithinAbs(1.0, 1e-12));

    CubicRootReport b = real_cubic_roots(0.0, 0.0, 0.0, 1.0);
    REQUIRE(b.roots.size() == 1);
    CHECK(b.roots[0].value == 0.0);
    CHECK(b.roots[0].multiplicity == 3);

    CHECK(real_cubic_roots(1.0, 0.0, 1.0, 0.0).roots.empty());
    CHECK(real_cubic_roots(0.0, 0.0, 0.0, 0.0).identically_zero);
}

TEST_CASE("roots are zeros", "[classifier][property]") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int k = 0; k < 200; ++k) {
        double a0 = U(rng), a1 = U(rng), a2 = U(rng), a3 = U(rng);
        for (const RealRoot& r : real_cubic_roots(a0, a1, a2, a3).roots) {
            double y = r.value;
            double p = a0 + y * (a1 + y * (a2 + y * a3));
            double scale = std::fabs(a0) + std::fabs(a1 * y) + std::fabs(a2 * y * y) + std::fabs(a3 * y * y * y);
            CHECK(std::fabs(p) <= 1e-9 * (1.0 + scale));
        }
    }
}

TEST_CASE("sigma3 = 0 sharp cases", "[classifier]") {
    CHECK(classify_constant({}, 0.8).verdict == Verdict::SolvableAllT);

    SlopeCoefficients neg;
    neg.b2 = -1.0;
    Classification c = classify_constant(neg, 1.0);
    CHECK(c.verdict == Verdict::SolvableAllT);
    CHECK(c.all_T == std::optional<bool>(true));

    SlopeCoefficients pos;
    pos.b2 = 1.0;
    CHECK(classify_constant(pos, 1.0).verdict == Verdict::NotSolvableAllT);
    Classification upto = classify_constant(pos, 1.0, 2.0);
    CHECK(upto.verdict == Verdict::SolvableUpTo);
    REQUIRE(upto.T_star);
    CHECK_THAT(*upto.T_star, WithinAbs(1.0, 1e-3));
}

TEST_CASE("sigma3 != 0 sharp cases", "[classifier]") {
    SlopeCoefficients c;
    c.s3 = 1.0;
    CHECK(classify_constant(c, 2.0).verdict == Verdict::SolvableAllT);
    try {
        classify_constant(c, 1.0);
        FAIL("expected DegenerateError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Degenerate);
    }
}

TEST_CASE("positive generator below the pole hits it", "[classifier]") {
    // F = 1 / (1 - y) has no zero and reaches the pole after a horizon of 0.5.
    SlopeCoefficients c;
    c.f1 = 1.0;
    c.s1 = 1.0;
    c.f3 = 1.0;
    c.s3 = 1.0;
    CHECK(classify_constant(c, 0.0).verdict == Verdict::NotSolvableAllT);
    Classification given = classify_constant(c, 0.0, 1.0);
    CHECK(given.verdict == Verdict::SolvableUpTo);
    REQUIRE(given.T_star);
    CHECK_THAT(*given.T_star, WithinAbs(0.5, 1e-3));
}

TEST_CASE("box classification", "[classifier]") {
    SECTION("zero box") {
        CoefficientBox box;
        box.constants = CaseConstants{0.1, 0.2, 0.5};
        Classification c = classify_box(box, 3.0);
        CHECK(c.verdict != Verdict::Inconclusive);
        REQUIRE(c.bracket);
        CHECK_THAT(c.bracket->lower, WithinAbs(0.0, 1e-12));
        CHECK_THAT(c.bracket->upper, WithinAbs(0.0, 1e-12));
    }
    SECTION("large s3 and h") {
        CoefficientBox box;
        box.slopes[5] = {1.0, 1.0};
        box.h = {2.0, 2.0};
        box.constants = CaseConstants{1.0, 0.5, 0.6};
        Classification c = classify_box(box, 1.0);
        CHECK((c.verdict == Verdict::SolvableGivenT || c.verdict == Verdict::SolvableAllT));
    }
    SECTION("quadratic growth escapes") {
        CoefficientBox box;
        box.slopes[1] = {1.0, 1.0};
        box.h = {0.9, 0.9};
        box.constants = CaseConstants{0.0, 0.95, 0.99};
        CHECK(classify_box(box, 5.0).verdict == Verdict::Inconclusive);
    }
    SECTION("missing constants") {
        try {
            classify_box(CoefficientBox{}, 1.0);
            FAIL("expected BoxError");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Box);
        }
    }
}

TEST_CASE("monotonicity shortcut", "[classifier]") {
    SlopeCoefficients a;
    a.s3 = 1.0;
    a.f1 = -1.0;
    a.b2 = 1.0;
    CHECK(check_monotonicity(a, -1.0));
    CHECK(check_monotonicity(SlopeCoefficients{}, 0.0));
    SlopeCoefficients b;
    b.s3 = 1.0;
    CHECK_FALSE(check_monotonicity(b, 1.0));
}

TEST_CASE("psi constants", "[classifier]") {
    CHECK_THAT(psi1(2.0), WithinAbs(1.0, 1e-12));
    CHECK_THAT(psi2(2.0), WithinAbs(1.0, 1e-12));
    CHECK_THAT(psi1(4.0), WithinRel(std::pow(2.0, 0.75), 1e-12));
    CHECK_THAT(psi1(4.0), WithinAbs(1.681793, 1e-6));
}

TEST_CASE("largest moment exponent", "[classifier]") {
    double p = p_max(0.5, 0.5);
    CHECK(p > 2.0);
    CHECK_THAT(psi(p), WithinAbs(4.0, 1e-8));
    CHECK(p_max(0.0, 0.7) == std::numeric_limits<double>::infinity());
    CHECK_THAT(p_max(1.0, 1.0 - 1e-9), WithinAbs(2.0, 1e-3));
    CHECK_THROWS_AS(p_max(1.0, 1.0), Error);
    CHECK_THROWS_AS(p_max(-1.0, 0.5), Error);
}

TEST_CASE("p_max round trip", "[classifier][property]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    for (int k = 0; k < 30; ++k) {
        double c1 = U(rng), c3 = U(rng);
        double p = p_max(c1, c3);
        CHECK(p >= 2.0);
        CHECK_THAT(psi(p) * c1 * c3, WithinAbs(1.0, 1e-8));
    }
}
