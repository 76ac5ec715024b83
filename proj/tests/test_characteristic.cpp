#include "fbsde/characteristic.hpp"
#include "fbsde/error.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace fbsde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SlopeCoefficients random_coeffs(std::mt19937_64& rng, bool zero_s3) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    SlopeCoefficients c;
    for (std::size_t i = 0; i < 9; ++i) c[i] = U(rng);
    if (zero_s3) c.s3 = 0.0;
    return c;
}

} // namespace

TEST_CASE("generator of the zero model", "[characteristic]") {
    GeneratorValue v = eval_generator({}, 3.7);
    CHECK(v.F == 0.0);
    CHECK(v.G == 0.0);
    CHECK(v.Lambda == 0.0);
}

TEST_CASE("generator with s3 = 0.5", "[characteristic]") {
    SlopeCoefficients c;
    c.s3 = 0.5;
    GeneratorValue v = eval_generator(c, 1.0);
    CHECK_THAT(v.Lambda, WithinAbs(1.0, 1e-15));
    CHECK(v.F == 0.0);
    CHECK(v.G == 0.0);
}

TEST_CASE("generator at the singular point", "[characteristic]") {
    SlopeCoefficients c;
    c.s3 = 1.0;
    try {
        eval_generator(c, 1.0);
        FAIL("expected SingularDenominator");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularDenominator);
    }
}

TEST_CASE("cubic form examples", "[characteristic]") {
    SlopeCoefficients c;
    c.b2 = 1.0;
    CubicForm q = cubic_form(c);
    CHECK(q.a0 == 0.0);
    CHECK(q.a1 == 0.0);
    CHECK(q.a2 == 1.0);
    CHECK(q.a3 == 0.0);

    SlopeCoefficients d;
    d.s2 = 1.0;
    d.b3 = 1.0;
    CHECK(cubic_form(d).a3 == 1.0);

    CubicForm z = cubic_form({});
    CHECK((z.a0 == 0.0 && z.a1 == 0.0 && z.a2 == 0.0 && z.a3 == 0.0));

    SlopeCoefficients e;
    e.s3 = 0.1;
    CHECK_THROWS_AS(cubic_form(e), Error);
}

TEST_CASE("cubic form agrees with the generator", "[characteristic][property]") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> Y(-3.0, 3.0);
    for (int k = 0; k < 100; ++k) {
        SlopeCoefficients c = random_coeffs(rng, true);
        double y = Y(rng);
        CHECK_THAT(cubic_form(c)(y), WithinAbs(generator_F(c, y), 1e-12));
    }
}

TEST_CASE("cleared form agrees with the generator away from the pole", "[characteristic][property]") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> Y(-3.0, 3.0);
    int checked = 0;
    for (int k = 0; k < 200; ++k) {
        SlopeCoefficients c = random_coeffs(rng, false);
        double y = Y(rng);
        double den = 1.0 - c.s3 * y;
        if (std::fabs(den) < 1e-2) continue;
        ++checked;
        CHECK_THAT(cleared_form(c)(y), WithinAbs(generator_F(c, y) * den, 1e-9 * (1.0 + std::fabs(cleared_form(c)(y)))));
    }
    CHECK(checked > 150);
}

TEST_CASE("Lambda identity", "[characteristic][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> Y(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        SlopeCoefficients c = random_coeffs(rng, false);
        double y = Y(rng);
        if (std::fabs(1.0 - c.s3 * y) < 1e-2) continue;
        CHECK_THAT(eval_generator(c, y).Lambda, WithinRel(c.s3 / (1.0 - c.s3 * y), 1e-12));
    }
}

TEST_CASE("envelope of an affine b2 interval", "[characteristic]") {
    CoefficientBox box;
    box.slopes[1] = {-1.0, 1.0};
    Envelope env(box, {-3.0, 3.0});
    CHECK_THAT(env.upper(2.0), WithinAbs(4.0, 1e-12));
    CHECK_THAT(env.lower(2.0), WithinAbs(-4.0, 1e-12));
}

TEST_CASE("envelope of a point box is the generator", "[characteristic]") {
    SlopeCoefficients c;
    c.b1 = 0.3;
    c.b2 = -0.2;
    c.s2 = 0.4;
    c.s3 = 0.25;
    c.f2 = 0.7;
    c.f3 = -0.1;
    Envelope env(CoefficientBox::point(c, 0.5), {-2.0, 2.0});
    for (double y : {-2.0, -0.5, 0.0, 1.0, 2.0}) {
        CHECK_THAT(env.upper(y), WithinAbs(generator_F(c, y), 1e-12));
        CHECK_THAT(env.lower(y), WithinAbs(generator_F(c, y), 1e-12));
    }
}

TEST_CASE("envelope guard", "[characteristic]") {
    CoefficientBox box;
    box.slopes[5] = {0.9, 1.1};
    try {
        Envelope env(box, {0.8, 1.2});
        FAIL("expected GuardViolation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Guard);
    }
}

TEST_CASE("envelope bounds every box member", "[characteristic][property]") {
    std::mt19937_64 rng(314);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    CoefficientBox box;
    for (std::size_t i = 0; i < 9; ++i) {
        double a = U(rng) - 0.5, w = 0.3 * U(rng);
        box.slopes[i] = {a, a + w};
    }
    box.slopes[5] = {-0.2, 0.3};
    Envelope env(box, {-1.5, 1.5});
    for (int k = 0; k < 300; ++k) {
        SlopeCoefficients c;
        for (std::size_t i = 0; i < 9; ++i) c[i] = box[i].lo + U(rng) * box[i].width();
        double y = -1.5 + 3.0 * U(rng);
        double F = generator_F(c, y);
        CHECK(F <= env.upper(y) + 1e-12);
        CHECK(F >= env.lower(y) - 1e-12);
    }
}
