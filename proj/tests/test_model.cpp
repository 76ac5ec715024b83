#include "fbsde/error.hpp"
#include "fbsde/model.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>

using namespace fbsde;
using Catch::Matchers::WithinAbs;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::Io;
}

} // namespace

TEST_CASE("zero model spec loads", "[model]") {
    ProblemSpec s = parse_spec(R"({"model": {"b": "0", "sigma": "0", "f": "0", "g": "0", "lipschitz_K0": 1, "T": 1}})");
    REQUIRE(s.model);
    CHECK(s.model->horizon_T == 1.0);
    CHECK(s.model->g(3.0) == 0.0);
    CHECK(s.model->b(0.2, 1.0, -1.0, 2.0) == 0.0);
}

TEST_CASE("Lipschitz constant below the slope of g is rejected", "[model]") {
    auto k = kind_of([] {
        parse_spec(R"({"model": {"b": "0", "sigma": "0", "f": "0", "g": "x", "lipschitz_K0": 0.1, "T": 1}})");
    });
    CHECK(k == ErrorKind::Validation);
}

TEST_CASE("box with case constants loads", "[model]") {
    ProblemSpec s = parse_spec(R"({"box": {"b2": [-1, 1], "h": [0.5, 0.5], "c1": 0, "c2": 0.6, "c3": 0.8}})");
    REQUIRE(s.box);
    CHECK(s.box->at("b2").lo == -1.0);
    CHECK(s.box->at("b2").hi == 1.0);
    CHECK(s.box->at("s3").is_point());
    REQUIRE(s.box->constants);
    CHECK(s.box->constants->c3 == 0.8);
}

TEST_CASE("box constants must be ordered", "[model]") {
    CHECK(kind_of([] { parse_spec(R"({"box": {"h": [0, 0], "c1": 0, "c2": 0.9, "c3": 0.8}})"); }) ==
          ErrorKind::Validation);
    CHECK(kind_of([] { parse_spec(R"({"box": {"h": [0, 0], "c1": 2, "c2": 0.1, "c3": 0.8}})"); }) ==
          ErrorKind::Validation);
}

TEST_CASE("malformed input", "[model]") {
    CHECK(kind_of([] { parse_spec("{not json"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_spec(R"({"model": {"b": "x +* 2", "sigma": "0", "f": "0", "g": "0", "lipschitz_K0": 1, "T": 1}})"); }) ==
          ErrorKind::Parse);
    CHECK(kind_of([] { parse_spec(R"({"box": {"q7": [0, 1], "h": [0, 0]}})"); }) == ErrorKind::Schema);
    CHECK(kind_of([] { load_spec("/nonexistent/spec.json"); }) == ErrorKind::Io);
}

TEST_CASE("canonical form ignores key order", "[model]") {
    auto a = parse_spec(R"({"model": {"b": "0", "sigma": "1", "f": "0", "g": "x", "lipschitz_K0": 1, "T": 1}})");
    auto b = parse_spec(R"({"model": {"T": 1, "g": "x", "lipschitz_K0": 1, "f": "0", "sigma": "1", "b": "0"}})");
    CHECK(a.canonical == b.canonical);
}

TEST_CASE("slope box of a linear model", "[model]") {
    CoefficientModel m = make_model_from_expressions("2*y", "0", "0", "x", 3.0, 1.0);
    CoefficientBox box = slope_box_from_model(m);
    CHECK(box.at("b2").contains(2.0));
    CHECK(box.h.contains(1.0));
    CHECK(box.at("b1").contains(0.0));
    CHECK(box.at("s3").mag() <= 1e-12);
}

TEST_CASE("slope box of sin(z) stays within the margin", "[model]") {
    const double margin = 0.05;
    CoefficientModel m = make_model_from_expressions("0", "sin(z)", "0", "0", 1.0, 1.0);
    CoefficientBox box = slope_box_from_model(m, 4000, margin);
    CHECK(box.at("s3").lo >= -1.0 - margin);
    CHECK(box.at("s3").hi <= 1.0 + margin);
    // Sampling covers most of [-1, 1] on the default domain.
    CHECK(box.at("s3").hi >= 0.9);
    CHECK(box.at("s3").lo <= -0.2);
}

TEST_CASE("zero terminal slope", "[model]") {
    CoefficientModel m = make_model_from_expressions("0", "1", "0", "0", 1.0, 1.0);
    CoefficientBox box = slope_box_from_model(m);
    CHECK(box.h.mag() <= 1e-12);
}

TEST_CASE("slope box hull property", "[model][property]") {
    CoefficientModel m = make_model_from_expressions("0.3*sin(y) + 0.2*x", "1 + 0.1*cos(z)", "-0.5*y", "0.7*x", 1.0, 1.0);
    CoefficientBox box = slope_box_from_model(m, 2000, 0.0);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(-4.0, 4.0);
    int outside = 0;
    for (int k = 0; k < 200; ++k) {
        double x = U(rng), y = U(rng), z = U(rng), d = 1e-3;
        double q = (m.b(0.0, x, y + d, z) - m.b(0.0, x, y, z)) / d;
        if (!box.at("b2").contains(q, 1e-2)) ++outside;
    }
    CHECK(outside == 0);
}

TEST_CASE("I0 examples", "[model]") {
    CHECK(compute_I0(make_model_from_expressions("0", "0", "0", "0", 1.0, 1.0)) == 0.0);
    CHECK_THAT(compute_I0(make_model_from_expressions("0", "0", "1", "0", 1.0, 1.0)), WithinAbs(1.0, 1e-12));
    CHECK(compute_I0(make_model_from_expressions("0", "0", "0", "x", 1.0, 1.0)) == 0.0);
    // sqrt((2 * 1)^2 + 1 * 1 + 3^2) with b = 1, f = 1, sigma = 1, g(0) = 3
    CHECK_THAT(compute_I0(make_model_from_expressions("1", "1", "1", "x + 3", 1.0, 1.0)), WithinAbs(std::sqrt(14.0), 1e-10));
}

TEST_CASE("point box accessors", "[model]") {
    SlopeCoefficients c;
    c.b2 = 0.5;
    c.s3 = -0.25;
    CoefficientBox box = CoefficientBox::point(c, 0.4);
    CHECK(box.is_point());
    CHECK(box.mid().b2 == 0.5);
    CHECK(box.lower().s3 == -0.25);
    CHECK(box.h.mid() == 0.4);
}
