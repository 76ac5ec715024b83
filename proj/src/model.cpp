#include "fbsde/model.hpp"

#include "fbsde/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

namespace fbsde {

using nlohmann::json;

double Interval::mag() const noexcept { return std::max(std::fabs(lo), std::fabs(hi)); }

double& SlopeCoefficients::operator[](std::size_t i) {
    double* p[9] = {&b1, &b2, &b3, &s1, &s2, &s3, &f1, &f2, &f3};
    return *p[i];
}

double SlopeCoefficients::operator[](std::size_t i) const {
    const double p[9] = {b1, b2, b3, s1, s2, s3, f1, f2, f3};
    return p[i];
}

CoefficientBox CoefficientBox::point(const SlopeCoefficients& c, double h) {
    CoefficientBox box;
    for (std::size_t i = 0; i < 9; ++i) box.slopes[i] = Interval::point(c[i]);
    box.h = Interval::point(h);
    return box;
}

Interval& CoefficientBox::at(const std::string& name) {
    return const_cast<Interval&>(static_cast<const CoefficientBox&>(*this).at(name));
}

const Interval& CoefficientBox::at(const std::string& name) const {
    if (name == "h") return h;
    for (std::size_t i = 0; i < 9; ++i)
        if (name == SlopeCoefficients::names[i]) return slopes[i];
    raise(ErrorKind::Schema, "unknown box entry '" + name + "'");
}

bool CoefficientBox::is_point() const noexcept {
    return h.is_point() &&
           std::all_of(slopes.begin(), slopes.end(), [](const Interval& i) { return i.is_point(); });
}

SlopeCoefficients CoefficientBox::lower() const {
    SlopeCoefficients c;
    for (std::size_t i = 0; i < 9; ++i) c[i] = slopes[i].lo;
    return c;
}

SlopeCoefficients CoefficientBox::upper() const {
    SlopeCoefficients c;
    for (std::size_t i = 0; i < 9; ++i) c[i] = slopes[i].hi;
    return c;
}

SlopeCoefficients CoefficientBox::mid() const {
    SlopeCoefficients c;
    for (std::size_t i = 0; i < 9; ++i) c[i] = slopes[i].mid();
    return c;
}

CoefficientModel make_model_from_expressions(const std::string& b, const std::string& sigma,
                                             const std::string& f, const std::string& g,
                                             double K0, double T, double x0) {
    auto eb = std::make_shared<Expression>(Expression::parse(b));
    auto es = std::make_shared<Expression>(Expression::parse(sigma));
    auto ef = std::make_shared<Expression>(Expression::parse(f));
    auto eg = std::make_shared<Expression>(Expression::parse(g, "x"));
    CoefficientModel m;
    m.b = [eb](double t, double x, double y, double z) { return eb->eval(t, x, y, z); };
    m.sigma = [es](double t, double x, double y, double z) { return es->eval(t, x, y, z); };
    m.f = [ef](double t, double x, double y, double z) { return ef->eval(t, x, y, z); };
    m.g = [eg](double x) { return eg->eval(0.0, x, 0.0, 0.0); };
    m.lipschitz_K0 = K0;
    m.horizon_T = T;
    m.x0 = x0;
    m.label = "b=" + b + ";sigma=" + sigma + ";f=" + f + ";g=" + g;
    return m;
}

CoefficientModel make_linear_model(const SlopeCoefficients& c, double h, double T, double x0) {
    CoefficientModel m;
    m.b = [c](double, double x, double y, double z) { return c.b1 * x + c.b2 * y + c.b3 * z; };
    m.sigma = [c](double, double x, double y, double z) { return c.s1 * x + c.s2 * y + c.s3 * z; };
    m.f = [c](double, double x, double y, double z) { return c.f1 * x + c.f2 * y + c.f3 * z; };
    m.g = [h](double x) { return h * x; };
    double K0 = std::fabs(h);
    for (std::size_t i = 0; i < 9; ++i) K0 = std::max(K0, std::fabs(c[i]));
    m.lipschitz_K0 = K0;
    m.horizon_T = T;
    m.x0 = x0;
    std::ostringstream os;
    os.precision(17);
    os << "linear";
    for (std::size_t i = 0; i < 9; ++i) os << ';' << SlopeCoefficients::names[i] << '=' << c[i];
    os << ";h=" << h;
    m.label = os.str();
    return m;
}

// ---------------------------------------------------------------------------
// JSON loading

namespace {

[[noreturn]] void schema(const std::string& what) { raise(ErrorKind::Schema, what); }

double get_number(const json& j, const std::string& where) {
    if (!j.is_number()) schema(where + " must be a number");
    return j.get<double>();
}

Interval get_interval(const json& j, const std::string& where) {
    if (j.is_number()) return Interval::point(j.get<double>());
    if (j.is_array()) {
        if (j.size() != 2) schema(where + " must have two entries");
        return {get_number(j[0], where + "[0]"), get_number(j[1], where + "[1]")};
    }
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "lo" && it.key() != "hi") schema(where + ": unknown field '" + it.key() + "'");
        if (!j.contains("lo") || !j.contains("hi")) schema(where + " needs both 'lo' and 'hi'");
        return {get_number(j["lo"], where + ".lo"), get_number(j["hi"], where + ".hi")};
    }
    schema(where + " must be a number, [lo, hi] or {lo, hi}");
}

std::string get_expr(const json& j, const std::string& key) {
    if (!j.contains(key)) schema("model." + key + " is required");
    const json& v = j[key];
    if (v.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
    }
    if (!v.is_string()) schema("model." + key + " must be an expression string");
    return v.get<std::string>();
}

CoefficientModel parse_model(const json& j) {
    if (!j.is_object()) schema("model must be an object");
    static const char* known[] = {"b", "sigma", "f", "g", "lipschitz_K0", "T", "x0", "domain"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
            schema("model: unknown field '" + it.key() + "'");
    if (!j.contains("lipschitz_K0")) schema("model.lipschitz_K0 is required");
    if (!j.contains("T")) schema("model.T is required");
    double K0 = get_number(j["lipschitz_K0"], "model.lipschitz_K0");
    double T = get_number(j["T"], "model.T");
    double x0 = j.contains("x0") ? get_number(j["x0"], "model.x0") : 0.0;
    CoefficientModel m = make_model_from_expressions(get_expr(j, "b"), get_expr(j, "sigma"),
                                                     get_expr(j, "f"), get_expr(j, "g"), K0, T, x0);
    if (j.contains("domain")) {
        const json& d = j["domain"];
        if (!d.is_object()) schema("model.domain must be an object");
        for (auto it = d.begin(); it != d.end(); ++it) {
            Interval iv = get_interval(it.value(), "model.domain." + it.key());
            if (it.key() == "x") m.domain.x = iv;
            else if (it.key() == "y") m.domain.y = iv;
            else if (it.key() == "z") m.domain.z = iv;
            else schema("model.domain: unknown field '" + it.key() + "'");
        }
    }
    return m;
}

CoefficientBox parse_box(const json& j) {
    if (!j.is_object()) schema("box must be an object");
    CoefficientBox box;
    std::optional<double> c[3];
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "c1" || k == "c2" || k == "c3") {
            c[k[1] - '1'] = get_number(it.value(), "box." + k);
            continue;
        }
        box.at(k) = get_interval(it.value(), "box." + k);
    }
    int given = (c[0] ? 1 : 0) + (c[1] ? 1 : 0) + (c[2] ? 1 : 0);
    if (given != 0 && given != 3) schema("box constants c1, c2, c3 must be given together");
    if (given == 3) box.constants = CaseConstants{*c[0], *c[1], *c[2]};
    return box;
}

SpecOptions parse_options(const json& j) {
    if (!j.is_object()) schema("options must be an object");
    SpecOptions o;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const std::string where = "options." + k;
        if (k == "T") o.T = get_number(it.value(), where);
        else if (k == "dt") o.dt = get_number(it.value(), where);
        else if (k == "dx") o.dx = get_number(it.value(), where);
        else if (k == "band") o.band = get_number(it.value(), where);
        else if (k == "eps") o.eps = get_number(it.value(), where);
        else if (k == "margin") o.margin = get_number(it.value(), where);
        else if (k == "seed") {
            if (!it.value().is_number_unsigned()) schema(where + " must be a non-negative integer");
            o.seed = it.value().get<std::uint64_t>();
        } else if (k == "paths" || k == "samples") {
            if (!it.value().is_number_integer()) schema(where + " must be an integer");
            (k == "paths" ? o.paths : o.samples) = it.value().get<int>();
        } else schema("options: unknown field '" + k + "'");
    }
    return o;
}

} // namespace

ProblemSpec parse_spec(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        raise(ErrorKind::Parse, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) schema("top level must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (it.key() != "model" && it.key() != "box" && it.key() != "options")
            schema("unknown top-level field '" + it.key() + "'");
    if (!doc.contains("model") && !doc.contains("box")) schema("a spec needs 'model' or 'box'");

    ProblemSpec spec;
    spec.canonical = doc.dump();
    if (doc.contains("options")) spec.options = parse_options(doc["options"]);
    if (doc.contains("model")) spec.model = parse_model(doc["model"]);
    if (doc.contains("box")) spec.box = parse_box(doc["box"]);

    if (spec.box) validate_box(*spec.box);
    if (spec.model) {
        int n = spec.options.samples.value_or(2000);
        validate_model(*spec.model, n);
        if (spec.box) validate_consistency(*spec.model, *spec.box, n);
    }
    return spec;
}

ProblemSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

struct QuotientSample {
    SlopeCoefficients c;
    double h = 0.0;
};

class QuotientSampler {
public:
    QuotientSampler(const CoefficientModel& m, const SampleDomain& d, std::uint64_t seed)
        : m_(m), d_(d), rng_(seed) {}

    // Even draws use independent pairs, odd draws use nearby pairs so that
    // local derivatives are seen as well as chords.
    QuotientSample draw(bool near) {
        double t = uni(0.0, std::max(m_.horizon_T, 0.0));
        double x1 = uni(d_.x.lo, d_.x.hi), y1 = uni(d_.y.lo, d_.y.hi), z1 = uni(d_.z.lo, d_.z.hi);
        double x2 = partner(x1, d_.x, near);
        double y2 = partner(y1, d_.y, near);
        double z2 = partner(z1, d_.z, near);
        QuotientSample s;
        quotients(m_.b, t, x1, x2, y1, y2, z1, z2, s.c.b1, s.c.b2, s.c.b3);
        quotients(m_.sigma, t, x1, x2, y1, y2, z1, z2, s.c.s1, s.c.s2, s.c.s3);
        quotients(m_.f, t, x1, x2, y1, y2, z1, z2, s.c.f1, s.c.f2, s.c.f3);
        s.h = q(m_.g(x1), m_.g(x2), x1, x2);
        return s;
    }

private:
    double uni(double lo, double hi) {
        if (!(hi > lo)) return lo;
        return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }

    double partner(double v, const Interval& iv, bool near) {
        if (iv.is_point()) return v;
        if (!near) {
            double w = uni(iv.lo, iv.hi);
            return w == v ? (v == iv.hi ? iv.lo : iv.hi) : w;
        }
        double step = 1e-4 * iv.width();
        double w = v + (v + step <= iv.hi ? step : -step);
        return w;
    }

    static double q(double a, double b, double u, double v) {
        if (u == v) return 0.0;
        double r = (a - b) / (u - v);
        if (!std::isfinite(r)) raise(ErrorKind::Validation, "non-finite coefficient value while sampling");
        return r;
    }

    // Path x1 -> x2, then y1 -> y2, then z1 -> z2.
    static void quotients(const Coefficient& phi, double t, double x1, double x2, double y1,
                          double y2, double z1, double z2, double& c1, double& c2, double& c3) {
        double p0 = phi(t, x1, y1, z1);
        double p1 = phi(t, x2, y1, z1);
        double p2 = phi(t, x2, y2, z1);
        double p3 = phi(t, x2, y2, z2);
        c1 = q(p0, p1, x1, x2);
        c2 = q(p1, p2, y1, y2);
        c3 = q(p2, p3, z1, z2);
    }

    const CoefficientModel& m_;
    SampleDomain d_;
    std::mt19937_64 rng_;
};

} // namespace

void validate_model(const CoefficientModel& m, int samples, std::uint64_t seed) {
    if (!(m.lipschitz_K0 >= 0.0) || !std::isfinite(m.lipschitz_K0))
        raise(ErrorKind::Validation, "lipschitz_K0 must be a finite non-negative number");
    if (!(m.horizon_T > 0.0) || !std::isfinite(m.horizon_T))
        raise(ErrorKind::Validation, "horizon T must be positive");
    for (const Interval* iv : {&m.domain.x, &m.domain.y, &m.domain.z})
        if (!(iv->lo <= iv->hi)) raise(ErrorKind::Validation, "sampling domain interval has lo > hi");

    const double bound = m.lipschitz_K0 * (1.0 + 1e-9) + 1e-12;
    QuotientSampler sampler(m, m.domain, seed);
    for (int k = 0; k < samples; ++k) {
        QuotientSample s = sampler.draw(k % 2 == 1);
        for (std::size_t i = 0; i < 9; ++i) {
            if (std::fabs(s.c[i]) > bound) {
                std::ostringstream os;
                os << "Lipschitz bound violated: sampled slope " << SlopeCoefficients::names[i]
                   << " = " << s.c[i] << " exceeds lipschitz_K0 = " << m.lipschitz_K0;
                raise(ErrorKind::Validation, os.str());
            }
        }
        if (std::fabs(s.h) > bound) {
            std::ostringstream os;
            os << "Lipschitz bound violated: sampled slope of g = " << s.h
               << " exceeds lipschitz_K0 = " << m.lipschitz_K0;
            raise(ErrorKind::Validation, os.str());
        }
    }
}

void validate_box(const CoefficientBox& box) {
    for (std::size_t i = 0; i < 9; ++i) {
        const Interval& iv = box.slopes[i];
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi)
            raise(ErrorKind::Validation,
                  std::string("box interval ") + SlopeCoefficients::names[i] + " must satisfy lo <= hi");
    }
    if (!std::isfinite(box.h.lo) || !std::isfinite(box.h.hi) || box.h.lo > box.h.hi)
        raise(ErrorKind::Validation, "box interval h must satisfy lo <= hi");
    if (box.constants) {
        const CaseConstants& c = *box.constants;
        if (!(c.c1 >= 0.0)) raise(ErrorKind::Validation, "box constants require c1 >= 0");
        if (!(c.c2 > 0.0 && c.c2 < c.c3)) raise(ErrorKind::Validation, "box constants require 0 < c2 < c3");
        if (!(c.c1 * c.c3 < 1.0)) raise(ErrorKind::Validation, "box constants require c1 * c3 < 1");
    }
}

void validate_consistency(const CoefficientModel& m, const CoefficientBox& box, int samples) {
    CoefficientBox sampled = slope_box_from_model(m, m.domain, samples, 0.0);
    for (std::size_t i = 0; i < 9; ++i) {
        const Interval& iv = box.slopes[i];
        double tol = 1e-9 * (1.0 + iv.mag());
        if (!iv.contains(sampled.slopes[i], tol))
            raise(ErrorKind::Validation, std::string("model slopes of ") + SlopeCoefficients::names[i] +
                                             " leave the declared box");
    }
    if (!box.h.contains(sampled.h, 1e-9 * (1.0 + box.h.mag())))
        raise(ErrorKind::Validation, "slope of g leaves the declared box interval h");
}

CoefficientBox slope_box_from_model(const CoefficientModel& m, const SampleDomain& domain,
                                    int samples, double margin, std::uint64_t seed) {
    CoefficientBox box;
    const double inf = std::numeric_limits<double>::infinity();
    for (auto& iv : box.slopes) iv = {inf, -inf};
    box.h = {inf, -inf};
    auto widen = [](Interval& iv, double v) {
        iv.lo = std::min(iv.lo, v);
        iv.hi = std::max(iv.hi, v);
    };
    QuotientSampler sampler(m, domain, seed);
    for (int k = 0; k < std::max(samples, 2); ++k) {
        QuotientSample s = sampler.draw(k % 2 == 1);
        for (std::size_t i = 0; i < 9; ++i) widen(box.slopes[i], s.c[i]);
        widen(box.h, s.h);
    }
    auto pad = [margin](Interval& iv) {
        double p = margin * iv.mag();
        iv.lo -= p;
        iv.hi += p;
    };
    for (auto& iv : box.slopes) pad(iv);
    pad(box.h);
    return box;
}

double compute_I0(const CoefficientModel& m) {
    using boost::math::quadrature::gauss_kronrod;
    const double T = m.horizon_T;
    auto drift = [&](double t) { return std::fabs(m.b(t, 0, 0, 0)) + std::fabs(m.f(t, 0, 0, 0)); };
    auto vol = [&](double t) {
        double s = m.sigma(t, 0, 0, 0);
        return s * s;
    };
    double a = gauss_kronrod<double, 31>::integrate(drift, 0.0, T, 10, 1e-12);
    double v = gauss_kronrod<double, 31>::integrate(vol, 0.0, T, 10, 1e-12);
    double g0 = m.g(0.0);
    double I0 = std::sqrt(a * a + v + g0 * g0);
    if (!std::isfinite(I0)) raise(ErrorKind::Quadrature, "non-finite coefficient value while integrating I0");
    return I0;
}

} // namespace fbsde
