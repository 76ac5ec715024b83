#include "fbsde/characteristic.hpp"

#include "fbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fbsde {

namespace {

[[noreturn]] void singular(double y, double s3) {
    std::ostringstream os;
    os << "1 - s3*y vanishes: s3 = " << s3 << ", y = " << y;
    raise(ErrorKind::SingularDenominator, os.str());
}

inline double F_unchecked(const SlopeCoefficients& c, double y, double d) {
    return c.f1 + c.f2 * y + y * (c.b1 + c.b2 * y) + (c.f3 + c.b3 * y) * y * (c.s1 + c.s2 * y) / d;
}

} // namespace

GeneratorValue eval_generator(const SlopeCoefficients& c, double y, double guard) {
    double d = 1.0 - c.s3 * y;
    if (std::fabs(d) < guard) singular(y, c.s3);
    GeneratorValue v;
    v.F = F_unchecked(c, y, d);
    v.G = ((c.s1 + c.f3) + (c.s2 + c.b3) * y) / d;
    v.Lambda = c.s3 / d;
    return v;
}

double generator_F(const SlopeCoefficients& c, double y, double guard) {
    double d = 1.0 - c.s3 * y;
    if (std::fabs(d) < guard) singular(y, c.s3);
    return F_unchecked(c, y, d);
}

CubicForm cubic_form(const SlopeCoefficients& c) {
    if (c.s3 != 0.0) raise(ErrorKind::Precondition, "cubic_form requires s3 == 0");
    return {c.f1, c.f2 + c.b1 + c.s1 * c.f3, c.b2 + c.f3 * c.s2 + c.b3 * c.s1, c.s2 * c.b3};
}

CubicForm cleared_form(const SlopeCoefficients& c) {
    // (f1 + (f2 + b1) y + b2 y^2)(1 - s3 y) + (f3 + b3 y)(s1 + s2 y) y
    double k = c.f2 + c.b1;
    CubicForm p;
    p.a0 = c.f1;
    p.a1 = k - c.s3 * c.f1 + c.f3 * c.s1;
    p.a2 = c.b2 - c.s3 * k + c.f3 * c.s2 + c.b3 * c.s1;
    p.a3 = c.b3 * c.s2 - c.s3 * c.b2;
    return p;
}

double alpha3(const SlopeCoefficients& c) {
    if (c.s3 == 0.0) raise(ErrorKind::Precondition, "alpha3 requires s3 != 0");
    return c.b2 - c.b3 * c.s2 / c.s3;
}

Envelope::Envelope(const CoefficientBox& box, Interval y_range, double guard)
    : s3_(box.slopes[5]), y_range_(y_range), guard_(guard) {
    if (!(y_range.lo <= y_range.hi)) raise(ErrorKind::Precondition, "envelope y range has lo > hi");
    double corners[4] = {1.0 - s3_.lo * y_range.lo, 1.0 - s3_.lo * y_range.hi,
                         1.0 - s3_.hi * y_range.lo, 1.0 - s3_.hi * y_range.hi};
    double mn = *std::min_element(corners, corners + 4);
    double mx = *std::max_element(corners, corners + 4);
    double margin = (mn < 0.0 && mx > 0.0) ? 0.0 : std::min(std::fabs(mn), std::fabs(mx));
    if (margin < guard) {
        std::ostringstream os;
        os << "1 - s3*y can vanish on the box: s3 in [" << s3_.lo << ", " << s3_.hi << "], y in ["
           << y_range.lo << ", " << y_range.hi << "]";
        raise(ErrorKind::Guard, os.str());
    }

    vertices_.push_back(SlopeCoefficients{});
    for (std::size_t i = 0; i < 9; ++i) {
        const Interval& iv = box.slopes[i];
        std::size_t n = vertices_.size();
        for (std::size_t k = 0; k < n; ++k) vertices_[k][i] = iv.lo;
        if (iv.is_point()) continue;
        for (std::size_t k = 0; k < n; ++k) {
            SlopeCoefficients v = vertices_[k];
            v[i] = iv.hi;
            vertices_.push_back(v);
        }
    }
}

double Envelope::guard_margin(double y) const noexcept {
    double a = 1.0 - s3_.lo * y;
    double b = 1.0 - s3_.hi * y;
    if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)) return 0.0;
    return std::min(std::fabs(a), std::fabs(b));
}

void Envelope::bounds(double y, double& lo, double& hi) const {
    if (guard_margin(y) < guard_) {
        std::ostringstream os;
        os << "envelope queried where 1 - s3*y can vanish: y = " << y;
        raise(ErrorKind::Guard, os.str());
    }
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const SlopeCoefficients& v : vertices_) {
        double F = F_unchecked(v, y, 1.0 - v.s3 * y);
        lo = std::min(lo, F);
        hi = std::max(hi, F);
    }
}

double Envelope::upper(double y) const {
    double lo, hi;
    bounds(y, lo, hi);
    return hi;
}

double Envelope::lower(double y) const {
    double lo, hi;
    bounds(y, lo, hi);
    return lo;
}

Envelope envelope_from_box(const CoefficientBox& box, Interval y_range, double guard) {
    return Envelope(box, y_range, guard);
}

} // namespace fbsde
