#include "fbsde/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fbsde {

namespace {

double poly(double a0, double a1, double a2, double a3, double y) {
    return a0 + y * (a1 + y * (a2 + y * a3));
}

double dpoly(double a1, double a2, double a3, double y) { return a1 + y * (2.0 * a2 + y * 3.0 * a3); }

double polish(double a0, double a1, double a2, double a3, double r) {
    double best = r, best_res = std::fabs(poly(a0, a1, a2, a3, r));
    for (int k = 0; k < 8 && best_res > 0.0; ++k) {
        double d = dpoly(a1, a2, a3, r);
        if (d == 0.0) break;
        r -= poly(a0, a1, a2, a3, r) / d;
        double res = std::fabs(poly(a0, a1, a2, a3, r));
        if (res < best_res) {
            best = r;
            best_res = res;
        } else {
            break;
        }
    }
    return best;
}

void quadratic(double c, double b, double a, std::vector<RealRoot>& out) {
    // a y^2 + b y + c
    double disc = b * b - 4.0 * a * c;
    double scale = b * b + std::fabs(4.0 * a * c);
    if (std::fabs(disc) <= 1e-12 * scale) {
        out.push_back({-b / (2.0 * a), 2});
        return;
    }
    if (disc < 0.0) return;
    double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double r1 = q / a;
    double r2 = q != 0.0 ? c / q : -r1;
    out.push_back({r1, 1});
    out.push_back({r2, 1});
}

void cubic(double a0, double a1, double a2, double a3, std::vector<RealRoot>& out) {
    const double A = a2 / a3, B = a1 / a3, C = a0 / a3;
    const double shift = -A / 3.0;
    const double p = B - A * A / 3.0;
    const double q = 2.0 * A * A * A / 27.0 - A * B / 3.0 + C;
    const double h2 = 0.25 * q * q;
    const double p3 = p * p * p / 27.0;
    const double D = h2 + p3;
    const double scale = std::max(h2, std::fabs(p3));
    const double pscale = A * A + std::fabs(B) + std::cbrt(std::fabs(C)) * std::cbrt(std::fabs(C));

    if (std::fabs(p) <= 1e-12 * std::max(pscale, 1e-300) && std::fabs(q) <= 1e-12 * std::max(std::pow(pscale, 1.5), 1e-300)) {
        out.push_back({shift, 3});
        return;
    }
    if (std::fabs(D) <= 1e-10 * scale) {
        out.push_back({shift + 3.0 * q / p, 1});
        out.push_back({shift - 1.5 * q / p, 2});
        return;
    }
    if (D > 0.0) {
        double w = std::cbrt(-0.5 * q - std::copysign(std::sqrt(D), q));
        double u = w - p / (3.0 * w);
        out.push_back({shift + u, 1});
        return;
    }
    double m = 2.0 * std::sqrt(-p / 3.0);
    double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k)
        out.push_back({shift + m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0), 1});
}

} // namespace

CubicRootReport real_cubic_roots(double a0, double a1, double a2, double a3) {
    CubicRootReport rep;
    if (a3 != 0.0) {
        rep.degree = 3;
        cubic(a0, a1, a2, a3, rep.roots);
    } else if (a2 != 0.0) {
        rep.degree = 2;
        quadratic(a0, a1, a2, rep.roots);
    } else if (a1 != 0.0) {
        rep.degree = 1;
        rep.roots.push_back({-a0 / a1, 1});
    } else {
        rep.degree = 0;
        rep.identically_zero = a0 == 0.0;
    }
    for (RealRoot& r : rep.roots)
        if (r.multiplicity == 1) r.value = polish(a0, a1, a2, a3, r.value);
    std::sort(rep.roots.begin(), rep.roots.end(),
              [](const RealRoot& a, const RealRoot& b) { return a.value < b.value; });
    return rep;
}

} // namespace fbsde
