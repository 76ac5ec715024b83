#include "fbsde/classifier.hpp"
#include "fbsde/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace fbsde {

namespace {

// (2^{p/2} - 2) / (p - 2), continuous at p = 2 where it equals ln 2.
double ratio(double p) {
    double d = p - 2.0;
    if (d == 0.0) return std::log(2.0);
    return 2.0 * std::expm1(0.5 * d * std::log(2.0)) / d;
}

void check_p(double p) {
    if (!(p >= 2.0) || !std::isfinite(p)) {
        std::ostringstream os;
        os << "psi is defined for p >= 2, got " << p;
        raise(ErrorKind::Domain, os.str());
    }
}

} // namespace

double psi1(double p) {
    check_p(p);
    double e = 0.5 - 1.0 / p;
    return std::pow(2.0, -1.0 / p) * std::sqrt(p) * std::pow(ratio(p), e);
}

double psi2(double p) {
    check_p(p);
    double e = 0.5 - 1.0 / p;
    return std::pow(0.5 * (p - 1.0), 1.0 / p) * std::sqrt(p) *
           std::pow(std::pow(2.0, 0.5 * p) + ratio(p), e);
}

double p_max(double c1, double c3) {
    if (!(c1 >= 0.0) || !(c3 >= 0.0)) raise(ErrorKind::Domain, "p_max needs c1 >= 0 and c3 >= 0");
    if (c1 == 0.0 || c3 == 0.0) return std::numeric_limits<double>::infinity();
    double k = c1 * c3;
    if (!(k < 1.0)) {
        std::ostringstream os;
        os << "p_max needs c1 * c3 < 1, got " << k;
        raise(ErrorKind::Domain, os.str());
    }
    const double target = 1.0 / k;
    double lo = 2.0, hi = 4.0;
    while (psi(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) return std::numeric_limits<double>::infinity();
    }
    for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        (psi(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace fbsde
