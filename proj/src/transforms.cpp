#include "fbsde/error.hpp"
#include "fbsde/solver.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fbsde {

double invert_monotone(const std::function<double(double)>& phi, double w, double guess, double tol) {
    auto r = [&](double z) { return phi(z) - w; };
    double a = guess - 1.0, b = guess + 1.0;
    double ra = r(a), rb = r(b);
    double step = 1.0;
    int k = 0;
    while (ra * rb > 0.0) {
        if (++k > 80 || !std::isfinite(ra) || !std::isfinite(rb))
            raise(ErrorKind::Inversion, "no sign change found while inverting a monotone map");
        step *= 2.0;
        // Expand towards the side with the smaller residual.
        if (std::fabs(ra) < std::fabs(rb)) {
            b = a;
            rb = ra;
            a -= step;
            ra = r(a);
        } else {
            a = b;
            ra = rb;
            b += step;
            rb = r(b);
        }
    }
    if (ra == 0.0) return a;
    if (rb == 0.0) return b;
    std::uintmax_t iters = 200;
    auto stop = [tol](double lo, double hi) { return std::fabs(hi - lo) <= tol * std::max(1.0, std::fabs(lo)); };
    auto [lo, hi] = boost::math::tools::toms748_solve(r, a, b, ra, rb, stop, iters);
    if (iters >= 200) raise(ErrorKind::Inversion, "root finding did not converge");
    double z = 0.5 * (lo + hi);
    // One secant polish on the final bracket.
    double rl = r(lo), rh = r(hi);
    if (rh != rl) {
        double s = lo - rl * (hi - lo) / (rh - rl);
        if (s >= lo && s <= hi) z = s;
    }
    return z;
}

void require_strictly_monotone(const std::function<double(double)>& phi, const Interval& iv, const char* what,
                               double slope_floor) {
    const int n = 200;
    const double w = iv.width();
    const double h = std::max(1e-8, 1e-6 * w);
    int sign = 0;
    for (int k = 0; k <= n; ++k) {
        double x = iv.lo + w * k / n;
        double s = (phi(x + h) - phi(x - h)) / (2.0 * h);
        std::ostringstream os;
        if (!std::isfinite(s) || std::fabs(s) < slope_floor) {
            os << what << " is not strictly monotone: slope " << s << " at " << x;
            raise(ErrorKind::Monotonicity, os.str());
        }
        int sg = s > 0.0 ? 1 : -1;
        if (sign != 0 && sg != sign) {
            os << what << " changes monotonicity near " << x;
            raise(ErrorKind::Monotonicity, os.str());
        }
        sign = sg;
    }
}

namespace {

// Representative (t, x, y) points at which z -> sigma is checked.
template <class Fn>
void for_each_anchor(const CoefficientModel& m, Fn&& fn) {
    const SampleDomain& d = m.domain;
    for (double t : {0.0, 0.5 * m.horizon_T, m.horizon_T})
        for (double x : {d.x.lo, d.x.mid(), d.x.hi})
            for (double y : {d.y.lo, d.y.mid(), d.y.hi}) fn(t, x, y);
}

double sampled_max_slope_z(const CoefficientModel& m) {
    double best = 0.0;
    const Interval& zr = m.domain.z;
    for_each_anchor(m, [&](double t, double x, double y) {
        for (int k = 0; k < 50; ++k) {
            double z1 = zr.lo + zr.width() * k / 50.0;
            double z2 = zr.lo + zr.width() * (k + 1) / 50.0;
            best = std::max(best, (m.sigma(t, x, y, z2) - m.sigma(t, x, y, z1)) / (z2 - z1));
        }
    });
    return best;
}

double sampled_max_slope_g(const CoefficientModel& m) {
    double best = 0.0;
    const Interval& xr = m.domain.x;
    for (int k = 0; k < 400; ++k) {
        double x1 = xr.lo + xr.width() * k / 400.0;
        double x2 = xr.lo + xr.width() * (k + 1) / 400.0;
        best = std::max(best, (m.g(x2) - m.g(x1)) / (x2 - x1));
    }
    return best;
}

} // namespace

CoefficientModel reverse_roles(const CoefficientModel& m) {
    for_each_anchor(m, [&](double t, double x, double y) {
        require_strictly_monotone([&](double z) { return m.sigma(t, x, y, z); }, m.domain.z, "z -> sigma");
    });
    require_strictly_monotone(m.g, m.domain.x, "g");

    CoefficientModel r;
    const Coefficient sigma = m.sigma, b = m.b, f = m.f;
    const Terminal g = m.g;
    // sigma_tilde(t, xt, yt, zt) is the z with sigma(t, yt, xt, z) = zt.
    r.sigma = [sigma](double t, double xt, double yt, double zt) {
        return invert_monotone([&](double z) { return sigma(t, yt, xt, z); }, zt, zt);
    };
    r.g = [g](double xt) { return invert_monotone(g, xt, xt); };
    r.b = [f, s = r.sigma](double t, double xt, double yt, double zt) { return -f(t, yt, xt, s(t, xt, yt, zt)); };
    r.f = [b, s = r.sigma](double t, double xt, double yt, double zt) { return -b(t, yt, xt, s(t, xt, yt, zt)); };
    r.horizon_T = m.horizon_T;
    r.x0 = m.g(m.x0);
    r.domain = SampleDomain{m.domain.y, m.domain.x, m.domain.z};
    r.lipschitz_K0 = m.lipschitz_K0;
    r.label = "reverse(" + m.label + ")";
    return r;
}

double phi_c1_bar(double c1, double eps) { return (1.0 + 2.0 * c1 * eps) / (1.0 + c1 * eps); }
double phi_c2_bar(double c2, double eps) { return (eps + c2) / (2.0 * eps + c2); }

PhiTransform phi_eps_transform(const CoefficientModel& m, double eps, std::optional<double> c1,
                               std::optional<double> c2) {
    if (!(eps > 0.0)) raise(ErrorKind::Bound, "phi transform needs eps > 0; at eps = 0 the bound product is 1");
    PhiTransform out;
    out.eps = eps;
    out.c1 = c1.value_or(std::max(0.0, sampled_max_slope_z(m)));
    out.c2 = c2.value_or(std::max(0.0, sampled_max_slope_g(m)));
    out.c1_bar = phi_c1_bar(out.c1, eps);
    out.c2_bar = phi_c2_bar(out.c2, eps);
    if (!(out.c1_bar * out.c2_bar < 1.0)) {
        std::ostringstream os;
        os << "transformed bounds c1_bar c2_bar = " << out.c1_bar * out.c2_bar << " >= 1";
        raise(ErrorKind::Bound, os.str());
    }

    for_each_anchor(m, [&](double t, double x, double y) {
        require_strictly_monotone([&](double z) { return eps * m.sigma(t, x, y, z) + z; }, m.domain.z,
                                  "z -> eps sigma + z");
    });
    require_strictly_monotone([&](double x) { return 2.0 * eps * x + m.g(x); }, m.domain.x, "x -> 2 eps x + g");

    const Coefficient sigma = m.sigma, b = m.b, f = m.f;
    const Terminal g = m.g;
    // (x, y, z) recovered from the transformed variables.
    auto sigma_hat = [sigma, eps](double t, double x, double y, double zt) {
        return invert_monotone([&](double z) { return eps * sigma(t, x, y, z) + z; }, zt, zt);
    };
    auto g_hat = [g, eps](double xt) {
        return invert_monotone([&](double x) { return 2.0 * eps * x + g(x); }, xt, xt);
    };

    CoefficientModel& r = out.model;
    r.sigma = [sigma, sigma_hat, eps](double t, double xt, double yt, double zt) {
        double x = (xt - yt) / eps, y = 2.0 * yt - xt;
        double z = sigma_hat(t, x, y, zt);
        return 2.0 * eps * sigma(t, x, y, z) + z;
    };
    r.b = [b, f, sigma_hat, eps](double t, double xt, double yt, double zt) {
        double x = (xt - yt) / eps, y = 2.0 * yt - xt;
        double z = sigma_hat(t, x, y, zt);
        return 2.0 * eps * b(t, x, y, z) - f(t, x, y, z);
    };
    r.f = [b, f, sigma_hat, eps](double t, double xt, double yt, double zt) {
        double x = (xt - yt) / eps, y = 2.0 * yt - xt;
        double z = sigma_hat(t, x, y, zt);
        return -eps * b(t, x, y, z) + f(t, x, y, z);
    };
    r.g = [g, g_hat, eps](double xt) {
        double x = g_hat(xt);
        return eps * x + g(x);
    };
    r.horizon_T = m.horizon_T;
    r.x0 = 2.0 * eps * m.x0 + m.g(m.x0);
    r.lipschitz_K0 = m.lipschitz_K0 / eps;
    r.domain = m.domain;
    r.label = "phi(" + m.label + ")";
    return out;
}

namespace {

DecouplingField like_shape(const DecouplingField& like) {
    DecouplingField out;
    out.t_grid = like.t_grid;
    out.x_grid = like.x_grid;
    out.x0 = like.x0;
    out.core_lo = like.core_lo;
    out.core_hi = like.core_hi;
    out.u.assign(like.nt() * like.nx(), 0.0);
    out.ux.assign(like.nt() * like.nx(), 0.0);
    return out;
}

void fill_slopes(DecouplingField& F) {
    const std::size_t nx = F.nx();
    const double dx = F.x_grid[1] - F.x_grid[0];
    for (std::size_t i = 0; i < F.nt(); ++i) {
        double* u = &F.u[i * nx];
        double* s = &F.ux[i * nx];
        s[0] = (u[1] - u[0]) / dx;
        s[nx - 1] = (u[nx - 1] - u[nx - 2]) / dx;
        for (std::size_t j = 1; j + 1 < nx; ++j) s[j] = (u[j + 1] - u[j - 1]) / (2.0 * dx);
    }
}

} // namespace

DecouplingField map_back_reverse(const DecouplingField& tilde, const DecouplingField& like) {
    // Y = u(t, X) with X = u_tilde(t, Y): solve u_tilde(t, y) = x for y.
    DecouplingField out = like_shape(like);
    const std::size_t nx = out.nx();
    for (std::size_t i = 0; i < out.nt(); ++i) {
        const double t = out.t_grid[i];
        double guess = 0.0;
        for (std::size_t j = 0; j < nx; ++j) {
            const double x = out.x_grid[j];
            double y = invert_monotone([&](double yy) { return tilde.value(t, yy); }, x, guess);
            out.u[i * nx + j] = y;
            guess = y;
        }
    }
    fill_slopes(out);
    out.diag = tilde.diag;
    return out;
}

DecouplingField map_back_phi(const DecouplingField& tilde, double eps, const DecouplingField& like) {
    // eps x + y = u_tilde(t, 2 eps x + y).
    DecouplingField out = like_shape(like);
    const std::size_t nx = out.nx();
    for (std::size_t i = 0; i < out.nt(); ++i) {
        const double t = out.t_grid[i];
        double guess = 0.0;
        for (std::size_t j = 0; j < nx; ++j) {
            const double x = out.x_grid[j];
            auto r = [&](double y) { return eps * x + y - tilde.value(t, 2.0 * eps * x + y); };
            double y = invert_monotone(r, 0.0, guess);
            out.u[i * nx + j] = y;
            guess = y;
        }
    }
    fill_slopes(out);
    out.diag = tilde.diag;
    return out;
}

} // namespace fbsde
