#include "fbsde/solver.hpp"

#include "fbsde/error.hpp"
#include "fbsde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace fbsde {

// ---------------------------------------------------------------------------
// Field access

std::size_t DecouplingField::node_of(double x) const {
    if (x_grid.size() < 2) return 0;
    double dx = x_grid[1] - x_grid[0];
    double k = std::round((x - x_grid.front()) / dx);
    k = std::clamp(k, 0.0, static_cast<double>(x_grid.size() - 1));
    return static_cast<std::size_t>(k);
}

namespace {

// Linear interpolation of a level on a uniform grid. Outside the grid the
// value is held constant, or continued with the end slope when `linear_tails`.
struct UniformGrid {
    double x_min, dx;
    std::size_t n;
    bool linear_tails = false;

    double operator()(const double* level, double x) const {
        double s = (x - x_min) / dx;
        if (s <= 0.0) return linear_tails ? level[0] + s * (level[1] - level[0]) : level[0];
        if (s >= static_cast<double>(n - 1)) {
            double over = s - static_cast<double>(n - 1);
            return linear_tails ? level[n - 1] + over * (level[n - 1] - level[n - 2]) : level[n - 1];
        }
        std::size_t j = static_cast<std::size_t>(s);
        double w = s - static_cast<double>(j);
        return level[j] + w * (level[j + 1] - level[j]);
    }
};

double time_weight(const std::vector<double>& t, double at, std::size_t& i) {
    if (at <= t.front()) {
        i = 0;
        return 0.0;
    }
    if (at >= t.back()) {
        i = t.size() - 2;
        return 1.0;
    }
    double dt = t[1] - t[0];
    i = std::min(static_cast<std::size_t>((at - t.front()) / dt), t.size() - 2);
    return (at - t[i]) / (t[i + 1] - t[i]);
}

void slopes(const double* level, std::size_t n, double dx, double* out) {
    if (n == 1) {
        out[0] = 0.0;
        return;
    }
    out[0] = (level[1] - level[0]) / dx;
    out[n - 1] = (level[n - 1] - level[n - 2]) / dx;
    for (std::size_t j = 1; j + 1 < n; ++j) out[j] = (level[j + 1] - level[j - 1]) / (2.0 * dx);
}

} // namespace

double DecouplingField::value(double t, double x) const {
    if (t_grid.size() == 1) return UniformGrid{x_grid.front(), x_grid[1] - x_grid[0], nx()}(u.data(), x);
    std::size_t i;
    double w = time_weight(t_grid, t, i);
    UniformGrid g{x_grid.front(), x_grid[1] - x_grid[0], nx()};
    double a = g(u.data() + i * nx(), x);
    double b = g(u.data() + (i + 1) * nx(), x);
    return (1.0 - w) * a + w * b;
}

double DecouplingField::slope(double t, double x) const {
    std::size_t i;
    double w = time_weight(t_grid, t, i);
    UniformGrid g{x_grid.front(), x_grid[1] - x_grid[0], nx()};
    double a = g(ux.data() + i * nx(), x);
    double b = g(ux.data() + (i + 1) * nx(), x);
    return (1.0 - w) * a + w * b;
}

void DecouplingField::write_csv(std::ostream& os) const {
    os << "t,x,u,ux\n";
    os.precision(17);
    for (std::size_t i = 0; i < nt(); ++i)
        for (std::size_t j = 0; j < nx(); ++j)
            os << t_grid[i] << ',' << x_grid[j] << ',' << U(i, j) << ',' << Ux(i, j) << '\n';
}

// ---------------------------------------------------------------------------
// Per-node fixed point

FixedPointResult solve_z(const Coefficient& sigma, double t, double x, double y, double ux, double tol,
                         int max_iter, double z_start) {
    FixedPointResult r;
    if (ux == 0.0) {
        r.converged = true;
        return r;
    }
    auto res = [&](double z) { return sigma(t, x, y, z) * ux - z; };
    double z = z_start;
    double rz = res(z);
    double z_prev = 0.0, r_prev = 0.0;
    bool have_prev = false;
    double omega = 1.0;
    for (int k = 0; k < max_iter; ++k) {
        r.iterations = k;
        if (!std::isfinite(rz)) break;
        if (std::fabs(rz) <= tol) {
            r.z = z;
            r.residual = std::fabs(rz);
            r.converged = true;
            return r;
        }
        double z_new;
        if (have_prev && rz != r_prev) {
            // Secant step on the residual, which accelerates the damped iteration.
            z_new = z - rz * (z - z_prev) / (rz - r_prev);
        } else {
            z_new = z + omega * rz;
        }
        double r_new = res(z_new);
        if (!std::isfinite(r_new) || std::fabs(r_new) > std::fabs(rz)) {
            omega *= 0.5;
            z_new = z + omega * rz;
            r_new = res(z_new);
            have_prev = false;
        } else {
            have_prev = true;
        }
        z_prev = z;
        r_prev = rz;
        z = z_new;
        rz = r_new;
    }
    r.iterations = max_iter;
    r.z = z;
    r.residual = std::fabs(rz);
    r.converged = std::isfinite(rz) && std::fabs(rz) <= tol;
    return r;
}

// ---------------------------------------------------------------------------
// Backward induction

namespace {

struct Scales {
    double diffusion = 0.0;
    double drift = 0.0;
};

Scales estimate_scales(const CoefficientModel& m, double x0, double band) {
    Scales s;
    const double T = m.horizon_T;
    const double h = 1e-4 * std::max(1.0, band);
    for (double t : {0.0, 0.5 * T, T}) {
        for (int k = 0; k <= 40; ++k) {
            double x = x0 - band + 2.0 * band * k / 40.0;
            double y = m.g(x);
            double gx = (m.g(x + h) - m.g(x - h)) / (2.0 * h);
            FixedPointResult fp = solve_z(m.sigma, t, x, y, gx, 1e-10, 100);
            double z = fp.converged ? fp.z : 0.0;
            s.diffusion = std::max(s.diffusion, std::fabs(m.sigma(t, x, y, z)));
            s.drift = std::max(s.drift, std::fabs(m.b(t, x, y, z)));
        }
    }
    return s;
}

[[noreturn]] void fail_at(ErrorKind kind, const std::string& what, double t, double x) {
    std::ostringstream os;
    os << what << " at t = " << t << ", x = " << x;
    raise(kind, os.str());
}

class BackwardSolver {
public:
    BackwardSolver(const CoefficientModel& m, const SolverOptions& o, DecouplingField& F)
        : m_(m), o_(o), F_(F), gh_(gauss_hermite(o.gh_nodes)) {
        nx_ = F.nx();
        // Continuing the end slope keeps boundary values from feeding back into
        // sigma through their own one-sided slopes.
        grid_ = UniformGrid{F.x_grid.front(), F.x_grid[1] - F.x_grid[0], nx_, true};
        dx_ = grid_.dx;
        dt_ = F.t_grid[1] - F.t_grid[0];
        sq_ = std::sqrt(dt_);
    }

    // Picard iteration on levels [i0, i1). Returns the largest observed
    // contraction factor, or a negative value when it fails to settle.
    double block(std::size_t i0, std::size_t i1, int& iterations) {
        const std::size_t L = i1 - i0;
        cur_.assign(L * nx_, 0.0);
        nxt_.assign(L * nx_, 0.0);
        const double* terminal = &F_.u[i1 * nx_];
        for (std::size_t l = 0; l < L; ++l) std::copy(terminal, terminal + nx_, &cur_[l * nx_]);
        frozen_slope_.resize(nx_);

        double prev = -1.0, rho_max = 0.0;
        block_fp_iter_ = 0;
        block_fp_res_ = 0.0;
        for (int it = 1; it <= o_.picard_max; ++it) {
            iterations = it;
            sweep(i0, i1);
            double diff = 0.0, mag = 0.0;
            for (std::size_t k = 0; k < cur_.size(); ++k) {
                diff = std::max(diff, std::fabs(nxt_[k] - cur_[k]));
                mag = std::max(mag, std::fabs(nxt_[k]));
            }
            std::swap(cur_, nxt_);
            if (it >= 2) {
                double rho = prev > 0.0 ? diff / prev : 0.0;
                if (diff > o_.picard_tol * (1.0 + mag) && rho >= o_.contraction_target) return -1.0;
                rho_max = std::max(rho_max, rho);
            }
            if (diff <= o_.picard_tol * (1.0 + mag) && it >= 2) {
                for (std::size_t l = 0; l < L; ++l)
                    std::copy(&cur_[l * nx_], &cur_[(l + 1) * nx_], &F_.u[(i0 + l) * nx_]);
                fp_iter_max_ = std::max(fp_iter_max_, block_fp_iter_);
                fp_res_max_ = std::max(fp_res_max_, block_fp_res_);
                return rho_max;
            }
            prev = diff;
        }
        return -1.0;
    }

    int fp_iterations_max() const { return fp_iter_max_; }
    double fp_residual_max() const { return fp_res_max_; }

private:
    // One Picard update of all levels in the block, from the latest level down.
    void sweep(std::size_t i0, std::size_t i1) {
        const std::size_t L = i1 - i0;
        const std::size_t Q = gh_.nodes.size();
        block_fp_iter_ = 0;
        block_fp_res_ = 0.0;
        for (std::size_t l = L; l-- > 0;) {
            const double t = F_.t_grid[i0 + l];
            const double* frozen = &cur_[l * nx_];
            const double* next = (l + 1 == L) ? &F_.u[i1 * nx_] : &nxt_[(l + 1) * nx_];
            double* out = &nxt_[l * nx_];
            slopes(frozen, nx_, dx_, frozen_slope_.data());
            for (std::size_t j = 0; j < nx_; ++j) {
                const double x = F_.x_grid[j];
                const double y = frozen[j];
                const double uxv = frozen_slope_[j];
                FixedPointResult fp = solve_z(m_.sigma, t, x, y, uxv, o_.fp_tol, o_.fp_max);
                if (!fp.converged)
                    fail_at(ErrorKind::FixedPoint, "per-node fixed point z = sigma u_x did not converge", t, x);
                block_fp_iter_ = std::max(block_fp_iter_, fp.iterations);
                block_fp_res_ = std::max(block_fp_res_, fp.residual);
                const double drift = m_.b(t, x, y, fp.z);
                const double vol = m_.sigma(t, x, y, fp.z);
                double ey = 0.0, ez = 0.0;
                for (std::size_t q = 0; q < Q; ++q) {
                    double xi = gh_.nodes[q];
                    double v = grid_(next, x + drift * dt_ + vol * sq_ * xi);
                    ey += gh_.weights[q] * v;
                    ez += gh_.weights[q] * v * xi;
                }
                ez /= sq_;
                double val = ey + m_.f(t, x, ey, ez) * dt_;
                if (!std::isfinite(val)) fail_at(ErrorKind::Contraction, "non-finite value", t, x);
                out[j] = val;
            }
        }
    }

    const CoefficientModel& m_;
    const SolverOptions& o_;
    DecouplingField& F_;
    GaussHermite gh_;
    UniformGrid grid_{};
    std::size_t nx_ = 0;
    double dx_ = 0.0, dt_ = 0.0, sq_ = 0.0;
    std::vector<double> cur_, nxt_, frozen_slope_;
    int block_fp_iter_ = 0, fp_iter_max_ = 0;
    double block_fp_res_ = 0.0, fp_res_max_ = 0.0;
};

} // namespace

DecouplingField solve_field(const CoefficientModel& m, const SolverOptions& o, const DominatingSolution* bracket) {
    const double T = m.horizon_T;
    if (!(T > 0.0)) raise(ErrorKind::Precondition, "solve_field needs a positive horizon");
    if (!(o.dt > 0.0) || !(o.dx > 0.0) || !(o.band >= 0.0))
        raise(ErrorKind::Precondition, "solve_field needs positive dt, dx and a non-negative band");

    DecouplingField F;
    F.x0 = o.x0.value_or(m.x0);
    double pad;
    if (o.pad) {
        pad = *o.pad;
    } else {
        Scales s = estimate_scales(m, F.x0, std::max(o.band, 1.0));
        pad = 6.0 * s.diffusion * std::sqrt(T) + s.drift * T;
    }
    pad = std::max(pad, 4.0 * o.dx);
    const std::size_t half = static_cast<std::size_t>(std::ceil((o.band + pad) / o.dx - 1e-9));
    const std::size_t nx = 2 * half + 1;
    F.x_grid.resize(nx);
    for (std::size_t j = 0; j < nx; ++j)
        F.x_grid[j] = F.x0 + (static_cast<double>(j) - static_cast<double>(half)) * o.dx;
    const std::size_t core = static_cast<std::size_t>(std::floor(o.band / o.dx + 1e-9));
    F.core_lo = half - core;
    F.core_hi = half + core;

    const std::size_t N = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(T / o.dt)));
    F.t_grid.resize(N + 1);
    for (std::size_t i = 0; i <= N; ++i) F.t_grid[i] = T * static_cast<double>(i) / static_cast<double>(N);
    F.u.assign((N + 1) * nx, 0.0);
    F.ux.assign((N + 1) * nx, 0.0);
    for (std::size_t j = 0; j < nx; ++j) F.u[N * nx + j] = m.g(F.x_grid[j]);

    BackwardSolver solver(m, o, F);
    const double dt = T / static_cast<double>(N);
    std::size_t len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(o.delta0 / dt)));
    std::size_t i1 = N;
    while (i1 > 0) {
        std::size_t i0 = i1 > len ? i1 - len : 0;
        int its = 0;
        double rho = solver.block(i0, i1, its);
        if (rho < 0.0) {
            if (len == 1)
                fail_at(ErrorKind::Contraction, "Picard iteration does not contract even on a single step",
                        F.t_grid[i1 - 1], F.x0);
            len = std::max<std::size_t>(1, len / 2);
            continue;
        }
        F.diag.blocks += 1;
        F.diag.picard_iterations_max = std::max(F.diag.picard_iterations_max, its);
        F.diag.contraction_max = std::max(F.diag.contraction_max, rho);
        i1 = i0;
    }
    F.diag.delta = static_cast<double>(len) * dt;
    F.diag.fp_iterations_max = solver.fp_iterations_max();
    F.diag.fp_residual_max = solver.fp_residual_max();

    for (std::size_t i = 0; i <= N; ++i) slopes(&F.u[i * nx], nx, o.dx, &F.ux[i * nx]);

    if (o.c3) {
        const double lim = *o.c3 * (1.0 + 1e-9);
        for (std::size_t i = 0; i <= N; ++i)
            for (std::size_t j = 1; j + 1 < nx; ++j)
                if (std::fabs(F.ux[i * nx + j]) > lim)
                    fail_at(ErrorKind::BandEscape, "slope leaves the declared band |u_x| <= c3", F.t_grid[i],
                            F.x_grid[j]);
    }

    if (bracket) {
        for (std::size_t i = 0; i <= N; ++i) {
            const double t = F.t_grid[i];
            const double lo = bracket->lower_at(t), hi = bracket->upper_at(t);
            for (std::size_t j = std::max<std::size_t>(F.core_lo, 1); j <= F.core_hi && j + 1 < nx; ++j) {
                double s = F.ux[i * nx + j];
                double excess = std::max(lo - s, s - hi);
                ++F.diag.bracket_checked;
                if (!(excess <= o.bracket_tol)) ++F.diag.bracket_violations;
                F.diag.bracket_excess_max = std::max(F.diag.bracket_excess_max, excess);
            }
        }
    }
    return F;
}

SolveReport make_report(DecouplingField field, const CoefficientModel& m) {
    SolveReport r;
    const double x0 = field.x0;
    r.y0 = field.value(0.0, x0);
    double ux0 = field.slope(0.0, x0);
    FixedPointResult fp = solve_z(m.sigma, 0.0, x0, r.y0, ux0);
    r.z0 = fp.z;
    r.field = std::move(field);
    return r;
}

} // namespace fbsde
