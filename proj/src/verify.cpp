#include "fbsde/error.hpp"
#include "fbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace fbsde {

PathRng::PathRng(std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x9e3779b9u};
    gen_.seed(seq);
}

double PathRng::normal() { return normal_(gen_); }

namespace {

struct PathResult {
    double terminal_sq = 0.0;
    double bsde_sq = 0.0;
    double XT = 0.0;
    bool clamped = false;
    int fp_iterations = 0;
    double fp_residual = 0.0;
};

PathResult run_path(const DecouplingField& F, const CoefficientModel& m, double x0, double dt, int steps,
                    std::uint64_t seed, std::uint64_t k) {
    PathRng rng(seed, k);
    PathResult r;
    const double x_lo = F.x_grid.front(), x_hi = F.x_grid.back();
    const double sq = std::sqrt(dt);
    double X = x0;
    double Y = F.value(0.0, X);
    for (int n = 0; n < steps; ++n) {
        const double t = n * dt;
        const double y = F.value(t, X);
        const double ux = F.slope(t, X);
        FixedPointResult fp = solve_z(m.sigma, t, X, y, ux, 1e-12, 200);
        r.fp_iterations = std::max(r.fp_iterations, fp.iterations);
        r.fp_residual = std::max(r.fp_residual, fp.residual);
        const double z = fp.z;
        const double dW = sq * rng.normal();
        Y += -m.f(t, X, y, z) * dt + z * dW;
        X += m.b(t, X, y, z) * dt + m.sigma(t, X, y, z) * dW;
        if (X < x_lo || X > x_hi) {
            X = std::clamp(X, x_lo, x_hi);
            r.clamped = true;
        }
        double e = Y - F.value(t + dt, X);
        r.bsde_sq = std::max(r.bsde_sq, e * e);
    }
    double e = Y - m.g(X);
    r.terminal_sq = e * e;
    r.XT = X;
    return r;
}

} // namespace

PathStats forward_verify(const DecouplingField& field, const CoefficientModel& m, const VerifyOptions& o) {
    if (o.paths < 1 || !(o.dt > 0.0)) raise(ErrorKind::Precondition, "forward_verify needs paths >= 1 and dt > 0");
    const double T = field.t_grid.back();
    const int steps = std::max(1, static_cast<int>(std::llround(T / o.dt)));
    const double dt = T / steps;
    const double x0 = o.x0.value_or(field.x0);

    std::vector<PathResult> res(static_cast<std::size_t>(o.paths));
    unsigned workers = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
    workers = std::min<unsigned>(workers, static_cast<unsigned>(o.paths));
    auto run = [&](unsigned w) {
        for (std::size_t k = w; k < res.size(); k += workers) res[k] = run_path(field, m, x0, dt, steps, o.seed, k);
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& th : pool) th.join();
    }

    // Reduction in path order keeps results independent of the schedule.
    PathStats s;
    s.paths = o.paths;
    s.steps = steps;
    int clamped = 0;
    double sx = 0.0, sxx = 0.0;
    for (const PathResult& r : res) {
        s.terminal_residual += r.terminal_sq;
        s.bsde_residual += r.bsde_sq;
        sx += r.XT;
        sxx += r.XT * r.XT;
        clamped += r.clamped ? 1 : 0;
        s.fp_iterations_max = std::max(s.fp_iterations_max, r.fp_iterations);
        s.fp_residual_max = std::max(s.fp_residual_max, r.fp_residual);
    }
    const double n = static_cast<double>(o.paths);
    s.terminal_residual /= n;
    s.bsde_residual /= n;
    s.mean_XT = sx / n;
    s.var_XT = o.paths > 1 ? (sxx - n * s.mean_XT * s.mean_XT) / (n - 1.0) : 0.0;
    s.clamped_fraction = clamped / n;
    if (s.clamped_fraction > o.max_clamped_fraction) {
        std::ostringstream os;
        os << s.clamped_fraction * 100.0 << "% of paths left the grid [" << field.x_grid.front() << ", "
           << field.x_grid.back() << "]";
        raise(ErrorKind::BandExit, os.str());
    }
    return s;
}

} // namespace fbsde
