// SPDX-License-Identifier: MIT
#pragma once

#include "fbsde/dominating.hpp"
#include "fbsde/model.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

namespace fbsde {

struct SolverOptions {
    double dt = 0.01;
    double dx = 0.05;
    /// Centre of the region of interest; the model's x0 when empty.
    std::optional<double> x0;
    /// Half-width of the region of interest around x0.
    double band = 2.0;
    /// Extra width added on both sides; derived from the diffusion and drift
    /// scales (six standard deviations) when empty.
    std::optional<double> pad;
    /// Initial length of the Picard subintervals.
    double delta0 = 0.25;
    double picard_tol = 1e-10;
    int picard_max = 60;
    /// Subintervals are halved until the observed contraction is below this.
    double contraction_target = 0.5;
    double fp_tol = 1e-12;
    int fp_max = 100;
    /// Declared bound on |u_x|; BandEscape when exceeded.
    std::optional<double> c3;
    int gh_nodes = 7;
    /// Slack allowed when comparing slopes with a dominating bracket.
    double bracket_tol = 1e-2;
};

struct FieldDiagnostics {
    double delta = 0.0;            ///< final subinterval length
    int blocks = 0;
    int picard_iterations_max = 0;
    double contraction_max = 0.0;  ///< largest accepted contraction factor
    int fp_iterations_max = 0;
    double fp_residual_max = 0.0;
    std::size_t bracket_checked = 0;
    std::size_t bracket_violations = 0;
    double bracket_excess_max = 0.0;
};

/// u(t, x) on a tensor grid, with centred slopes.
struct DecouplingField {
    std::vector<double> t_grid;
    std::vector<double> x_grid;
    std::vector<double> u;   ///< row-major: u[i * nx + j] at (t_i, x_j)
    std::vector<double> ux;
    double x0 = 0.0;
    std::size_t core_lo = 0;  ///< first node of the region of interest
    std::size_t core_hi = 0;  ///< last node of the region of interest
    FieldDiagnostics diag;

    std::size_t nt() const { return t_grid.size(); }
    std::size_t nx() const { return x_grid.size(); }
    double U(std::size_t i, std::size_t j) const { return u[i * nx() + j]; }
    double Ux(std::size_t i, std::size_t j) const { return ux[i * nx() + j]; }
    std::size_t node_of(double x) const;

    /// Bilinear interpolation, constant outside the grid.
    double value(double t, double x) const;
    double slope(double t, double x) const;

    void write_csv(std::ostream& os) const;
};

/// Backward induction with Picard iteration on subintervals.
/// Throws ContractionFailure, FixedPointFailure or BandEscape.
DecouplingField solve_field(const CoefficientModel& m, const SolverOptions& opts = {},
                            const DominatingSolution* bracket = nullptr);

/// Solves z = sigma(t, x, y, z) ux. Returns false when it does not converge.
struct FixedPointResult {
    double z = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};
FixedPointResult solve_z(const Coefficient& sigma, double t, double x, double y, double ux,
                         double tol = 1e-12, int max_iter = 100, double z_start = 0.0);

// ---------------------------------------------------------------------------
// Transforms

/// Solves phi(z) = w for strictly monotone phi. Throws MonotonicityError
/// when no bracket is found.
double invert_monotone(const std::function<double(double)>& phi, double w, double guess = 0.0,
                       double tol = 1e-12);

/// Throws MonotonicityError when `phi` is not strictly monotone on `iv`,
/// judged on a deterministic grid of close pairs.
void require_strictly_monotone(const std::function<double(double)>& phi, const Interval& iv,
                               const char* what, double slope_floor = 1e-6);

/// Exchanges the forward and backward components. Needs z -> sigma and g
/// strictly monotone.
CoefficientModel reverse_roles(const CoefficientModel& m);

struct PhiTransform {
    CoefficientModel model;
    double eps = 0.0;
    double c1 = 0.0, c2 = 0.0;
    double c1_bar = 0.0, c2_bar = 0.0;
};

/// The linear change of variables (x, y) -> (2 eps x + y, eps x + y).
/// c1 bounds the z-slope of sigma from above and c2 the slope of g; both are
/// sampled from the model when not given. Throws BoundError when the
/// predicted bounds do not satisfy c1_bar c2_bar < 1.
PhiTransform phi_eps_transform(const CoefficientModel& m, double eps, std::optional<double> c1 = std::nullopt,
                               std::optional<double> c2 = std::nullopt);

double phi_c1_bar(double c1, double eps);
double phi_c2_bar(double c2, double eps);

/// Field of the original problem recovered from a solution of the
/// transformed one, on the nodes of `like`.
DecouplingField map_back_reverse(const DecouplingField& tilde, const DecouplingField& like);
DecouplingField map_back_phi(const DecouplingField& tilde, double eps, const DecouplingField& like);

// ---------------------------------------------------------------------------
// Forward verification

struct VerifyOptions {
    double dt = 1e-3;
    int paths = 10000;
    std::uint64_t seed = 1;
    std::optional<double> x0;
    double max_clamped_fraction = 0.01;
};

struct PathStats {
    int paths = 0;
    int steps = 0;
    double terminal_residual = 0.0;  ///< E|Y_T - g(X_T)|^2
    double bsde_residual = 0.0;      ///< E max_n |Y_n - u(t_n, X_n)|^2
    double mean_XT = 0.0;
    double var_XT = 0.0;
    double clamped_fraction = 0.0;
    int fp_iterations_max = 0;
    double fp_residual_max = 0.0;
};

struct SolveReport {
    DecouplingField field;
    double y0 = 0.0;
    double z0 = 0.0;
    std::optional<PathStats> path_stats;
};

/// Simulates X with Y = u(t, X) and Z = sigma u_x, evolves Y by the backward
/// equation and reports residuals. Throws BandExitError when too many paths
/// leave the grid.
PathStats forward_verify(const DecouplingField& field, const CoefficientModel& m, const VerifyOptions& opts = {});

/// u(0, x0) and z(0, x0) of a field.
SolveReport make_report(DecouplingField field, const CoefficientModel& m);

/// Deterministic per-path generator: the stream of path k depends only on
/// (seed, k).
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path);
    double normal();

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace fbsde
