// SPDX-License-Identifier: MIT
#pragma once

#include "fbsde/model.hpp"
#include "fbsde/solver.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace fbsde {

/// Deterministic solution of the characteristic equation of a
/// constant-coefficient linear problem, with Z_hat = 0.
struct LinearSolution {
    SlopeCoefficients c;
    double h = 0.0;
    double T = 0.0;
    std::vector<double> t;      ///< uniform fine grid on [0, T]
    std::vector<double> yhat;
    std::vector<double> cum_H;  ///< int_0^t H(yhat) ds
    std::vector<double> cum_Q;  ///< int_0^t I(yhat)^2 ds

    double yhat_at(double s) const;
    double yhat0() const { return yhat.front(); }
    double H(double y) const;
    double I(double y) const;
    /// E[X_t] for X_0 = x.
    double meanX(double x, double s) const;
};

/// Integrates y' = -F(y), y(T) = h. Throws NotSolvable when the
/// constant-coefficient classifier rejects the horizon and SingularHat when
/// 1 - s3 y reaches the guard.
LinearSolution linear_oracle(const SlopeCoefficients& c, double h, double T, int grid_points = 4001);

struct LinearPath {
    std::vector<double> t, X, Y, Z, dB;
};

/// One path on `steps` uniform steps by the exponential formula.
LinearPath simulate_linear_path(const LinearSolution& s, double x, int steps, PathRng& rng);

struct MonteCarloMean {
    double mean = 0.0;
    double std_error = 0.0;
    int paths = 0;
};

/// Sample mean of X_T over independent paths.
MonteCarloMean simulate_mean_XT(const LinearSolution& s, double x, int steps, int paths, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Harnesses

struct ComparisonOptions {
    SolverOptions solver{};
    int samples = 2000;
    std::uint64_t seed = 5;
    double slack = 1e-6;
};

struct ComparisonReport {
    double max_diff = 0.0;  ///< max of u1 - u2 over the region of interest
    double min_diff = 0.0;
    double scheme_error = 0.0;
    double slack = 0.0;
    bool passed = false;
};

/// Checks u1 <= u2 for models sharing b and sigma with f1 <= f2, g1 <= g2.
/// The scheme error is the sup distance between solutions on the given grid
/// and on a grid twice as coarse. Throws PreconditionError when the ordering
/// fails on samples.
ComparisonReport comparison_check(const CoefficientModel& m1, const CoefficientModel& m2,
                                  const ComparisonOptions& opts = {});

struct StabilityOptions {
    SolverOptions solver{};
    VerifyOptions paths{1e-2, 2000, 3, std::nullopt, 0.01};
};

struct StabilityReport {
    double diff_sq = 0.0;  ///< |u_tilde(0, x0) - u(0, x0)|^2
    double rhs = 0.0;      ///< sampled right-hand side of the stability estimate
    double ratio = 0.0;    ///< diff_sq / rhs, with 0/0 read as 0
};

StabilityReport stability_check(const CoefficientModel& m, const CoefficientModel& perturbed,
                                const StabilityOptions& opts = {});

struct StabilitySweep {
    std::vector<double> scales;
    std::vector<StabilityReport> reports;
    double max_ratio = 0.0;
    double bound = 0.0;
    bool passed = false;
};

/// Runs stability_check for each perturbation scale and passes when every
/// ratio stays below `bound`.
StabilitySweep stability_sweep(const CoefficientModel& m, const std::function<CoefficientModel(double)>& perturb,
                               const std::vector<double>& scales = {1e-1, 1e-2, 1e-3}, double bound = 10.0,
                               const StabilityOptions& opts = {});

} // namespace fbsde
