#include "fbsde/quadrature.hpp"

#include "fbsde/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace fbsde {

GaussHermite gauss_hermite(int n) {
    if (n < 1) raise(ErrorKind::Precondition, "Gauss-Hermite rule needs at least one node");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        J(k, k - 1) = std::sqrt(static_cast<double>(k));
        J(k - 1, k) = J(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermite gh;
    gh.nodes.resize(n);
    gh.weights.resize(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        gh.nodes[i] = es.eigenvalues()(i);
        double v = es.eigenvectors()(0, i);
        gh.weights[i] = v * v;
        total += gh.weights[i];
    }
    // Symmetrise to remove eigen-solver noise.
    for (int i = 0; i < n / 2; ++i) {
        double x = 0.5 * (gh.nodes[n - 1 - i] - gh.nodes[i]);
        double w = 0.5 * (gh.weights[i] + gh.weights[n - 1 - i]);
        gh.nodes[i] = -x;
        gh.nodes[n - 1 - i] = x;
        gh.weights[i] = gh.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) gh.nodes[n / 2] = 0.0;
    total = 0.0;
    for (double w : gh.weights) total += w;
    for (double& w : gh.weights) w /= total;
    return gh;
}

} // namespace fbsde
