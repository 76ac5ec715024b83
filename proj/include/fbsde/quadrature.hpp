// SPDX-License-Identifier: MIT
#pragma once

#include <vector>

namespace fbsde {

/// Nodes and weights for E[phi(xi)], xi ~ N(0, 1). Weights sum to one.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch construction for the standard normal weight.
GaussHermite gauss_hermite(int n);

} // namespace fbsde
