#pragma once

#include <vector>

namespace crtcea {

/// Gauss-Hermite rule for the physicists' weight exp(-x^2): integrates
/// x^k exp(-x^2) exactly for k <= 2*order - 1. Nodes are symmetric about 0
/// and weights sum to sqrt(pi).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

/// Builds the rule via Golub-Welsch on the Jacobi matrix, then polishes each
/// node with Newton steps on the orthonormal Hermite recurrence and
/// symmetrizes node/weight pairs so odd moments cancel exactly.
QuadratureRule gauss_hermite(int order);

} // namespace crtcea
