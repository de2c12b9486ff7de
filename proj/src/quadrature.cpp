#include "crtcea/quadrature.hpp"
#include "crtcea/errors.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace crtcea {

namespace {

// Orthonormal Hermite polynomials w.r.t. exp(-x^2):
//   p_0 = pi^{-1/4},  sqrt((k+1)/2) p_{k+1} = x p_k - sqrt(k/2) p_{k-1}
// Returns p_n(x) and fills sum_sq = sum_{k<n} p_k(x)^2 (the weight
// denominator) and deriv = p_n'(x) = sqrt(2n) p_{n-1}(x).
long double hermite_eval(int n, long double x, long double &sum_sq, long double &deriv) {
    const long double pi = 3.14159265358979323846264338327950288L;
    long double pkm1 = 0.0L;
    long double pk = 1.0L / std::pow(pi, 0.25L);
    sum_sq = 0.0L;
    for (int k = 0; k < n; ++k) {
        sum_sq += pk * pk;
        long double pkp1 =
            (x * pk - std::sqrt(k / 2.0L) * pkm1) / std::sqrt((k + 1) / 2.0L);
        pkm1 = pk;
        pk = pkp1;
    }
    deriv = std::sqrt(2.0L * n) * pkm1;
    return pk;
}

} // namespace

QuadratureRule gauss_hermite(int order) {
    if (order < 1 || order > 200)
        throw InputError("gauss_hermite: order must be in [1, 200], got " + std::to_string(order));

    const double sqrt_pi = std::sqrt(3.14159265358979323846264338327950288);

    QuadratureRule rule;
    rule.order = order;
    if (order == 1) {
        rule.nodes = {0.0};
        rule.weights = {sqrt_pi};
        return rule;
    }

    // Golub-Welsch: eigenvalues of the symmetric tridiagonal Jacobi matrix
    // with off-diagonals sqrt(k/2) are the nodes.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    if (es.info() != Eigen::Success)
        throw NumericError("gauss_hermite: Jacobi eigendecomposition failed");

    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        long double x = es.eigenvalues()(i);
        long double sum_sq = 0.0L, deriv = 0.0L;
        for (int it = 0; it < 4; ++it) {
            long double p = hermite_eval(order, x, sum_sq, deriv);
            if (deriv == 0.0L) break;
            long double step = p / deriv;
            x -= step;
            if (std::fabs(step) < 1e-18L * (1.0L + std::fabs(x))) {
                hermite_eval(order, x, sum_sq, deriv);
                break;
            }
        }
        hermite_eval(order, x, sum_sq, deriv);
        rule.nodes[i] = static_cast<double>(x);
        rule.weights[i] = static_cast<double>(1.0L / sum_sq);
    }

    // Symmetrize: average mirrored pairs so that w_i(x_i^k) + w_i(-x_i)^k
    // cancels exactly for odd k, and pin the middle node of odd rules at 0.
    for (int i = 0, j = order - 1; i < j; ++i, --j) {
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;

    return rule;
}

} // namespace crtcea
