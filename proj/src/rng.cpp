#include "crtcea/rng.hpp"
#include "crtcea/errors.hpp"

namespace crtcea {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // SplitMix64 applied to master + odd multiple of the stream index.
    std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

Eigen::VectorXd Rng::mvn(const Eigen::VectorXd &mean, const Eigen::MatrixXd &cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    Eigen::MatrixXd lower;
    if (llt.info() == Eigen::Success) {
        lower = llt.matrixL();
    } else {
        // Semi-definite covariances occur legitimately (zero variance
        // components); fall back to an eigen square root.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        if (es.info() != Eigen::Success)
            throw NumericError("mvn: covariance decomposition failed");
        Eigen::VectorXd vals = es.eigenvalues();
        const double floor = -1e-10 * std::max(1.0, vals.cwiseAbs().maxCoeff());
        for (int i = 0; i < vals.size(); ++i) {
            if (vals[i] < floor)
                throw NumericError("mvn: covariance is not positive semi-definite");
            vals[i] = std::sqrt(std::max(vals[i], 0.0));
        }
        lower = es.eigenvectors() * vals.asDiagonal();
    }
    Eigen::VectorXd z(mean.size());
    for (int i = 0; i < z.size(); ++i) z[i] = normal();
    return mean + lower * z;
}

Eigen::MatrixXd Rng::inverse_wishart(const Eigen::MatrixXd &scale, double df) {
    const int d = static_cast<int>(scale.rows());
    if (df <= d - 1)
        throw NumericError("inverse_wishart: df must exceed dim - 1");
    Eigen::LLT<Eigen::MatrixXd> llt(scale.inverse());
    if (llt.info() != Eigen::Success)
        throw NumericError("inverse_wishart: scale matrix is not positive definite");
    Eigen::MatrixXd l = llt.matrixL();

    // Bartlett: W = (L A)(L A)^T ~ Wishart(scale^{-1}, df)
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        a(i, i) = std::sqrt(chi_squared(df - i));
        for (int j = 0; j < i; ++j) a(i, j) = normal();
    }
    Eigen::MatrixXd la = l * a;
    Eigen::MatrixXd w = la * la.transpose();
    Eigen::LLT<Eigen::MatrixXd> wllt(w);
    if (wllt.info() != Eigen::Success)
        throw NumericError("inverse_wishart: degenerate Wishart draw");
    Eigen::MatrixXd sigma = wllt.solve(Eigen::MatrixXd::Identity(d, d));
    return 0.5 * (sigma + sigma.transpose());
}

} // namespace crtcea
