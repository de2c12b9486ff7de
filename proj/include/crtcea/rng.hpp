#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace crtcea {

/// Derives an independent stream seed from a master seed. SplitMix64 mix of
/// (master, stream); used to give arms, replicates and stages their own
/// deterministic streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded random source. All draws in the project flow through this class so
/// that a run is reproducible from a single seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Gamma(shape, scale=1).
    double gamma(double shape) {
        return std::gamma_distribution<double>(shape, 1.0)(engine_);
    }

    double chi_squared(double df) { return 2.0 * gamma(df / 2.0); }

    bool bernoulli(double p) { return uniform() < p; }

    long uniform_int(long lo, long hi) {
        return std::uniform_int_distribution<long>(lo, hi)(engine_);
    }

    /// Draw from N(mean, cov) via Cholesky; cov must be positive semi-definite.
    Eigen::VectorXd mvn(const Eigen::VectorXd &mean, const Eigen::MatrixXd &cov);

    /// Draw Sigma ~ InverseWishart(scale, df) via a Bartlett-decomposed
    /// Wishart draw on the inverted scale. df must exceed dim - 1.
    Eigen::MatrixXd inverse_wishart(const Eigen::MatrixXd &scale, double df);

    std::mt19937_64 &engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

} // namespace crtcea
