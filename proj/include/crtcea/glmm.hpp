#pragma once

#include "crtcea/cost_model.hpp"
#include "crtcea/dataset.hpp"
#include "crtcea/newton.hpp"
#include "crtcea/quadrature.hpp"

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace crtcea {

/// Covariance of the bivariate Normal cluster effects (u, w) for cost and
/// QALYs: variances sigma_u^2, sigma_w^2 and correlation rho.
struct ClusterEffectCov {
    double sigma_u_sq = 0.0;
    double sigma_w_sq = 0.0;
    double rho = 0.0;

    void validate() const; // throws unless sigma^2 >= 0 and |rho| <= 1
    Eigen::Matrix2d matrix() const;
};

/// Parameters of the per-arm substantive model: conditional mean cost
/// beta1 + u, conditional QALY mean gamma1 + alpha*c + w with variance
/// sigma_q^2, a cost distribution, and the cluster-effect covariance.
struct ArmParams {
    double beta1 = 0.0;
    double gamma1 = 0.0;
    double alpha = 0.0;
    double sigma_q_sq = 1.0;
    CostDistribution cost_dist;
    ClusterEffectCov cluster_cov;
};

struct ArmFit {
    ArmParams params;
    double mean_cost = 0.0;
    double mean_qaly = 0.0;
    Eigen::Matrix2d cov_means = Eigen::Matrix2d::Zero(); // of (mean_cost, mean_qaly)
    double loglik = 0.0;
    bool converged = false;
    double correlation_cq = 0.0; // implied individual-level cost-QALY correlation
    int iterations = 0;
    double max_abs_grad = 0.0;
};

struct FitOptions {
    int quad_order = 70;
    bool adaptive = false; // center the rule on per-cluster posterior modes
    double grad_tol = 1e-6;
    double rel_tol = 1e-10;
    int max_iter = 200;
    double hessian_step = 1e-4; // central differences, unconstrained scale
    bool lognormal_log_scale_location = false;
    /// When set, optimization runs from this single start instead of the
    /// moment-based pair.
    std::optional<ArmParams> start;
};

/// Normal log density of q given cost c, parameters and QALY cluster effect w
/// (mean gamma1 + alpha*c + w, variance sigma_q^2).
double qaly_cond_loglik(double q, double c, const ArmParams &params, double w);

/// Complete observations of one cluster.
struct ClusterObservations {
    std::vector<double> cost;
    std::vector<double> qaly;
};

/// Log marginal likelihood of one cluster: the double integral over (u, w) of
/// the product of per-row cost and conditional-QALY densities, computed by
/// tensor-product Gauss-Hermite after the standardizing Cholesky transform of
/// the cluster-effect covariance.
double cluster_marginal_loglik(const ClusterObservations &cluster, const ArmParams &params,
                               const QuadratureRule &rule);

/// Moment-based starting values: beta1 from the sample mean, (gamma1, alpha)
/// from OLS of QALY on cost, variances from one-way ANOVA decompositions,
/// rho = 0.
ArmParams moment_starting_values(const TrialDataset &d, CostKind kind,
                                 bool lognormal_log_scale_location = false);

/// Maximum-likelihood fit of the bivariate cluster-effect model for one arm
/// on complete rows. Runs Newton with step halving from two starting points
/// (moment-based and dispersion-perturbed) on the unconstrained scale and
/// keeps the higher-likelihood converged solution. cov_means comes from the
/// delta method on the inverse observed information.
ArmFit fit_arm(const TrialDataset &d, CostKind kind, const FitOptions &opts = {});

/// Total-arm marginal log likelihood and its analytic gradient on the
/// unconstrained parameter scale; exposed for gradient checks and tests.
class ArmLikelihood {
  public:
    ArmLikelihood(const TrialDataset &d, CostKind kind, const FitOptions &opts);

    static constexpr int n_params = 8;

    double loglik(const Eigen::VectorXd &theta) const;
    std::pair<double, Eigen::VectorXd> loglik_grad(const Eigen::VectorXd &theta) const;

    Eigen::VectorXd pack(const ArmParams &p) const;
    ArmParams unpack(const Eigen::VectorXd &theta) const;

    /// Refreshes adaptive centering (no-op in non-adaptive mode).
    void update_adaptation(const Eigen::VectorXd &theta);

    std::size_t n_clusters() const { return stats_.size(); }

  private:
    struct ClusterStats {
        int n = 0;
        double sum_c = 0, sum_c2 = 0;
        double sum_q = 0, sum_q2 = 0, sum_qc = 0;
        double sum_logc = 0, sum_logc2 = 0;
    };
    struct Adaptation {
        double z1 = 0, z2 = 0;          // mode of the standardized integrand
        double c11 = 1, c21 = 0, c22 = 1; // lower Cholesky of the curvature inverse
        double log_det = 0;
    };

    double cluster_loglik(const ClusterStats &s, const Adaptation &a, const ArmParams &p,
                          double *score8) const;

    CostKind kind_;
    bool literal_lognormal_ = false;
    bool adaptive_ = false;
    QuadratureRule rule_;
    std::vector<ClusterStats> stats_;
    std::vector<Adaptation> adapt_;
    mutable std::vector<double> buf_; // K*K scratch, single-threaded use
};

} // namespace crtcea
