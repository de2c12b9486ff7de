#include "crtcea/glmm.hpp"
#include "crtcea/errors.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace crtcea {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-node evaluation of the cost product over one cluster's rows, as a
// function of mu = beta1 + u, reduced to sufficient statistics. d2_mu is only
// needed for adaptive centering.
struct CostTerms {
    double log_a = kNegInf;
    double d_mu = 0.0;
    double d2_mu = 0.0;
    double d_tdisp = 0.0; // w.r.t. log(dispersion)
};

} // namespace

void ClusterEffectCov::validate() const {
    if (!(sigma_u_sq >= 0.0) || !(sigma_w_sq >= 0.0))
        throw NumericError("cluster-effect variances must be non-negative");
    if (!(std::abs(rho) <= 1.0))
        throw NumericError("cluster-effect correlation must lie in [-1, 1]");
}

Eigen::Matrix2d ClusterEffectCov::matrix() const {
    Eigen::Matrix2d m;
    const double cov = rho * std::sqrt(sigma_u_sq * sigma_w_sq);
    m << sigma_u_sq, cov, cov, sigma_w_sq;
    return m;
}

double qaly_cond_loglik(double q, double c, const ArmParams &params, double w) {
    if (!(params.sigma_q_sq > 0.0))
        throw NumericError("qaly_cond_loglik: sigma_q_sq must be positive");
    const double r = q - (params.gamma1 + params.alpha * c + w);
    return -0.5 * (kLog2Pi + std::log(params.sigma_q_sq)) - r * r / (2.0 * params.sigma_q_sq);
}

// ---------------------------------------------------------------------------
// ArmLikelihood
// ---------------------------------------------------------------------------

namespace {

struct ClusterStatsData {
    int n = 0;
    double sum_c = 0, sum_c2 = 0;
    double sum_q = 0, sum_q2 = 0, sum_qc = 0;
    double sum_logc = 0, sum_logc2 = 0;
};

CostTerms cost_terms(const ClusterStatsData &s, double mu, CostKind kind, double disp,
                     bool literal_lognormal, bool derivs) {
    CostTerms t;
    switch (kind) {
    case CostKind::normal: {
        const double var = disp;
        const double dev = s.sum_c2 - 2.0 * mu * s.sum_c + s.n * mu * mu;
        t.log_a = -0.5 * s.n * (kLog2Pi + std::log(var)) - dev / (2.0 * var);
        if (derivs) {
            t.d_mu = (s.sum_c - s.n * mu) / var;
            t.d2_mu = -s.n / var;
            t.d_tdisp = -0.5 * s.n + dev / (2.0 * var);
        }
        return t;
    }
    case CostKind::gamma: {
        if (!(mu > 0.0)) return t; // node outside the model's domain
        const double eta = disp;
        const double log_mu = std::log(mu);
        t.log_a = s.n * (eta * std::log(eta) - std::lgamma(eta)) + (eta - 1.0) * s.sum_logc -
                  s.n * eta * log_mu - eta * s.sum_c / mu;
        if (derivs) {
            t.d_mu = (eta / mu) * (s.sum_c / mu - s.n);
            t.d2_mu = eta * (s.n / (mu * mu) - 2.0 * s.sum_c / (mu * mu * mu));
            t.d_tdisp = eta * (s.n * std::log(eta) + s.n - s.n * log_mu - s.sum_c / mu +
                               s.sum_logc - s.n * boost::math::digamma(eta));
        }
        return t;
    }
    case CostKind::lognormal: {
        if (!(mu > 0.0)) return t;
        const double v = std::log1p(disp);
        const double m = literal_lognormal ? mu : std::log(mu) - 0.5 * v;
        const double dev = s.sum_logc2 - 2.0 * m * s.sum_logc + s.n * m * m;
        t.log_a = -s.sum_logc - 0.5 * s.n * (kLog2Pi + std::log(v)) - dev / (2.0 * v);
        if (derivs) {
            const double r1 = s.sum_logc - s.n * m; // sum of log-scale residuals
            const double dm_dmu = literal_lognormal ? 1.0 : 1.0 / mu;
            t.d_mu = (r1 / v) * dm_dmu;
            t.d2_mu = literal_lognormal ? -s.n / v : -(s.n + r1) / (v * mu * mu);
            const double dm_dv = literal_lognormal ? 0.0 : -0.5;
            const double d_v = -0.5 * s.n / v + dev / (2.0 * v * v) + (r1 / v) * dm_dv;
            t.d_tdisp = d_v * disp / (1.0 + disp);
        }
        return t;
    }
    }
    throw NumericError("cost_terms: unreachable");
}

struct AdaptationData {
    double z1 = 0, z2 = 0;
    double c11 = 1, c21 = 0, c22 = 1;
    double log_det = 0;
};

// Shared evaluator: log marginal likelihood of one cluster by tensor-product
// Gauss-Hermite on the standardized scale, optionally recentered by `a`, and
// optionally accumulating the score w.r.t. the 8 unconstrained parameters
// (beta1, gamma1, alpha, log sq, log disp, log su, log sw, atanh rho).
double cluster_eval(const ClusterStatsData &s, const AdaptationData &a, const ArmParams &p,
                    const QuadratureRule &rule, bool literal_lognormal, std::vector<double> &buf,
                    double *score) {
    const int k = rule.order;
    const double sigma_u = std::sqrt(p.cluster_cov.sigma_u_sq);
    const double sigma_w = std::sqrt(p.cluster_cov.sigma_w_sq);
    const double rho = p.cluster_cov.rho;
    const double srho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double sq = p.sigma_q_sq;

    // QALY sufficient statistics at the current (gamma1, alpha).
    const double s1 = s.sum_q - s.n * p.gamma1 - p.alpha * s.sum_c;
    const double s2 = s.sum_q2 + s.n * p.gamma1 * p.gamma1 + p.alpha * p.alpha * s.sum_c2 -
                      2.0 * p.gamma1 * s.sum_q - 2.0 * p.alpha * s.sum_qc +
                      2.0 * p.gamma1 * p.alpha * s.sum_c;
    const double t1 = s.sum_qc - p.gamma1 * s.sum_c - p.alpha * s.sum_c2;
    const double qconst = -0.5 * s.n * (kLog2Pi + std::log(sq));

    const bool want_score = score != nullptr;

    // Per-node cost terms (z1, u and the cost product depend on k only).
    std::vector<double> z1(k), ek(k), dmu(k), dtd(k), uk(k);
    std::vector<double> logw(k);
    bool any_valid = false;
    for (int i = 0; i < k; ++i) {
        logw[i] = std::log(rule.weights[i]);
        const double x = rule.nodes[i];
        z1[i] = a.z1 + kSqrt2 * a.c11 * x;
        uk[i] = sigma_u * z1[i];
        CostTerms ct = cost_terms(s, p.beta1 + uk[i], p.cost_dist.kind, p.cost_dist.dispersion,
                                  literal_lognormal, want_score);
        ek[i] = logw[i] + x * x - 0.5 * z1[i] * z1[i] + ct.log_a;
        dmu[i] = ct.d_mu;
        dtd[i] = ct.d_tdisp;
        any_valid = any_valid || std::isfinite(ct.log_a);
    }
    if (!any_valid) return kNegInf;

    buf.resize(static_cast<std::size_t>(k) * k);
    double max_t = kNegInf;
    for (int i = 0; i < k; ++i) {
        double *row = buf.data() + static_cast<std::size_t>(i) * k;
        if (!std::isfinite(ek[i])) {
            for (int j = 0; j < k; ++j) row[j] = kNegInf;
            continue;
        }
        const double base2 = a.z2 + kSqrt2 * a.c21 * rule.nodes[i];
        const double wk1 = sigma_w * rho * z1[i];
        for (int j = 0; j < k; ++j) {
            const double xj = rule.nodes[j];
            const double z2 = base2 + kSqrt2 * a.c22 * xj;
            const double w = wk1 + sigma_w * srho * z2;
            const double qdev = s2 - 2.0 * w * s1 + s.n * w * w;
            const double t = ek[i] + logw[j] + xj * xj - 0.5 * z2 * z2 + qconst -
                             qdev / (2.0 * sq);
            row[j] = t;
            if (t > max_t) max_t = t;
        }
    }
    if (!std::isfinite(max_t)) return kNegInf;

    double total = 0.0;
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (int i = 0; i < k; ++i) {
        const double *row = buf.data() + static_cast<std::size_t>(i) * k;
        if (!std::isfinite(ek[i])) continue;
        const double base2 = a.z2 + kSqrt2 * a.c21 * rule.nodes[i];
        double row_sum = 0.0;
        for (int j = 0; j < k; ++j) {
            const double e = std::exp(row[j] - max_t);
            if (e == 0.0) continue;
            row_sum += e;
            if (want_score) {
                const double xj = rule.nodes[j];
                const double z2 = base2 + kSqrt2 * a.c22 * xj;
                const double w = sigma_w * (rho * z1[i] + srho * z2);
                const double db_dw = (s1 - s.n * w) / sq;
                const double qdev = s2 - 2.0 * w * s1 + s.n * w * w;
                acc[1] += e * db_dw;                                  // gamma1
                acc[2] += e * (t1 - w * s.sum_c) / sq;                // alpha
                acc[3] += e * (-0.5 * s.n + qdev / (2.0 * sq));       // log sigma_q_sq
                acc[6] += e * db_dw * 0.5 * w;                        // log sigma_w_sq
                acc[7] += e * db_dw * sigma_w * (z1[i] * srho * srho - rho * srho * z2);
            }
        }
        total += row_sum;
        if (want_score) {
            acc[0] += row_sum * dmu[i];            // beta1
            acc[4] += row_sum * dtd[i];            // log dispersion
            acc[5] += row_sum * dmu[i] * 0.5 * uk[i]; // log sigma_u_sq
        }
    }
    if (!(total > 0.0)) return kNegInf;

    if (want_score)
        for (int j = 0; j < 8; ++j) score[j] += acc[j] / total;

    return std::log(2.0) + a.log_det - kLog2Pi + max_t + std::log(total);
}

// Locates the mode of the standardized integrand and the Cholesky factor of
// the inverse curvature for adaptive recentering. Falls back to the identity
// transform when the search fails.
AdaptationData adapt_cluster(const ClusterStatsData &s, const ArmParams &p,
                             bool literal_lognormal) {
    AdaptationData a;
    const double sigma_u = std::sqrt(p.cluster_cov.sigma_u_sq);
    const double sigma_w = std::sqrt(p.cluster_cov.sigma_w_sq);
    const double rho = p.cluster_cov.rho;
    const double srho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double sq = p.sigma_q_sq;

    const double s1 = s.sum_q - s.n * p.gamma1 - p.alpha * s.sum_c;
    const double s2 = s.sum_q2 + s.n * p.gamma1 * p.gamma1 + p.alpha * p.alpha * s.sum_c2 -
                      2.0 * p.gamma1 * s.sum_q - 2.0 * p.alpha * s.sum_qc +
                      2.0 * p.gamma1 * p.alpha * s.sum_c;

    auto objective = [&](double z1, double z2, double *grad, double *hess) -> double {
        CostTerms ct = cost_terms(s, p.beta1 + sigma_u * z1, p.cost_dist.kind,
                                  p.cost_dist.dispersion, literal_lognormal, true);
        if (!std::isfinite(ct.log_a)) return kNegInf;
        const double w = sigma_w * (rho * z1 + srho * z2);
        const double qdev = s2 - 2.0 * w * s1 + s.n * w * w;
        const double h = ct.log_a - qdev / (2.0 * sq) - 0.5 * (z1 * z1 + z2 * z2);
        if (grad) {
            const double db_dw = (s1 - s.n * w) / sq;
            grad[0] = ct.d_mu * sigma_u + db_dw * sigma_w * rho - z1;
            grad[1] = db_dw * sigma_w * srho - z2;
            const double d2b = -s.n / sq;
            hess[0] = ct.d2_mu * sigma_u * sigma_u + d2b * sigma_w * rho * sigma_w * rho - 1.0;
            hess[1] = d2b * sigma_w * rho * sigma_w * srho;
            hess[2] = d2b * sigma_w * srho * sigma_w * srho - 1.0;
        }
        return h;
    };

    double z1 = 0.0, z2 = 0.0;
    double grad[2], hess [3];
    double f = objective(z1, z2, grad, hess);
    if (!std::isfinite(f)) return a;
    for (int it = 0; it < 25; ++it) {
        // Newton step on the 2x2 system.
        const double det = hess[0] * hess[2] - hess[1] * hess[1];
        double d1, d2;
        if (det > 0.0 && hess[0] < 0.0) { // negative definite
            d1 = -(hess[2] * grad[0] - hess[1] * grad[1]) / det;
            d2 = -(-hess[1] * grad[0] + hess[0] * grad[1]) / det;
        } else {
            d1 = grad[0];
            d2 = grad[1];
        }
        double scale = 1.0;
        bool moved = false;
        for (int h = 0; h < 20; ++h, scale *= 0.5) {
            const double f_new = objective(z1 + scale * d1, z2 + scale * d2, nullptr, nullptr);
            if (std::isfinite(f_new) && f_new >= f) {
                z1 += scale * d1;
                z2 += scale * d2;
                f = f_new;
                moved = true;
                break;
            }
        }
        if (!moved) break;
        f = objective(z1, z2, grad, hess);
        if (std::abs(grad[0]) < 1e-9 && std::abs(grad[1]) < 1e-9) break;
    }

    // Curvature: P = -H must be positive definite; C = chol(P^{-1}) (lower).
    const double p11 = -hess[0], p12 = -hess[1], p22 = -hess[2];
    const double det = p11 * p22 - p12 * p12;
    if (!(det > 0.0) || !(p11 > 0.0)) return a;
    const double i11 = p22 / det, i12 = -p12 / det, i22 = p11 / det;
    const double c11 = std::sqrt(i11);
    const double c21 = i12 / c11;
    const double c22sq = i22 - c21 * c21;
    if (!(c22sq > 0.0)) return a;
    a.z1 = z1;
    a.z2 = z2;
    a.c11 = c11;
    a.c21 = c21;
    a.c22 = std::sqrt(c22sq);
    a.log_det = std::log(a.c11 * a.c22);
    return a;
}

ClusterStatsData stats_from_rows(const std::vector<double> &cost, const std::vector<double> &qaly,
                                 bool need_logs) {
    ClusterStatsData s;
    s.n = static_cast<int>(cost.size());
    for (std::size_t j = 0; j < cost.size(); ++j) {
        const double c = cost[j], q = qaly[j];
        s.sum_c += c;
        s.sum_c2 += c * c;
        s.sum_q += q;
        s.sum_q2 += q * q;
        s.sum_qc += q * c;
        if (need_logs) {
            const double lc = std::log(c);
            s.sum_logc += lc;
            s.sum_logc2 += lc * lc;
        }
    }
    return s;
}

void validate_arm_data(const TrialDataset &d, CostKind kind) {
    if (d.n_rows() < 2) throw InputError("fit requires at least 2 rows");
    if (!d.complete())
        throw InputError("fit requires complete rows (impute or drop incomplete rows first)");
    std::set<int> clusters;
    for (std::size_t i = 0; i < d.n_rows(); ++i) clusters.insert(d.cluster_index(i));
    if (clusters.size() < 2)
        throw InputError("fit requires at least 2 clusters; level-2 variance is unidentifiable "
                         "from a single cluster");
    if (kind != CostKind::normal) {
        for (std::size_t i = 0; i < d.n_rows(); ++i)
            if (!(d.cost(i) > 0.0))
                throw InputError("lognormal/gamma cost models require strictly positive costs "
                                 "(apply the positive-cost filter)");
    }
}

} // namespace

ArmLikelihood::ArmLikelihood(const TrialDataset &d, CostKind kind, const FitOptions &opts)
    : kind_(kind), literal_lognormal_(opts.lognormal_log_scale_location),
      adaptive_(opts.adaptive), rule_(gauss_hermite(opts.quad_order)) {
    validate_arm_data(d, kind);
    const bool need_logs = kind != CostKind::normal;

    std::vector<std::vector<double>> cost(d.n_clusters()), qaly(d.n_clusters());
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const auto c = static_cast<std::size_t>(d.cluster_index(i));
        cost[c].push_back(d.cost(i));
        qaly[c].push_back(d.qaly(i));
    }
    for (std::size_t c = 0; c < d.n_clusters(); ++c) {
        if (cost[c].empty()) continue;
        const auto s = stats_from_rows(cost[c], qaly[c], need_logs);
        stats_.push_back({s.n, s.sum_c, s.sum_c2, s.sum_q, s.sum_q2, s.sum_qc, s.sum_logc,
                          s.sum_logc2});
    }
    adapt_.assign(stats_.size(), {});
}

Eigen::VectorXd ArmLikelihood::pack(const ArmParams &p) const {
    auto safe_log = [](double v) { return std::log(std::max(v, 1e-300)); };
    Eigen::VectorXd theta(n_params);
    theta[0] = p.beta1;
    theta[1] = p.gamma1;
    theta[2] = p.alpha;
    theta[3] = safe_log(p.sigma_q_sq);
    theta[4] = safe_log(p.cost_dist.dispersion);
    theta[5] = safe_log(p.cluster_cov.sigma_u_sq);
    theta[6] = safe_log(p.cluster_cov.sigma_w_sq);
    theta[7] = std::atanh(std::clamp(p.cluster_cov.rho, -1.0 + 1e-12, 1.0 - 1e-12));
    return theta;
}

ArmParams ArmLikelihood::unpack(const Eigen::VectorXd &theta) const {
    ArmParams p;
    p.beta1 = theta[0];
    p.gamma1 = theta[1];
    p.alpha = theta[2];
    p.sigma_q_sq = std::exp(theta[3]);
    p.cost_dist.kind = kind_;
    p.cost_dist.dispersion = std::exp(theta[4]);
    p.cost_dist.lognormal_log_scale_location = literal_lognormal_;
    p.cluster_cov.sigma_u_sq = std::exp(theta[5]);
    p.cluster_cov.sigma_w_sq = std::exp(theta[6]);
    p.cluster_cov.rho = std::tanh(theta[7]);
    return p;
}

void ArmLikelihood::update_adaptation(const Eigen::VectorXd &theta) {
    if (!adaptive_) return;
    const ArmParams p = unpack(theta);
    for (std::size_t c = 0; c < stats_.size(); ++c) {
        const auto &s = stats_[c];
        const ClusterStatsData sd{s.n,      s.sum_c,  s.sum_c2,   s.sum_q,
                                  s.sum_q2, s.sum_qc, s.sum_logc, s.sum_logc2};
        const auto a = adapt_cluster(sd, p, literal_lognormal_);
        adapt_[c] = {a.z1, a.z2, a.c11, a.c21, a.c22, a.log_det};
    }
}

double ArmLikelihood::cluster_loglik(const ClusterStats &s, const Adaptation &a,
                                     const ArmParams &p, double *score8) const {
    const ClusterStatsData sd{s.n,     s.sum_c,    s.sum_c2,  s.sum_q,
                              s.sum_q2, s.sum_qc,   s.sum_logc, s.sum_logc2};
    const AdaptationData ad{a.z1, a.z2, a.c11, a.c21, a.c22, a.log_det};
    return cluster_eval(sd, ad, p, rule_, literal_lognormal_, buf_, score8);
}

double ArmLikelihood::loglik(const Eigen::VectorXd &theta) const {
    const ArmParams p = unpack(theta);
    double total = 0.0;
    for (std::size_t c = 0; c < stats_.size(); ++c) {
        const double ll = cluster_loglik(stats_[c], adapt_[c], p, nullptr);
        if (!std::isfinite(ll)) return kNegInf;
        total += ll;
    }
    return total;
}

std::pair<double, Eigen::VectorXd> ArmLikelihood::loglik_grad(const Eigen::VectorXd &theta) const {
    const ArmParams p = unpack(theta);
    double total = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params);
    for (std::size_t c = 0; c < stats_.size(); ++c) {
        const double ll = cluster_loglik(stats_[c], adapt_[c], p, grad.data());
        if (!std::isfinite(ll)) return {kNegInf, Eigen::VectorXd::Zero(n_params)};
        total += ll;
    }
    return {total, grad};
}

double cluster_marginal_loglik(const ClusterObservations &cluster, const ArmParams &params,
                               const QuadratureRule &rule) {
    if (cluster.cost.empty() || cluster.cost.size() != cluster.qaly.size())
        throw InputError("cluster_marginal_loglik: cluster must be non-empty with paired rows");
    for (std::size_t j = 0; j < cluster.cost.size(); ++j)
        if (std::isnan(cluster.cost[j]) || std::isnan(cluster.qaly[j]))
            throw InputError("cluster_marginal_loglik: rows must be complete");
    params.cluster_cov.validate();
    if (!(params.sigma_q_sq > 0.0))
        throw NumericError("cluster_marginal_loglik: sigma_q_sq must be positive");
    if (!(params.cost_dist.dispersion > 0.0))
        throw NumericError("cluster_marginal_loglik: dispersion must be positive");

    const bool need_logs = params.cost_dist.kind != CostKind::normal;
    if (need_logs)
        for (double c : cluster.cost)
            if (!(c > 0.0))
                throw InputError("cluster_marginal_loglik: lognormal/gamma require positive costs");

    const auto s = stats_from_rows(cluster.cost, cluster.qaly, need_logs);
    std::vector<double> buf;
    return cluster_eval(s, AdaptationData{}, params, rule,
                        params.cost_dist.lognormal_log_scale_location, buf, nullptr);
}

// ---------------------------------------------------------------------------
// Starting values and fitting
// ---------------------------------------------------------------------------

namespace {

struct Anova {
    double within = 0.0;  // mean square within clusters
    double level2 = 0.0;  // moment estimate of the cluster-level variance
};

Anova anova_decomposition(const std::vector<double> &values, const std::vector<int> &cluster,
                          int n_clusters) {
    const double n = static_cast<double>(values.size());
    std::vector<double> sums(n_clusters, 0.0);
    std::vector<int> counts(n_clusters, 0);
    double grand = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sums[cluster[i]] += values[i];
        counts[cluster[i]] += 1;
        grand += values[i];
    }
    grand /= n;

    int k = 0;
    double ssw = 0.0, ssb = 0.0, sum_nsq = 0.0;
    for (int c = 0; c < n_clusters; ++c) {
        if (counts[c] == 0) continue;
        ++k;
        const double mean_c = sums[c] / counts[c];
        ssb += counts[c] * (mean_c - grand) * (mean_c - grand);
        sum_nsq += static_cast<double>(counts[c]) * counts[c];
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double mean_c = sums[cluster[i]] / counts[cluster[i]];
        ssw += (values[i] - mean_c) * (values[i] - mean_c);
    }

    Anova a;
    double total_var = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        total_var += (values[i] - grand) * (values[i] - grand);
    total_var /= std::max(1.0, n - 1.0);

    a.within = (values.size() > static_cast<std::size_t>(k))
                   ? ssw / (n - k)
                   : total_var; // one row per cluster: no within information
    const double msb = (k > 1) ? ssb / (k - 1) : 0.0;
    const double n_bar = (k > 1) ? (n - sum_nsq / n) / (k - 1) : 1.0;
    a.level2 = (n_bar > 0.0) ? (msb - a.within) / n_bar : 0.0;

    const double floor = std::max(1e-12, 1e-8 * total_var);
    a.within = std::max(a.within, floor);
    a.level2 = std::max(a.level2, floor);
    return a;
}

} // namespace

ArmParams moment_starting_values(const TrialDataset &d, CostKind kind,
                                 bool lognormal_log_scale_location) {
    validate_arm_data(d, kind);
    const std::size_t n = d.n_rows();
    std::vector<double> cost(n), qaly(n);
    std::vector<int> cluster(n);
    for (std::size_t i = 0; i < n; ++i) {
        cost[i] = d.cost(i);
        qaly[i] = d.qaly(i);
        cluster[i] = d.cluster_index(i);
    }

    ArmParams p;
    double mean_c = 0.0, mean_q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_c += cost[i];
        mean_q += qaly[i];
    }
    mean_c /= static_cast<double>(n);
    mean_q /= static_cast<double>(n);

    double var_c = 0.0, cov_cq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var_c += (cost[i] - mean_c) * (cost[i] - mean_c);
        cov_cq += (cost[i] - mean_c) * (qaly[i] - mean_q);
    }
    var_c /= static_cast<double>(n - 1);
    cov_cq /= static_cast<double>(n - 1);

    p.beta1 = mean_c;
    p.alpha = (var_c > 0.0) ? cov_cq / var_c : 0.0;
    p.gamma1 = mean_q - p.alpha * mean_c;

    const Anova cost_anova = anova_decomposition(cost, cluster, static_cast<int>(d.n_clusters()));
    p.cluster_cov.sigma_u_sq = cost_anova.level2;
    p.cluster_cov.rho = 0.0;

    p.cost_dist.kind = kind;
    p.cost_dist.lognormal_log_scale_location = lognormal_log_scale_location;
    switch (kind) {
    case CostKind::normal: p.cost_dist.dispersion = cost_anova.within; break;
    case CostKind::gamma:
        p.cost_dist.dispersion =
            std::clamp(mean_c * mean_c / cost_anova.within, 1e-4, 1e6);
        break;
    case CostKind::lognormal:
        p.cost_dist.dispersion =
            std::clamp(cost_anova.within / (mean_c * mean_c), 1e-6, 1e6);
        break;
    }

    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = qaly[i] - p.gamma1 - p.alpha * cost[i];
    const Anova q_anova = anova_decomposition(resid, cluster, static_cast<int>(d.n_clusters()));
    p.sigma_q_sq = q_anova.within;
    p.cluster_cov.sigma_w_sq = q_anova.level2;
    return p;
}

namespace {

// Mean cost implied by the fitted parameters, with its gradient on the
// unconstrained scale. Equal to beta1 except for the log-scale-location
// lognormal variant.
double implied_mean_cost(const ArmParams &p, bool literal, Eigen::VectorXd *grad8) {
    if (grad8) grad8->setZero();
    if (p.cost_dist.kind == CostKind::lognormal && literal) {
        const double v = std::log1p(p.cost_dist.dispersion);
        const double mean = std::exp(p.beta1 + 0.5 * v + 0.5 * p.cluster_cov.sigma_u_sq);
        if (grad8) {
            (*grad8)[0] = mean;
            (*grad8)[4] = mean * 0.5 * p.cost_dist.dispersion / (1.0 + p.cost_dist.dispersion);
            (*grad8)[5] = mean * 0.5 * p.cluster_cov.sigma_u_sq;
        }
        return mean;
    }
    if (grad8) (*grad8)[0] = 1.0;
    return p.beta1;
}

// Marginal individual-level covariance structure implied by the model,
// evaluated at the estimates; feeds the reported corr(c, q).
double implied_correlation_cq(const ArmParams &p, bool literal) {
    const double su2 = p.cluster_cov.sigma_u_sq;
    const double sw2 = p.cluster_cov.sigma_w_sq;
    const double cov_uw = p.cluster_cov.rho * std::sqrt(su2 * sw2);

    double var_c = 0.0, cov_mw = cov_uw, mean_c = p.beta1;
    switch (p.cost_dist.kind) {
    case CostKind::normal: var_c = su2 + p.cost_dist.dispersion; break;
    case CostKind::gamma:
        var_c = su2 + (p.beta1 * p.beta1 + su2) / p.cost_dist.dispersion;
        break;
    case CostKind::lognormal:
        if (!literal) {
            var_c = su2 + p.cost_dist.dispersion * (p.beta1 * p.beta1 + su2);
        } else {
            const double v = std::log1p(p.cost_dist.dispersion);
            const double a = p.beta1 + 0.5 * v;
            mean_c = std::exp(a + 0.5 * su2);
            var_c = std::exp(2.0 * a) * (std::exp(2.0 * su2) - std::exp(su2)) +
                    p.cost_dist.dispersion * std::exp(2.0 * a + 2.0 * su2);
            cov_mw = mean_c * cov_uw;
        }
        break;
    }

    const double cov_cq = p.alpha * var_c + cov_mw;
    const double var_q =
        p.alpha * p.alpha * var_c + sw2 + p.sigma_q_sq + 2.0 * p.alpha * cov_mw;
    if (!(var_c > 0.0) || !(var_q > 0.0)) return 0.0;
    return cov_cq / std::sqrt(var_c * var_q);
}

} // namespace

ArmFit fit_arm(const TrialDataset &d, CostKind kind, const FitOptions &opts) {
    ArmLikelihood lik(d, kind, opts);

    std::vector<ArmParams> starts;
    if (opts.start) {
        starts.push_back(*opts.start);
    } else {
        ArmParams m = moment_starting_values(d, kind, opts.lognormal_log_scale_location);
        starts.push_back(m);
        ArmParams p2 = m;
        p2.sigma_q_sq *= 2.0;
        p2.cost_dist.dispersion *= 2.0;
        p2.cluster_cov.sigma_u_sq *= 2.0;
        p2.cluster_cov.sigma_w_sq *= 2.0;
        p2.alpha *= 0.5;
        starts.push_back(p2);
    }

    NewtonOptions nopts;
    nopts.grad_tol = opts.grad_tol;
    nopts.rel_tol = opts.rel_tol;
    nopts.max_iter = opts.max_iter;
    nopts.fd_step = opts.hessian_step;

    Objective objective;
    objective.value = [&lik](const Eigen::VectorXd &t) { return lik.loglik(t); };
    objective.value_grad = [&lik](const Eigen::VectorXd &t) { return lik.loglik_grad(t); };
    if (opts.adaptive)
        objective.before_iteration = [&lik](const Eigen::VectorXd &t) { lik.update_adaptation(t); };

    std::optional<NewtonResult> best;
    std::ostringstream diagnostics;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        try {
            NewtonResult r = newton_maximize(objective, lik.pack(starts[s]), nopts);
            diagnostics << "start " << s + 1 << ": loglik=" << r.value
                        << " max|grad|=" << r.max_abs_grad << " iters=" << r.iterations
                        << (r.converged ? " (converged)" : " (not converged)") << "; ";
            if (r.converged && (!best || r.value > best->value)) best = std::move(r);
        } catch (const NumericError &e) {
            diagnostics << "start " << s + 1 << ": " << e.what() << "; ";
        }
    }
    if (!best)
        throw NumericError("fit_arm: no start converged [" + diagnostics.str() + "]");

    if (opts.adaptive) lik.update_adaptation(best->theta);

    // Observed information and the delta method for (mean cost, mean QALY).
    Eigen::MatrixXd hess = fd_hessian(
        [&lik](const Eigen::VectorXd &t) { return lik.loglik_grad(t); }, best->theta,
        opts.hessian_step);
    Eigen::MatrixXd obs_info = -hess;
    Eigen::LLT<Eigen::MatrixXd> llt(obs_info);
    if (llt.info() != Eigen::Success)
        throw NumericError("fit_arm: singular or indefinite observed information matrix");
    Eigen::MatrixXd cov_theta =
        llt.solve(Eigen::MatrixXd::Identity(ArmLikelihood::n_params, ArmLikelihood::n_params));

    ArmFit fit;
    fit.params = lik.unpack(best->theta);
    fit.loglik = best->value;
    fit.converged = best->converged;
    fit.iterations = best->iterations;
    fit.max_abs_grad = best->max_abs_grad;

    Eigen::VectorXd gc(ArmLikelihood::n_params);
    fit.mean_cost = implied_mean_cost(fit.params, opts.lognormal_log_scale_location, &gc);
    fit.mean_qaly = fit.params.gamma1 + fit.params.alpha * fit.mean_cost;
    Eigen::VectorXd gq = fit.params.alpha * gc;
    gq[1] += 1.0;              // gamma1
    gq[2] += fit.mean_cost;    // alpha
    Eigen::MatrixXd jac(2, ArmLikelihood::n_params);
    jac.row(0) = gc.transpose();
    jac.row(1) = gq.transpose();
    Eigen::Matrix2d cov = jac * cov_theta * jac.transpose();
    fit.cov_means = 0.5 * (cov + cov.transpose());

    fit.correlation_cq = implied_correlation_cq(fit.params, opts.lognormal_log_scale_location);
    return fit;
}

} // namespace crtcea
