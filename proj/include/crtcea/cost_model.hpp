#pragma once

#include <string>

namespace crtcea {

enum class CostKind { normal, lognormal, gamma };

CostKind cost_kind_from_string(const std::string &name);
const char *cost_kind_name(CostKind kind);

/// Conditional cost distribution given the cluster effect. `dispersion` is
/// the variance sigma_c^2 for Normal and the squared-CV-style parameter
/// eta > 0 for Lognormal/Gamma (both hold the coefficient of variation
/// constant across clusters).
///
/// The Lognormal defaults to the mean-targeting parameterization
///   log C ~ N(log mu_c - log(1+eta)/2, log(1+eta))
/// so that E[C | cluster effect] = mu_c and CV = sqrt(eta). Setting
/// `lognormal_log_scale_location` places mu_c directly as the log-scale
/// location instead (the raw textbook form this variant descends from).
struct CostDistribution {
    CostKind kind = CostKind::gamma;
    double dispersion = 1.0;
    bool lognormal_log_scale_location = false;
};

/// Log density of an observed cost c given conditional mean mu_c.
/// Gamma: shape eta, rate eta/mu_c. Invalid parameters (dispersion <= 0, or
/// mu_c <= 0 for Lognormal/Gamma) throw; c outside the support at valid
/// parameters returns -inf.
double cost_loglik(double c, double mu_c, const CostDistribution &dist);

/// Mean/variance of C implied by the distribution at conditional mean mu_c
/// (used for moment-based starting values and the implied c-q correlation).
double cost_conditional_variance(double mu_c, const CostDistribution &dist);

} // namespace crtcea
