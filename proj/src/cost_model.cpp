#include "crtcea/cost_model.hpp"
#include "crtcea/errors.hpp"

#include <cmath>
#include <limits>

namespace crtcea {

CostKind cost_kind_from_string(const std::string &name) {
    if (name == "normal") return CostKind::normal;
    if (name == "lognormal") return CostKind::lognormal;
    if (name == "gamma") return CostKind::gamma;
    throw InputError("unknown cost distribution '" + name + "' (expected normal|lognormal|gamma)");
}

const char *cost_kind_name(CostKind kind) {
    switch (kind) {
    case CostKind::normal: return "normal";
    case CostKind::lognormal: return "lognormal";
    case CostKind::gamma: return "gamma";
    }
    return "?";
}

double cost_loglik(double c, double mu_c, const CostDistribution &dist) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    if (!(dist.dispersion > 0.0))
        throw NumericError("cost_loglik: dispersion must be positive");

    switch (dist.kind) {
    case CostKind::normal: {
        const double var = dist.dispersion;
        const double r = c - mu_c;
        return -0.5 * std::log(two_pi * var) - r * r / (2.0 * var);
    }
    case CostKind::gamma: {
        if (!(mu_c > 0.0)) throw NumericError("cost_loglik: gamma requires mu_c > 0");
        if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
        const double eta = dist.dispersion;
        return eta * std::log(eta / mu_c) + (eta - 1.0) * std::log(c) - eta * c / mu_c -
               std::lgamma(eta);
    }
    case CostKind::lognormal: {
        if (!(mu_c > 0.0)) throw NumericError("cost_loglik: lognormal requires mu_c > 0");
        if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
        const double v = std::log1p(dist.dispersion);
        const double m =
            dist.lognormal_log_scale_location ? mu_c : std::log(mu_c) - 0.5 * v;
        const double r = std::log(c) - m;
        return -std::log(c) - 0.5 * std::log(two_pi * v) - r * r / (2.0 * v);
    }
    }
    throw NumericError("cost_loglik: unreachable");
}

double cost_conditional_variance(double mu_c, const CostDistribution &dist) {
    switch (dist.kind) {
    case CostKind::normal: return dist.dispersion;
    case CostKind::gamma: return mu_c * mu_c / dist.dispersion;
    case CostKind::lognormal: {
        if (dist.lognormal_log_scale_location) {
            const double v = std::log1p(dist.dispersion);
            const double mean = std::exp(mu_c + 0.5 * v);
            return (std::exp(v) - 1.0) * mean * mean;
        }
        return dist.dispersion * mu_c * mu_c;
    }
    }
    throw NumericError("cost_conditional_variance: unreachable");
}

} // namespace crtcea
