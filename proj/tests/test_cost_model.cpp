#include "crtcea/cost_model.hpp"
#include "crtcea/errors.hpp"
#include "crtcea/rng.hpp"

#include <cmath>
#include <doctest.h>

using namespace crtcea;

TEST_CASE("gamma log density reduces to the exponential at eta = 1") {
    CostDistribution dist{CostKind::gamma, 1.0};
    CHECK(cost_loglik(1.0, 1.0, dist) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("gamma log density at c=2, mu=1, eta=2 equals log 8 - 4") {
    // Direct evaluation: f = eta^eta / Gamma(eta) * c^{eta-1} e^{-eta c / mu}
    // with mu = 1: f = 4 * 2 * e^{-4} = 8 e^{-4}.
    CostDistribution dist{CostKind::gamma, 2.0};
    CHECK(cost_loglik(2.0, 1.0, dist) == doctest::Approx(std::log(8.0) - 4.0).epsilon(1e-14));
}

TEST_CASE("lognormal mean-targeting parameterization hits the conditional mean") {
    // Monte-Carlo oracle: the implemented density has E[C] = mu_c, CV = sqrt(eta).
    const double mu = 100.0, eta = 0.5;
    const double v = std::log1p(eta);
    const double m = std::log(mu) - 0.5 * v;
    Rng rng(20240601);
    const int n = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double c = std::exp(m + std::sqrt(v) * rng.normal());
        sum += c;
        sum_sq += c * c;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum_sq / n - mean * mean);
    const double mc_se = sd / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - mu) < 3.0 * mc_se);
    // CV check (generous tolerance, fourth-moment noise)
    CHECK(sd / mean == doctest::Approx(std::sqrt(eta)).epsilon(0.02));

    // The density the samples came from is the implemented one.
    CostDistribution dist{CostKind::lognormal, eta};
    const double c0 = 80.0;
    const double expected = -std::log(c0) - 0.5 * std::log(2.0 * M_PI * v) -
                            (std::log(c0) - m) * (std::log(c0) - m) / (2.0 * v);
    CHECK(cost_loglik(c0, mu, dist) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("literal lognormal variant places mu at the log-scale location") {
    CostDistribution dist{CostKind::lognormal, 0.5, true};
    const double v = std::log1p(0.5);
    const double c = 3.0, mu = 1.1;
    const double expected = -std::log(c) - 0.5 * std::log(2.0 * M_PI * v) -
                            (std::log(c) - mu) * (std::log(c) - mu) / (2.0 * v);
    CHECK(cost_loglik(c, mu, dist) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("normal cost log density matches the reference form") {
    CostDistribution dist{CostKind::normal, 4.0};
    const double expected = -0.5 * std::log(2.0 * M_PI * 4.0) - 1.0 * 1.0 / 8.0;
    CHECK(cost_loglik(3.0, 2.0, dist) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("domain violations throw; out-of-support values return -inf") {
    CostDistribution gamma{CostKind::gamma, 2.0};
    CHECK_THROWS_AS(cost_loglik(1.0, -1.0, gamma), NumericError);
    CHECK_THROWS_AS(cost_loglik(1.0, 1.0, CostDistribution{CostKind::gamma, -1.0}), NumericError);
    CHECK(std::isinf(cost_loglik(-2.0, 1.0, gamma)));
    CHECK(cost_loglik(-2.0, 1.0, gamma) < 0.0);
    CostDistribution ln{CostKind::lognormal, 0.5};
    CHECK_THROWS_AS(cost_loglik(1.0, 0.0, ln), NumericError);
    CHECK(std::isinf(cost_loglik(0.0, 1.0, ln)));
}

TEST_CASE("implied conditional variances") {
    CHECK(cost_conditional_variance(5.0, {CostKind::normal, 7.0}) == 7.0);
    CHECK(cost_conditional_variance(5.0, {CostKind::gamma, 2.0}) == doctest::Approx(12.5));
    CHECK(cost_conditional_variance(5.0, {CostKind::lognormal, 0.3}) == doctest::Approx(7.5));
}
