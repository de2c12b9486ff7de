#include "crtcea/errors.hpp"
#include "crtcea/quadrature.hpp"

#include <cmath>
#include <doctest.h>

using namespace crtcea;

namespace {

// Oracle: closed-form Gaussian moments, int x^k exp(-x^2) dx = 0 for odd k
// and Gamma((k+1)/2) for even k.
double gaussian_moment(int k) {
    if (k % 2 == 1) return 0.0;
    return std::exp(std::lgamma((k + 1) / 2.0));
}

double quadrature_moment(const QuadratureRule &rule, int k) {
    // Sum mirrored node pairs first so odd powers cancel exactly.
    double total = 0.0;
    const int n = rule.order;
    for (int i = 0, j = n - 1; i < j; ++i, --j)
        total += rule.weights[i] * std::pow(rule.nodes[i], k) +
                 rule.weights[j] * std::pow(rule.nodes[j], k);
    if (n % 2 == 1) total += rule.weights[n / 2] * std::pow(rule.nodes[n / 2], k);
    return total;
}

} // namespace

TEST_CASE("order 1 rule is the zeroth-degree rule") {
    auto rule = gauss_hermite(1);
    REQUIRE(rule.nodes.size() == 1);
    CHECK(rule.nodes[0] == 0.0);
    CHECK(rule.weights[0] == doctest::Approx(1.7724538509055160273).epsilon(1e-12));
}

TEST_CASE("order 2 rule matches the moment-matching solution") {
    // Oracle: a two-point symmetric rule exact through degree 3 must satisfy
    // 2w = sqrt(pi) and 2wx^2 = sqrt(pi)/2, i.e. x = 1/sqrt(2).
    auto rule = gauss_hermite(2);
    CHECK(rule.nodes[0] == doctest::Approx(-0.7071067811865475).epsilon(1e-13));
    CHECK(rule.nodes[1] == doctest::Approx(0.7071067811865475).epsilon(1e-13));
    CHECK(rule.weights[0] == doctest::Approx(0.8862269254527580).epsilon(1e-13));
    CHECK(rule.weights[1] == doctest::Approx(0.8862269254527580).epsilon(1e-13));
}

TEST_CASE("order 70 reproduces the x^10 moment to 1e-12") {
    auto rule = gauss_hermite(70);
    const double exact = gaussian_moment(10);
    CHECK(std::abs(quadrature_moment(rule, 10) - exact) / exact < 1e-12);
}

TEST_CASE("weights sum to sqrt(pi) and nodes are symmetric") {
    for (int order : {1, 2, 3, 7, 20, 41, 70}) {
        auto rule = gauss_hermite(order);
        double sum = 0.0;
        for (double w : rule.weights) {
            CHECK(w > 0.0);
            sum += w;
        }
        CHECK(std::abs(sum - std::sqrt(M_PI)) < 1e-12);
        for (int i = 0; i < order / 2; ++i) {
            CHECK(rule.nodes[i] == -rule.nodes[order - 1 - i]);
            CHECK(rule.weights[i] == rule.weights[order - 1 - i]);
        }
    }
}

TEST_CASE("polynomial exactness across orders") {
    for (int order : {2, 5, 11, 30, 70}) {
        auto rule = gauss_hermite(order);
        for (int k = 0; k <= 2 * order - 1; ++k) {
            const double approx = quadrature_moment(rule, k);
            const double exact = gaussian_moment(k);
            if (k % 2 == 1)
                CHECK(approx == 0.0);
            else
                CHECK(std::abs(approx - exact) / exact < 1e-10);
        }
    }
}

TEST_CASE("order out of range throws") {
    CHECK_THROWS_AS(gauss_hermite(0), InputError);
    CHECK_THROWS_AS(gauss_hermite(201), InputError);
}
