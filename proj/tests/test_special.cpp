#include "doctest.h"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "conexit/quadrature.hpp"
#include "conexit/special.hpp"

using namespace conexit;

namespace {
double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
const QuadratureSpec kTight{1e-300, 1e-13, 5000};
}  // namespace

TEST_CASE("log_gamma known values and domain") {
    CHECK(log_gamma(1.0) == doctest::Approx(0.0));
    CHECK(log_gamma(0.5) == doctest::Approx(0.5723649429247001).epsilon(1e-14));
    CHECK(log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-14));
    CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
    CHECK_THROWS_AS(log_gamma(-1.5), std::domain_error);
}

TEST_CASE("duplication identity for Gamma") {
    for (double z : {0.25, 0.5, 1.0, 3.7}) {
        const double lhs = log_gamma(2.0 * z);
        const double rhs = -0.5 * std::log(2.0 * std::numbers::pi) + (2.0 * z - 0.5) * std::log(2.0) +
                           log_gamma(z) + log_gamma(z + 0.5);
        CHECK(std::abs(std::expm1(lhs - rhs)) < 1e-12);
    }
}

TEST_CASE("bessel_i trivial values") {
    CHECK(bessel_i(0.0, 0.0) == 1.0);
    CHECK(bessel_i(3.0, 0.0) == 0.0);
    CHECK(bessel_i(0.5, 1.0) ==
          doctest::Approx(std::sqrt(2.0 / std::numbers::pi) * std::sinh(1.0)).epsilon(1e-14));
    CHECK(bessel_i(0.5, 1.0) == doctest::Approx(0.9376748882).epsilon(1e-10));
    CHECK_THROWS_AS(bessel_i(-0.5, 1.0), std::domain_error);
    CHECK_THROWS_AS(bessel_i(1.0, -1.0), std::domain_error);
    CHECK_THROWS_AS(bessel_i(0.0, 800.0), std::overflow_error);
    CHECK(std::isfinite(bessel_i_scaled(0.0, 800.0)));
}

TEST_CASE("bessel_i against Boost.Math over series and asymptotic regions") {
    const std::vector<double> orders = {0.0, 0.3, 1.0, 2.5, 7.0, 12.75, 20.0, 60.5, 150.25};
    const std::vector<double> args = {1e-3, 0.1, 1.0, 5.0, 20.0, 35.0, 50.0, 100.0, 180.0, 300.0, 690.0};
    for (double nu : orders) {
        for (double z : args) {
            const double ref = boost::math::cyl_bessel_i(nu, z);
            if (ref < 1e-290) continue;
            INFO("nu=" << nu << " z=" << z);
            CHECK(rel(bessel_i(nu, z), ref) < 1e-10);
        }
    }
}

TEST_CASE("scaled bessel_i at very large argument matches half-order closed forms") {
    for (double z : {40.0, 1e3, 1e4, 5e4}) {
        const double pref = std::sqrt(2.0 / (std::numbers::pi * z));
        const double i_half = pref * 0.5 * (1.0 - std::exp(-2.0 * z));
        const double i_three_half = pref * 0.5 * ((1.0 + std::exp(-2.0 * z)) - (1.0 - std::exp(-2.0 * z)) / z);
        CHECK(rel(bessel_i_scaled(0.5, z), i_half) < 1e-12);
        CHECK(rel(bessel_i_scaled(1.5, z), i_three_half) < 1e-12);
    }
    // Large order past the series switch takes the recurrence route.
    CHECK(rel(bessel_i_scaled(40.5, 200.0), boost::math::cyl_bessel_i(40.5, 200.0) * std::exp(-200.0)) < 1e-11);
}

TEST_CASE("derivative recurrence I' = (I_{a-1} + I_{a+1}) / 2 by central differences") {
    for (double a : {0.5, 1.0, 2.5, 7.0}) {
        for (double z : {0.1, 1.0, 5.0, 20.0}) {
            const double h = 1e-5 * std::max(1.0, z);
            const double fd = (bessel_i(a, z + h) - bessel_i(a, z - h)) / (2.0 * h);
            const double lower = a >= 1.0 ? bessel_i(a - 1.0, z) : boost::math::cyl_bessel_i(a - 1.0, z);
            const double rec = 0.5 * (lower + bessel_i(a + 1.0, z));
            INFO("a=" << a << " z=" << z);
            CHECK(rel(fd, rec) < 1e-6);
        }
    }
}

TEST_CASE("growth bound I_nu(z) <= K (z/2)^nu e^nu e^z / (nu + 1/2)^nu with K = 1.1") {
    for (double nu : {0.0, 0.5, 1.0, 2.5, 7.0, 20.0, 60.0}) {
        for (double z : {0.01, 0.1, 1.0, 5.0, 20.0, 50.0, 200.0}) {
            const double log_bound = std::log(1.1) + nu * std::log(0.5 * z) + nu + z - nu * std::log(nu + 0.5);
            const double log_value = std::log(bessel_i_scaled(nu, z)) + z;
            INFO("nu=" << nu << " z=" << z);
            CHECK(log_value <= log_bound);
        }
    }
}

TEST_CASE("Bessel-Laplace closed forms agree with adaptive quadrature") {
    for (double alpha : {0.5, 1.0, 2.0, 2.5, 7.0}) {
        for (int k = 1; k <= 9; ++k) {
            const double g = 0.1 * k;
            auto ratio_integrand = [=](double w) {
                if (w == 0.0) return 0.0;
                return std::exp(-(1.0 - g) * w) * bessel_i_scaled(alpha, g * w) / w;
            };
            auto plain_integrand = [=](double w) { return std::exp(-(1.0 - g) * w) * bessel_i_scaled(alpha, g * w); };
            INFO("alpha=" << alpha << " gamma=" << g);
            CHECK(rel(integrate(ratio_integrand, 0.0, kInfinity, kTight), laplace_bessel_ratio(alpha, g)) < 1e-9);
            CHECK(rel(integrate(plain_integrand, 0.0, kInfinity, kTight), laplace_bessel(alpha, g)) < 1e-9);
        }
    }
}

TEST_CASE("Bessel-Laplace closed form examples and limits") {
    CHECK(laplace_bessel_ratio(1.0, 0.6) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(laplace_bessel(1.0, 0.6) == doctest::Approx(0.6 / (0.8 * 1.8)).epsilon(1e-14));
    // Small gamma: leading series term alpha^{-1} (gamma/2)^alpha.
    for (double alpha : {0.5, 2.0, 5.5}) {
        const double g = 1e-6;
        CHECK(rel(laplace_bessel_ratio(alpha, g), std::pow(g / 2, alpha) / alpha) < 1e-6);
        CHECK(rel(laplace_bessel(alpha, g), std::pow(g / 2, alpha)) < 1e-6);
    }
    double previous = 0.0;
    for (int k = 1; k < 100; ++k) {
        const double v = laplace_bessel(2.5, k / 100.0);
        CHECK(v > previous);
        previous = v;
    }
    CHECK_THROWS_AS(laplace_bessel_ratio(1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(laplace_bessel(1.0, 1.2), std::domain_error);
    CHECK_THROWS_AS(laplace_bessel_ratio(0.0, 0.5), std::domain_error);
}

TEST_CASE("beta tail integral") {
    CHECK(beta_tail_integral(1.0) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-14));
    CHECK(beta_tail_integral(1e-9) == doctest::Approx(1.0).epsilon(1e-8));
    for (double p : {0.5, 1.0, 1.5}) {
        auto f = [p](double w) { return w == 0.0 ? 0.0 : std::pow(w, -0.5 * p) / ((1 + w) * (1 + w)); };
        CHECK(rel(integrate(f, 0.0, kInfinity, kTight), beta_tail_integral(p)) < 1e-9);
    }
    CHECK(rel(beta_tail_integral(1.5), std::tgamma(0.25) * std::tgamma(1.75)) < 1e-13);
    CHECK_THROWS_AS(beta_tail_integral(2.0), std::domain_error);
    CHECK_THROWS_AS(beta_tail_integral(0.0), std::domain_error);
}
