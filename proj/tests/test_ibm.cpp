#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <random>

#include "conexit/ibm_exit.hpp"
#include "conexit/special.hpp"

using namespace conexit;
using std::numbers::pi;

namespace {

const ClockKernel& kernel_for(double aperture) {
    static std::map<double, std::unique_ptr<ClockKernel>> cache;
    auto& slot = cache[aperture];
    if (!slot) {
        const auto cone = ConeFamily::wedge(aperture);
        slot = std::make_unique<ClockKernel>(cached_spectrum(cone), PolarPoint{1.0, cone.bisector()});
    }
    return *slot;
}

// Half-plane from distance 1: hitting-time density of the boundary line.
double hitting_density(double v) {
    if (!(v > 0.0) || !std::isfinite(v)) return 0.0;
    const double e = std::exp(-0.5 / v);
    return e == 0.0 ? 0.0 : e / std::sqrt(2.0 * pi * v * v * v);
}

// 2 E[tau' / (u + tau')] by direct integration against the hitting density.
double exit_weight_oracle(double u) {
    boost::math::quadrature::exp_sinh<double> integrator;
    return 2.0 * integrator.integrate([u](double v) { return v / (u + v) * hitting_density(v); }, 1e-12);
}

// IBM exit radius density in the half-plane: reweight the joint law of
// (tau, |B_tau|), which factors as hitting density times a two-sided Gaussian.
double half_plane_ibm_density(double r) {
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [r](double u) {
        const double hit = hitting_density(u);
        if (hit == 0.0) return 0.0;
        const double gauss = 2.0 * std::exp(-r * r / (2.0 * u)) / std::sqrt(2.0 * pi * u);
        return hit * gauss * exit_weight_oracle(u);
    };
    return integrator.integrate(f, 1e-10);
}

double log_slope(double r1, double f1, double r2, double f2) { return std::log(f2 / f1) / std::log(r2 / r1); }

}  // namespace

TEST_CASE("exit side probability is the gambler's ruin law") {
    CHECK(exit_side_probability(1.0, 3.0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(exit_side_probability(2.5, 2.5) == 0.5);
    for (double u : {0.1, 1.0, 7.0})
        for (double v : {0.3, 2.0, 11.0})
            CHECK(exit_side_probability(u, v) + exit_side_probability(v, u) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(exit_side_probability(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exit_side_probability(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("exit side probability matches a simulated lattice walk") {
    // simple symmetric walk from 0 on the integers, absorbed at -u or v
    std::mt19937_64 gen(20240611);
    std::bernoulli_distribution coin(0.5);
    const int trials = 100000;
    for (auto [u, v] : {std::pair{1, 3}, std::pair{2, 5}}) {
        int left = 0;
        for (int i = 0; i < trials; ++i) {
            int x = 0;
            while (x > -u && x < v) x += coin(gen) ? 1 : -1;
            left += x == -u;
        }
        const double p = exit_side_probability(u, v);
        const double sigma = std::sqrt(p * (1.0 - p) / trials);
        CHECK(std::abs(static_cast<double>(left) / trials - p) < 3.0 * sigma);
    }
}

TEST_CASE("regime classification and moment criterion") {
    CHECK(classify_regime(ConeFamily::wedge(pi)) == IbmRegime::Sub);
    CHECK(classify_regime(ConeFamily::wedge(pi / 2)) == IbmRegime::Critical);
    CHECK(classify_regime(ConeFamily::wedge(pi / 4)) == IbmRegime::Super);
    CHECK(classify_regime(ConeFamily::wedge(1.5707963)) == IbmRegime::Critical);  // snapped
    CHECK(classify_regime(ConeFamily::halfspace(5)) == IbmRegime::Sub);
    CHECK(classify_regime(ConeFamily::cone3d(pi / 2)) == IbmRegime::Sub);
    CHECK(classify_regime(ConeFamily::cone3d(0.3)) == IbmRegime::Super);
    CHECK(std::string(to_string(IbmRegime::Critical)) == "critical");

    const auto half = ConeFamily::wedge(pi), quarter = ConeFamily::wedge(pi / 2), eighth = ConeFamily::wedge(pi / 4);
    CHECK(moment_finite(half, 1.9));
    CHECK_FALSE(moment_finite(half, 2.0));
    CHECK(moment_finite(quarter, 3.99));
    CHECK_FALSE(moment_finite(quarter, 4.0));
    CHECK(moment_finite(eighth, 5.9));
    CHECK_FALSE(moment_finite(eighth, 6.0));
    // 2pi/3 wedge: p1 = 3/2, threshold 3
    CHECK(moment_finite(ConeFamily::wedge(2 * pi / 3), 2.999));
    CHECK_FALSE(moment_finite(ConeFamily::wedge(2 * pi / 3), 3.0));
    CHECK_THROWS_AS(moment_finite(half, 0.0), std::invalid_argument);
}

TEST_CASE("asymptote constants") {
    // half-plane from (0, 1): rho^2 m1^2 S1 D1 Gamma(3/2)^2 / Gamma(2)^2 * pi/2
    //   = (2/pi)(8/pi)(pi/4)(pi/2) = 2
    const auto& half = cached_spectrum(ConeFamily::wedge(pi));
    const auto a = ibm_asymptote(half, {1.0, pi / 2});
    CHECK(a.regime == IbmRegime::Sub);
    CHECK(a.constant == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(a.density_exponent == 3.0);
    CHECK(a.tail_exponent == 2.0);
    CHECK_FALSE(a.log_correction);
    CHECK(beta_tail_integral(1.0) == doctest::Approx(pi / 2).epsilon(1e-13));

    // quarter plane: 2 (1 + 1)^{-1} rho^4 m1^2 S1 D1, m1 = 2/sqrt(pi), S1 = 8/sqrt(pi), D1 = 2/sqrt(pi)
    const auto c = ibm_asymptote(cached_spectrum(ConeFamily::wedge(pi / 2)), {1.0, pi / 4});
    CHECK(c.regime == IbmRegime::Critical);
    CHECK(c.log_correction);
    CHECK(c.constant == doctest::Approx(64.0 / (pi * pi)).epsilon(1e-12));

    const auto& eighth = cached_spectrum(ConeFamily::wedge(pi / 4));
    const auto s = ibm_asymptote(eighth, {1.0, pi / 8});
    CHECK(s.regime == IbmRegime::Super);
    CHECK(s.tail_exponent == 6.0);
    CHECK(s.density_exponent == 7.0);
    const double m1 = eighth.eigenfunction(0, pi / 8);
    CHECK(s.constant == doctest::Approx(2.0 * m1 * eighth.mode(0).boundary_functional *
                                        mean_exit_time(eighth, {1.0, pi / 8}))
                            .epsilon(1e-12));

    for (double a_ : {0.4, 1.0, 2.0, 3.0, 4.0, 5.5}) {
        const auto cone = ConeFamily::wedge(a_);
        CHECK(ibm_asymptote(cached_spectrum(cone), {1.3, cone.bisector() * 0.7}).constant > 0.0);
    }
    CHECK(ibm_asymptote(cached_spectrum(ConeFamily::cone3d(pi / 3)), {2.0, 0.0}).constant > 0.0);
    CHECK(ibm_asymptote(cached_spectrum(ConeFamily::halfspace(4)), {1.0, 0.0}).constant > 0.0);
}

TEST_CASE("asymptotic tail") {
    const auto& half = cached_spectrum(ConeFamily::wedge(pi));
    const PolarPoint z{1.0, pi / 2};
    CHECK_THROWS_AS(ibm_tail(half, z, 9.99), std::domain_error);
    const auto a = ibm_asymptote(half, z);
    // -d/dr of the sub-regime tail is A r^{-2 p1 - 1}
    for (double r : {12.0, 40.0, 300.0}) {
        const double h = 1e-4 * r;
        const double deriv = -(ibm_tail(a, 1.0, r + h) - ibm_tail(a, 1.0, r - h)) / (2.0 * h);
        CHECK(deriv == doctest::Approx(a.constant * std::pow(r, -3.0)).epsilon(1e-7));
    }
    CHECK(ibm_tail(a, 1.0, 20.0) == doctest::Approx(2.0 / 2.0 / 400.0).epsilon(1e-14));
    const auto c = ibm_asymptote(cached_spectrum(ConeFamily::wedge(pi / 2)), {1.0, pi / 4});
    CHECK(ibm_tail(c, 1.0, 16.0) == doctest::Approx(0.25 * c.constant * std::log(16.0) / 65536.0).epsilon(1e-14));
}

TEST_CASE("clock kernel") {
    const auto& k = kernel_for(pi);
    SUBCASE("against the hitting-time oracle") {
        // P(tau > v) = erf(1 / sqrt(2v)) for distance 1
        boost::math::quadrature::exp_sinh<double> integrator;
        for (double c : {1e-8, 1e-4, 0.03, 1.0, 50.0, 1e4}) {
            const double oracle = integrator.integrate(
                [c](double v) { return std::erf(1.0 / std::sqrt(2.0 * v)) / ((1.0 + c * v) * (1.0 + c * v)); },
                1e-13);
            CHECK(k(c) == doctest::Approx(oracle).epsilon(2e-6));
            CHECK(k.evaluate(c) == doctest::Approx(oracle).epsilon(2e-6));
        }
        for (double u : {1e-3, 0.2, 1.0, 30.0, 1e5}) CHECK(k.exit_weight(u) == doctest::Approx(exit_weight_oracle(u)).epsilon(2e-6));
    }
    SUBCASE("limits") {
        CHECK(k.exit_weight(1e-12) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(std::isinf(k(0.0)));
        // table and direct quadrature agree between nodes
        for (double c : {3.3e-9, 7.1e-3, 0.47, 123.0}) CHECK(k(c) == doctest::Approx(k.evaluate(c)).epsilon(1e-6));
        // decreasing in c
        double prev = k(1e-12);
        for (double c = 1e-11; c < 1e12; c *= 3.7) {
            const double v = k(c);
            CHECK(v <= prev);
            prev = v;
        }
        const auto& super = kernel_for(pi / 4);
        const double mean = mean_exit_time(super.spectrum(), super.start());
        CHECK(super(0.0) == doctest::Approx(mean).epsilon(1e-6));
        CHECK(super(1e-14) == doctest::Approx(mean).epsilon(1e-6));
    }
}

TEST_CASE("IBM radial density in the half-plane matches the direct double integral") {
    const auto& k = kernel_for(pi);
    for (double r : {0.25, 0.5, 2.0, 4.0, 16.0}) {
        const double oracle = half_plane_ibm_density(r);
        CHECK(ibm_radial_density(k, r).value == doctest::Approx(oracle).epsilon(1e-5));
    }
    // inside the diagonal window the time integral takes over
    CHECK_THROWS_AS(ibm_radial_density(k, 1.0), std::domain_error);
    CHECK(ibm_radial_density_bridged(k, 1.0) == doctest::Approx(half_plane_ibm_density(1.0)).epsilon(1e-5));
}

TEST_CASE("IBM radial density: series and time integral agree") {
    for (double a : {pi, pi / 2, pi / 4}) {
        const auto& k = kernel_for(a);
        for (double r : {0.3, 0.8, 1.25, 3.0, 10.0}) {
            const double series = ibm_radial_density(k, r).value;
            CHECK(series > 0.0);
            CHECK(ibm_radial_density_time_integral(k, r) == doctest::Approx(series).epsilon(1e-7));
        }
    }
}

TEST_CASE("IBM radial density: truncation and leading mode") {
    const auto& k = kernel_for(pi);
    SUBCASE("positive on the grid") {
        for (double r : {0.25, 0.5, 2.0, 4.0, 16.0}) CHECK(ibm_radial_density(k, r).value > 0.0);
    }
    SUBCASE("j = 1 dominates at 32 rho") {
        const auto terms = ibm_radial_density_terms(k, 32.0, 20);
        double rest = 0.0;
        for (std::size_t i = 1; i < terms.size(); ++i) rest += terms[i];
        CHECK(std::abs(rest / terms[0]) < 0.05);
    }
    SUBCASE("doubling the mode count changes nothing") {
        SeriesOptions opt;
        opt.tol = 1e-10;
        for (double r : {2.0, 4.0, 0.5}) {
            const auto v = ibm_radial_density(k, r, opt);
            CHECK(v.converged);
            const auto terms = ibm_radial_density_terms(k, r, 2 * v.terms, opt);
            double head = 0.0, all = 0.0;
            for (int i = 0; i < 2 * v.terms; ++i) {
                all += terms[i];
                if (i < v.terms) head += terms[i];
            }
            CHECK(std::abs(all - head) <= 1e-10 * all);
            CHECK(std::abs(all - head) <= v.error + 1e-300);
        }
    }
}

TEST_CASE("IBM radial density: regime slopes between 32 and 128 rho") {
    struct Case {
        double aperture, expected;
        bool log_corrected;
    };
    for (auto c : {Case{pi, -3.0, false}, Case{pi / 2, -5.0, true}, Case{pi / 4, -7.0, false}}) {
        const auto& k = kernel_for(c.aperture);
        double f1 = ibm_radial_density(k, 32.0).value, f2 = ibm_radial_density(k, 128.0).value;
        if (c.log_corrected) {
            f1 /= std::log(32.0);
            f2 /= std::log(128.0);
        }
        CHECK(std::abs(log_slope(32.0, f1, 128.0, f2) - c.expected) < 0.15);
    }
    // sub regime: within 10% of A r^{-3} at r = 64
    const auto& k = kernel_for(pi);
    const auto a = ibm_asymptote(k.spectrum(), k.start());
    CHECK(std::abs(ibm_radial_density(k, 64.0).value / (a.constant * std::pow(64.0, -3.0)) - 1.0) < 0.1);
}

TEST_CASE("IBM radial density integrates to one") {
    for (double a : {pi, pi / 2, pi / 4}) {
        const auto& k = kernel_for(a);
        const double mass = ibm_radial_probability(k, 1e-6, 1e4);
        CHECK(mass == doctest::Approx(1.0).epsilon(5e-3));
        CHECK(mass <= 1.0 + 1e-6);
    }
    CHECK_THROWS_AS(ibm_radial_probability(kernel_for(pi), 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("IBM radial tail complements the distribution function") {
    for (double a : {pi, pi / 4}) {
        const auto& k = kernel_for(a);
        const double below = ibm_radial_probability(k, 1e-6, 3.0);
        CHECK(below + ibm_radial_tail(k, 3.0) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(ibm_radial_tail(k, 8.0) - ibm_radial_tail(k, 32.0) ==
              doctest::Approx(ibm_radial_probability(k, 8.0, 32.0)).epsilon(1e-8));
    }
    // far out the leading order takes over
    const auto& k = kernel_for(pi);
    const double r = 500.0;
    CHECK(ibm_radial_tail(k, r) == doctest::Approx(ibm_tail(k.spectrum(), k.start(), r)).epsilon(2e-3));
}

TEST_CASE("exit-time survival law by regime") {
    const auto sub = ibm_survival_law(ConeFamily::wedge(pi));
    CHECK(sub.regime == IbmRegime::Sub);
    CHECK(sub.exponent == doctest::Approx(0.5));
    CHECK_FALSE(sub.log_correction);
    const auto crit = ibm_survival_law(ConeFamily::wedge(pi / 2));
    CHECK(crit.exponent == 1.0);
    CHECK(crit.log_correction);
    CHECK(ibm_survival_law(ConeFamily::wedge(pi / 4)).exponent == doctest::Approx(2.5));
    CHECK(ibm_survival_law(ConeFamily::halfspace(3)).exponent == doctest::Approx(0.5));
}
