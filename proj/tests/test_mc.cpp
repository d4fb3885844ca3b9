#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <vector>

#include "conexit/bm_exit.hpp"
#include "conexit/errors.hpp"
#include "conexit/monte_carlo.hpp"
#include "conexit/spectrum.hpp"

using namespace conexit;

namespace {

double cauchy_cdf(double r) { return 2.0 / M_PI * std::atan(r); }

// |exit point| from height 1 in a 3-D half-space: Poisson kernel y / (2 pi |x|^3)
double poisson3_cdf(double r) { return 1.0 - 1.0 / std::sqrt(1.0 + r * r); }

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

McParams params(double h, std::uint64_t seed, std::uint32_t workers = 1) {
    McParams mc;
    mc.h = h;
    mc.seed = seed;
    mc.workers = workers;
    return mc;
}

struct MeanSe {
    double mean, se;
};

MeanSe mean_time(const SampleBatch& b) {
    double m = 0, m2 = 0;
    for (const auto& s : b.samples) {
        m += s.exit_time;
        m2 += s.exit_time * s.exit_time;
    }
    const double n = static_cast<double>(b.samples.size());
    m /= n;
    return {m, std::sqrt((m2 / n - m * m) / n)};
}

}  // namespace

TEST_CASE("BM exits from the half-plane follow the Cauchy law") {
    const std::uint64_t n = 100000;
    const double h = 1e-4;
    const auto b = simulate(SampleKind::BmExit, ConeFamily::wedge(M_PI), {1.0, M_PI / 2}, params(h, 1), n);
    CHECK(b.resampled == 0);
    const double d = ks_distance(b.radii(), cauchy_cdf);
    CAPTURE(d);
    CHECK(d < 1.63 / std::sqrt(double(n)) + 0.05 * std::sqrt(h));
}

TEST_CASE("other walk geometries against the 3-D Poisson kernel") {
    const std::uint64_t n = 40000;
    const double h = 1e-4;
    const double bound = 1.63 / std::sqrt(double(n)) + 0.05 * std::sqrt(h);
    SUBCASE("flat 3-D cone") {
        const auto b = simulate(SampleKind::BmExit, ConeFamily::cone3d(M_PI / 2), {1.0, 0.0}, params(h, 2), n);
        CHECK(ks_distance(b.radii(), poisson3_cdf) < bound);
    }
    SUBCASE("half-space n = 3") {
        const auto b = simulate(SampleKind::BmExit, ConeFamily::halfspace(3), {1.0, 0.0}, params(h, 3), n);
        CHECK(ks_distance(b.radii(), poisson3_cdf) < bound);
    }
    SUBCASE("half-space n = 2 is the half-plane") {
        const auto b = simulate(SampleKind::BmExit, ConeFamily::halfspace(2), {1.0, 0.0}, params(h, 4), n);
        CHECK(ks_distance(b.radii(), cauchy_cdf) < bound);
    }
}

TEST_CASE("exit points lie on the boundary") {
    McParams mc = params(1e-3, 5);
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto w = sample_bm_exit(ConeFamily::wedge(1.2), {1.0, 0.5}, mc, 0, i);
        REQUIRE(w.point.size() == 2);
        const double phi = std::atan2(w.point[1], w.point[0]);
        CHECK(std::fabs(phi - (w.boundary_coord == 0.0 ? 0.0 : 1.2)) < 1e-9);
        CHECK(w.radius == doctest::Approx(std::hypot(w.point[0], w.point[1])));
        CHECK(w.time > 0.0);

        const auto c = sample_bm_exit(ConeFamily::cone3d(0.6), {1.0, 0.0}, mc, 0, i);
        REQUIRE(c.point.size() == 3);
        CHECK(std::atan2(std::hypot(c.point[0], c.point[1]), c.point[2]) == doctest::Approx(0.6).epsilon(1e-9));
        CHECK(c.boundary_coord == doctest::Approx(std::atan2(c.point[1], c.point[0])));

        const auto s = sample_bm_exit(ConeFamily::halfspace(4), {1.0, 0.0}, mc, 0, i);
        REQUIRE(s.point.size() == 4);
        CHECK(s.point[3] == 0.0);
    }
}

TEST_CASE("mean exit time of the quarter wedge") {
    // E tau has finite variance only for p1 > 4, so this uses many paths and a
    // small step; the discretisation bias is about 0.6 sqrt(h) in distance.
    const double a = M_PI / 4;
    const Spectrum spec(ConeFamily::wedge(a), 200);
    const double exact = mean_exit_time(spec, {1.0, a / 2});
    const auto b = simulate(SampleKind::BmExit, ConeFamily::wedge(a), {1.0, a / 2}, params(1e-5, 6), 200000);
    const MeanSe m = mean_time(b);
    CAPTURE(m.mean);
    CAPTURE(exact);
    CHECK(std::fabs(m.mean - exact) < 3.0 * m.se);
}

TEST_CASE("diffusive scaling of the mean exit time") {
    const double a = M_PI / 4;
    const McParams mc = params(1e-5, 7);
    const MeanSe m1 = mean_time(simulate(SampleKind::BmExit, ConeFamily::wedge(a), {1.0, a / 2}, mc, 200000));
    const MeanSe m2 = mean_time(simulate(SampleKind::BmExit, ConeFamily::wedge(a), {2.0, a / 2}, mc, 200000));
    const double ratio = m2.mean / m1.mean;
    const double se = ratio * std::hypot(m1.se / m1.mean, m2.se / m2.mean);
    CAPTURE(ratio);
    CHECK(std::fabs(ratio - 4.0) < 3.0 * se);
}

TEST_CASE("IBM exit side is symmetric for a bisector start") {
    const double a = M_PI / 2;
    const std::uint64_t n = 20000;
    const auto b = simulate(SampleKind::IbmExit, ConeFamily::wedge(a), {1.0, a / 2}, params(1e-3, 8), n);
    double ones = 0;
    for (const auto& s : b.samples) ones += s.boundary_coord;
    CHECK(std::fabs(ones / n - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("side coin is Bernoulli(tau+ / (tau- + tau+)) given the exit times") {
    const RngSpec rng{1234};
    const std::uint64_t n = 100000;
    for (auto [um, up] : {std::pair{1.0, 3.0}, std::pair{2.0, 2.0}, std::pair{5.0, 0.5}}) {
        double zeros = 0;
        for (std::uint64_t i = 0; i < n; ++i) zeros += ibm_exit_side(um, up, rng, 0, i) == 0;
        const double p = up / (um + up);
        CAPTURE(p);
        CHECK(std::fabs(zeros / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));
    }
    CHECK_THROWS_AS(ibm_exit_side(0.0, 1.0, rng, 0, 0), std::invalid_argument);
}

TEST_CASE("IBM exit times are positive and finite") {
    const auto b = simulate(SampleKind::IbmExitTime, ConeFamily::wedge(M_PI), {1.0, M_PI / 2}, params(1e-3, 9), 5000);
    for (const auto& s : b.samples) {
        CHECK(s.exit_time > 0.0);
        CHECK(std::isfinite(s.exit_time));
        CHECK(s.exit_radius > 0.0);
    }
}

TEST_CASE("batches are deterministic and match single draws") {
    const ConeFamily cone = ConeFamily::wedge(2.0);
    const PolarPoint z{1.0, 1.0};
    for (SampleKind kind : {SampleKind::BmExit, SampleKind::IbmExit, SampleKind::IbmExitTime}) {
        const McParams mc = params(1e-3, 77, 3);
        const auto a = simulate(kind, cone, z, mc, 1001);
        const auto b = simulate(kind, cone, z, mc, 1001);
        int diff = 0;
        for (std::size_t i = 0; i < a.samples.size(); ++i)
            diff += !same_bits(a.samples[i].exit_time, b.samples[i].exit_time) ||
                    !same_bits(a.samples[i].exit_radius, b.samples[i].exit_radius);
        CHECK(diff == 0);

        // block layout: stream w owns [N w / W, N (w+1) / W)
        CHECK(a.samples[0].stream == 0);
        CHECK(a.samples[332].stream == 0);
        CHECK(a.samples[333].stream == 1);
        CHECK(a.samples[1000].stream == 2);

        for (std::size_t i : {0u, 500u, 1000u}) {
            const Sample& s = a.samples[i];
            const ExitDraw d = kind == SampleKind::BmExit    ? sample_bm_exit(cone, z, mc, s.stream, s.path_index)
                               : kind == SampleKind::IbmExit ? sample_ibm_exit(cone, z, mc, s.stream, s.path_index)
                                                             : sample_ibm_exit_time(cone, z, mc, s.stream, s.path_index);
            CHECK(same_bits(d.time, s.exit_time));
            CHECK(same_bits(d.radius, s.exit_radius));
        }
    }
    // a different worker count is a different stream layout
    const auto one = simulate(SampleKind::BmExit, cone, z, params(1e-3, 77, 1), 50);
    const auto two = simulate(SampleKind::BmExit, cone, z, params(1e-3, 77, 2), 50);
    CHECK(same_bits(one.samples[0].exit_time, two.samples[0].exit_time));
    CHECK(!same_bits(one.samples[49].exit_time, two.samples[49].exit_time));
}

TEST_CASE("KS distance shrinks with the step size") {
    const std::uint64_t n = 40000;
    std::vector<double> d;
    for (double h : {1e-2, 1e-3, 1e-4}) {
        const auto b = simulate(SampleKind::BmExit, ConeFamily::wedge(M_PI), {1.0, M_PI / 2}, params(h, 10), n);
        d.push_back(ks_distance(b.radii(), cauchy_cdf));
    }
    // noise allowance: half the KS 1% critical value
    const double noise = 0.5 * 1.63 / std::sqrt(double(n));
    CAPTURE(d[0]);
    CAPTURE(d[1]);
    CAPTURE(d[2]);
    CHECK(d[1] < d[0] + noise);
    CHECK(d[2] < d[1] + noise);
    CHECK(d[2] < d[0]);
}

TEST_CASE("step budget exhaustion is redrawn and counted") {
    McParams mc = params(1e-3, 11);
    mc.budget = 40;
    mc.max_attempts = 200;
    const auto b = simulate(SampleKind::BmExit, ConeFamily::wedge(M_PI), {1.0, M_PI / 2}, mc, 200);
    CHECK(b.resampled > 0);
    const auto d = sample_bm_exit(ConeFamily::wedge(M_PI), {1.0, M_PI / 2}, mc, 0, 0);
    CHECK(d.attempts >= 1);

    mc.budget = 1;
    mc.max_attempts = 3;
    CHECK_THROWS_AS(simulate(SampleKind::BmExit, ConeFamily::wedge(M_PI), {1.0, M_PI / 2}, mc, 10),
                    NonConvergence);
}

TEST_CASE("sample files round trip") {
    const auto b =
        simulate(SampleKind::IbmExit, ConeFamily::cone3d(1.0), {2.0, 0.0}, params(1e-3, 0xfeedbeefcafeull, 2), 300);
    std::stringstream ss;
    b.write_csv(ss);
    const std::string text = ss.str();
    CHECK(text.rfind("# {", 0) == 0);
    CHECK(text.find("\nexit_time,exit_radius,boundary_coord,stream,path_index\n") != std::string::npos);
    const SampleBatch r = SampleBatch::read_csv(ss);
    CHECK(r.kind == b.kind);
    CHECK(r.cone == b.cone);
    CHECK(r.start.rho == 2.0);
    CHECK(r.params.seed == 0xfeedbeefcafeull);
    CHECK(r.params.workers == 2);
    REQUIRE(r.samples.size() == b.samples.size());
    int diff = 0;
    for (std::size_t i = 0; i < b.samples.size(); ++i)
        diff += !same_bits(r.samples[i].exit_time, b.samples[i].exit_time) ||
                !same_bits(r.samples[i].exit_radius, b.samples[i].exit_radius) ||
                !same_bits(r.samples[i].boundary_coord, b.samples[i].boundary_coord) ||
                r.samples[i].stream != b.samples[i].stream || r.samples[i].path_index != b.samples[i].path_index;
    CHECK(diff == 0);
    std::stringstream again;
    r.write_csv(again);
    CHECK(again.str() == text);

    std::stringstream bad("exit_time\n1\n");
    CHECK_THROWS_AS(SampleBatch::read_csv(bad), std::invalid_argument);
}

TEST_CASE("invalid sampling requests") {
    CHECK_THROWS_AS(simulate(SampleKind::BmExit, ConeFamily::wedge(1.0), {1.0, 1.5}, params(1e-3, 0), 10),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate(SampleKind::BmExit, ConeFamily::wedge(1.0), {1.0, 0.5}, params(0.0, 0), 10),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate(SampleKind::BmExit, ConeFamily::wedge(1.0), {1.0, 0.5}, params(1e-3, 0), 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate(SampleKind::BmExit, ConeFamily::wedge(1.0), {1.0, 0.5}, params(1e-3, 0, 0), 10),
                    std::invalid_argument);
}

TEST_CASE("tail estimator on synthetic Pareto(3)") {
    std::mt19937_64 gen(2025);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(1000000);
    for (double& v : x) v = std::pow(1.0 - u(gen), -1.0 / 3.0);
    const TailFit f = estimate_tail_exponent(x, 1.0, 16.0);
    CAPTURE(f.slope);
    CAPTURE(f.std_error);
    CHECK(std::fabs(f.slope + 3.0) < 0.1);
    CHECK(f.std_error > 0.0);
    CHECK(f.std_error < 0.05);
    CHECK(f.power_law());
    CHECK(f.grid.size() == 5);

    SUBCASE("rescaling the radii only moves the intercept") {
        std::vector<double> y(x);
        for (double& v : y) v *= 3.7;
        const TailFit g = estimate_tail_exponent(y, 3.7, 3.7 * 16.0);
        CHECK(g.slope == doctest::Approx(f.slope).epsilon(1e-7));
    }
}

TEST_CASE("tail estimator flags an exponential tail") {
    std::mt19937_64 gen(99);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> x(1000000);
    for (double& v : x) v = e(gen);
    const TailFit f = estimate_tail_exponent(x, 1.0, 8.0);
    CAPTURE(f.fit_quality);
    CHECK(!f.power_law());
    // the apparent exponent keeps steepening further out
    const TailFit g = estimate_tail_exponent(x, 2.0, 8.0);
    CHECK(g.slope < f.slope);
}

TEST_CASE("tail estimator preconditions") {
    std::vector<double> x(1000, 2.0);
    CHECK_THROWS_AS(estimate_tail_exponent(x, 1.0, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_tail_exponent(x, 0.0, 3.0), std::invalid_argument);
    std::vector<double> few(99, 10.0);
    few.resize(5000, 0.5);
    CHECK_THROWS_AS(estimate_tail_exponent(few, 1.0, 8.0), InsufficientData);
}

TEST_CASE("KS statistic under the null and degenerate models") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int trials = 400, n = 1000;
    int below = 0;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> x(n);
        for (double& v : x) v = u(gen);
        below += ks_distance(x, [](double v) { return v; }) < 1.63 / std::sqrt(double(n));
    }
    // 99% nominal; 3 sigma of a binomial(400, 0.99) is about 2%
    CHECK(below >= trials * 0.97);

    const std::vector<double> x{0.1, 0.2, 0.3};
    CHECK(ks_distance(x, [](double) { return 0.0; }) == 1.0);
    CHECK_THROWS_AS(ks_distance(std::vector<double>{}, [](double v) { return v; }), std::invalid_argument);

    std::size_t used = 0;
    const std::vector<double> y{0.5, 1.5, 2.5, 3.5, 9.0};
    const double d = ks_distance_window(y, [](double v) { return v / 10.0; }, 1.0, 4.0, &used);
    CHECK(used == 3);
    CHECK(d == doctest::Approx(1.0 / 6.0));
}
