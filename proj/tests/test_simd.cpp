#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <vector>

#include "conexit/rng.hpp"
#include "conexit/simd/walk.hpp"

using namespace conexit;
using namespace conexit::simd;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<Backend> backends() {
    std::vector<Backend> out{Backend::Scalar};
    if (backend_available(Backend::Avx2)) out.push_back(Backend::Avx2);
    return out;
}

}  // namespace

TEST_CASE("philox4x32-10 known answers") {
    // Random123 kat_vectors
    static_assert(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
                  PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniform words map into (0, 1]") {
    CHECK(uniform_from_words(0, 0) == 1.0);
    CHECK(uniform_from_words(0xffffffffu, 0xffffffffu) == doctest::Approx(std::ldexp(1.0, -52)).epsilon(1e-12));
    CHECK(uniform_from_words(0x80000000u, 0) == 0.5);
}

TEST_CASE("seed splits into key words") {
    RngSpec r{0x0123456789abcdefull, 4};
    CHECK(r.key() == PhiloxKey{0x89abcdefu, 0x01234567u});
}

TEST_CASE("polynomial log against std::log") {
    std::mt19937_64 gen(7);
    std::vector<double> u;
    for (int k = -60; k <= 0; ++k) u.push_back(std::ldexp(1.0, k));
    for (int i = 0; i < 20000; ++i) u.push_back(std::ldexp(1.0 + std::generate_canonical<double, 53>(gen), -static_cast<int>(gen() % 53)));
    u.push_back(std::sqrt(2.0));
    u.push_back(std::nextafter(std::sqrt(0.5), 1.0));
    for (Backend b : backends()) {
        std::vector<double> out(u.size());
        unit_log(b, u, out);
        double worst = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double ref = std::log(u[i]);
            const double err = std::fabs(out[i] - ref) / std::max(std::fabs(ref), 1e-300);
            worst = std::max(worst, u[i] == 1.0 ? std::fabs(out[i]) : err);
        }
        CAPTURE(to_string(b));
        CHECK(worst < 4e-16);
    }
}

TEST_CASE("turn sincos against std") {
    std::vector<double> x;
    for (int i = 0; i <= 4096; ++i) x.push_back(i / 4096.0);
    std::mt19937_64 gen(11);
    for (int i = 0; i < 20000; ++i) x.push_back(std::generate_canonical<double, 53>(gen));
    for (Backend b : backends()) {
        std::vector<double> s(x.size()), c(x.size());
        turn_sincos(b, x, s, c);
        double worst = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const long double a = 2.0L * 3.14159265358979323846264338327950288L * x[i];
            worst = std::max({worst, std::fabs(s[i] - static_cast<double>(std::sin(a))),
                              std::fabs(c[i] - static_cast<double>(std::cos(a)))});
        }
        CAPTURE(to_string(b));
        CHECK(worst < 2e-15);
    }
}

TEST_CASE("scalar and AVX2 primitives agree bit for bit") {
    if (!backend_available(Backend::Avx2)) return;
    std::vector<PhiloxCounter> ctr;
    for (std::uint32_t i = 0; i < 10007; ++i) ctr.push_back({i, i * 7u + 3u, i ^ 0x5555u, 0xdeadbeefu - i});
    const PhiloxKey key{0x12345678u, 0x9abcdef0u};
    std::vector<double> a0(ctr.size()), a1(ctr.size()), b0(ctr.size()), b1(ctr.size());
    normal_pairs(Backend::Scalar, ctr, key, a0, a1);
    normal_pairs(Backend::Avx2, ctr, key, b0, b1);
    int mismatches = 0;
    for (std::size_t i = 0; i < ctr.size(); ++i)
        mismatches += !same_bits(a0[i], b0[i]) + !same_bits(a1[i], b1[i]);
    CHECK(mismatches == 0);

    std::vector<double> u(ctr.size());
    for (std::size_t i = 0; i < ctr.size(); ++i) u[i] = uniform_from_words(ctr[i][0], ctr[i][1]);
    std::vector<double> la(u.size()), lb(u.size()), sa(u.size()), sb(u.size()), ca(u.size()), cb(u.size());
    unit_log(Backend::Scalar, u, la);
    unit_log(Backend::Avx2, u, lb);
    turn_sincos(Backend::Scalar, u, sa, ca);
    turn_sincos(Backend::Avx2, u, sb, cb);
    mismatches = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
        mismatches += !same_bits(la[i], lb[i]) + !same_bits(sa[i], sb[i]) + !same_bits(ca[i], cb[i]);
    CHECK(mismatches == 0);
}

TEST_CASE("normals have the standard moments") {
    const std::size_t n = 200000;
    std::vector<PhiloxCounter> ctr(n);
    for (std::uint32_t i = 0; i < n; ++i) ctr[i] = {i, 0, 0, 0};
    std::vector<double> z0(n), z1(n);
    normal_pairs(default_backend(), ctr, {1u, 2u}, z0, z1);
    double m1 = 0, m2 = 0, m4 = 0, cross = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (double z : {z0[i], z1[i]}) {
            m1 += z;
            m2 += z * z;
            m4 += z * z * z * z;
        }
        cross += z0[i] * z1[i];
    }
    const double N = 2.0 * n;
    // standard errors: 1/sqrt(N), sqrt(2/N), sqrt(96/N), 1/sqrt(n)
    CHECK(std::fabs(m1 / N) < 4.0 / std::sqrt(N));
    CHECK(std::fabs(m2 / N - 1.0) < 4.0 * std::sqrt(2.0 / N));
    CHECK(std::fabs(m4 / N - 3.0) < 4.0 * std::sqrt(96.0 / N));
    CHECK(std::fabs(cross / n) < 4.0 / std::sqrt(double(n)));
}

namespace {

std::vector<WalkRequest> requests_for(WalkKind kind, std::size_t n) {
    std::vector<WalkRequest> req(n);
    for (std::size_t i = 0; i < n; ++i) {
        req[i].path = static_cast<std::uint32_t>(i);
        req[i].tag = static_cast<std::uint32_t>(DrawRole::Walk);
        if (kind == WalkKind::Wedge) {
            req[i].start[0] = std::cos(0.4);
            req[i].start[1] = std::sin(0.4);
        } else if (kind == WalkKind::Cone3d) {
            req[i].start[2] = 1.0;
        } else {
            req[i].start[0] = 0.3;
            req[i].lo = 0.0;
            req[i].hi = i % 2 ? 1.0 : HUGE_VAL;
        }
    }
    return req;
}

}  // namespace

TEST_CASE("walk kernels agree bit for bit across backends") {
    if (!backend_available(Backend::Avx2)) return;
    struct Case {
        WalkKind kind;
        double angle;
    };
    for (Case c : {Case{WalkKind::Wedge, M_PI / 3}, Case{WalkKind::Wedge, 1.5 * M_PI}, Case{WalkKind::Cone3d, 1.0},
                   Case{WalkKind::Cone3d, 2.2}, Case{WalkKind::Interval, 0.0}}) {
        WalkSetup s;
        s.kind = c.kind;
        s.angle = c.angle;
        s.h = 1e-2;
        s.key = {99u, 7u};
        s.stream = 3;
        s.budget = 1'000'000;
        const auto req = requests_for(c.kind, 1001);
        std::vector<WalkResult> a(req.size()), b(req.size());
        run_walks(Backend::Scalar, s, req, a);
        run_walks(Backend::Avx2, s, req, b);
        int mismatches = 0;
        for (std::size_t i = 0; i < req.size(); ++i) {
            mismatches += !same_bits(a[i].time, b[i].time) || a[i].side != b[i].side || a[i].steps != b[i].steps ||
                          a[i].exhausted != b[i].exhausted;
            for (int k = 0; k < 3; ++k) mismatches += !same_bits(a[i].point[k], b[i].point[k]);
        }
        CAPTURE(static_cast<int>(c.kind));
        CAPTURE(c.angle);
        CHECK(mismatches == 0);
    }
}

TEST_CASE("a path's result does not depend on batch composition") {
    WalkSetup s;
    s.kind = WalkKind::Wedge;
    s.angle = M_PI / 2;
    s.h = 1e-2;
    s.key = {5u, 0u};
    auto req = requests_for(WalkKind::Wedge, 37);
    std::vector<WalkResult> all(req.size());
    run_walks(s, req, all);
    std::vector<WalkRequest> one{req[17]};
    std::vector<WalkResult> single(1);
    run_walks(s, one, single);
    CHECK(same_bits(single[0].time, all[17].time));
    CHECK(same_bits(single[0].point[0], all[17].point[0]));
}

TEST_CASE("walk exits land on the boundary and respect the budget") {
    WalkSetup s;
    s.kind = WalkKind::Wedge;
    s.angle = 1.5 * M_PI;
    s.h = 1e-2;
    auto req = requests_for(WalkKind::Wedge, 400);
    std::vector<WalkResult> r(req.size());
    run_walks(s, req, r);
    for (const auto& w : r) {
        REQUIRE(!w.exhausted);
        const double phi = std::atan2(w.point[1], w.point[0]);
        const double target = w.side == 0 ? 0.0 : std::remainder(s.angle, 2 * M_PI);
        CHECK(std::fabs(std::remainder(phi - target, 2 * M_PI)) < 1e-9);
    }

    s.kind = WalkKind::Cone3d;
    s.angle = 0.7;
    req = requests_for(WalkKind::Cone3d, 400);
    run_walks(s, req, r);
    for (const auto& w : r) {
        const double th = std::atan2(std::hypot(w.point[0], w.point[1]), w.point[2]);
        CHECK(std::fabs(th - s.angle) < 1e-9);
    }

    s.budget = 3;
    s.h = 1e-8;
    run_walks(s, req, r);
    for (const auto& w : r) {
        if (!w.exhausted) continue;
        CHECK(w.steps == 3);
    }
}

TEST_CASE("interval walk: ruin probability and mean exit time") {
    // BM from y in (0, 1): P(hit 1 first) = y, E tau = y (1 - y)
    WalkSetup s;
    s.kind = WalkKind::Interval;
    s.h = 1e-5;
    s.key = {2024u, 0u};
    const std::size_t n = 40000;
    std::vector<WalkRequest> req(n);
    for (std::size_t i = 0; i < n; ++i) {
        req[i].start[0] = 0.3;
        req[i].lo = 0.0;
        req[i].hi = 1.0;
        req[i].path = static_cast<std::uint32_t>(i);
    }
    std::vector<WalkResult> r(n);
    run_walks(s, req, r);
    double up = 0, t = 0, t2 = 0;
    for (const auto& w : r) {
        up += w.side;
        t += w.time;
        t2 += w.time * w.time;
        CHECK(w.point[0] == (w.side ? 1.0 : 0.0));
    }
    up /= n;
    t /= n;
    const double se_t = std::sqrt((t2 / n - t * t) / n);
    CHECK(std::fabs(up - 0.3) < 4.0 * std::sqrt(0.21 / n));
    // overshoot bias of the discretised walk is O(sqrt(h))
    CHECK(std::fabs(t - 0.21) < 4.0 * se_t + 0.5 * std::sqrt(s.h));
}
