#pragma once

// Backend-generic kernels. Included by exactly one translation unit per
// backend; everything sits in an anonymous namespace so the AVX2 build of
// these templates never leaks into the scalar object through the linker.
//
// A backend B supplies F (doubles), U (64-bit lanes holding 32-bit words) and
// M (masks) plus the operations used below. Both backends evaluate the same
// expression trees without contraction, so results match bit for bit.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>

#include "conexit/rng.hpp"
#include "conexit/simd/walk.hpp"

namespace conexit::simd {
namespace {

template <class B>
struct Words {
    typename B::U w0, w1, w2, w3;
};

template <class B>
Words<B> philox(typename B::U c0, typename B::U c1, typename B::U c2, typename B::U c3, PhiloxKey key) {
    using U = typename B::U;
    const U mask = B::uset1(0xFFFFFFFFull);
    U k0 = B::uset1(key[0]);
    U k1 = B::uset1(key[1]);
    const U w0 = B::uset1(kPhiloxW0);
    const U w1 = B::uset1(kPhiloxW1);
    for (int round = 0; round < 10; ++round) {
        U lo0, hi0, lo1, hi1;
        B::mulhilo(c0, kPhiloxM0, lo0, hi0);
        B::mulhilo(c2, kPhiloxM1, lo1, hi1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 = (k0 + w0) & mask;
        k1 = (k1 + w1) & mask;
    }
    return {c0, c1, c2, c3};
}

template <class B>
typename B::F uniform(typename B::U hi, typename B::U lo) {
    const typename B::U bits = (((hi << 32) | lo) >> 12) | B::uset1(0x3FF0000000000000ull);
    return B::set1(2.0) - B::as_f(bits);
}

// log(u) for normal positive u. Exponent split, mantissa folded into
// [sqrt(1/2), sqrt(2)), atanh series in s = (m-1)/(m+1).
template <class B>
typename B::F unit_log(typename B::F u) {
    using F = typename B::F;
    using U = typename B::U;
    const U bits = B::as_u(u);
    F e = B::as_f((bits >> 52) | B::uset1(0x4330000000000000ull)) - 4503599627370496.0 - 1023.0;
    F m = B::as_f((bits & B::uset1(0x000FFFFFFFFFFFFFull)) | B::uset1(0x3FF0000000000000ull));
    const auto big = B::gt(m, B::set1(1.4142135623730951));
    m = B::select(big, m * 0.5, m);
    e = B::select(big, e + 1.0, e);
    const F s = (m - 1.0) / (m + 1.0);
    const F z = s * s;
    F p = B::set1(1.0 / 23.0);
    p = p * z + 1.0 / 21.0;
    p = p * z + 1.0 / 19.0;
    p = p * z + 1.0 / 17.0;
    p = p * z + 1.0 / 15.0;
    p = p * z + 1.0 / 13.0;
    p = p * z + 1.0 / 11.0;
    p = p * z + 1.0 / 9.0;
    p = p * z + 1.0 / 7.0;
    p = p * z + 1.0 / 5.0;
    p = p * z + 1.0 / 3.0;
    const F logm = (s + s * (z * p)) * 2.0;
    return e * 6.93147180369123816490e-01 + (e * 1.90821492927058770002e-10 + logm);
}

// sin and cos of 2 pi x for x in [0, 1].
template <class B>
void turn_sincos(typename B::F x, typename B::F& s, typename B::F& c) {
    using F = typename B::F;
    const F q = B::round(x * 4.0);
    const F a = (x - q * 0.25) * 6.283185307179586;
    const F a2 = a * a;
    F sp = B::set1(-1.0 / 355687428096000.0);  // -1/17!
    sp = sp * a2 + 1.0 / 1307674368000.0;
    sp = sp * a2 - 1.0 / 6227020800.0;
    sp = sp * a2 + 1.0 / 39916800.0;
    sp = sp * a2 - 1.0 / 362880.0;
    sp = sp * a2 + 1.0 / 5040.0;
    sp = sp * a2 - 1.0 / 120.0;
    sp = sp * a2 + 1.0 / 6.0;
    const F sn = a - a * (a2 * sp);
    F cp = B::set1(1.0 / 20922789888000.0);  // 1/16!
    cp = cp * a2 - 1.0 / 87178291200.0;
    cp = cp * a2 + 1.0 / 479001600.0;
    cp = cp * a2 - 1.0 / 3628800.0;
    cp = cp * a2 + 1.0 / 40320.0;
    cp = cp * a2 - 1.0 / 720.0;
    cp = cp * a2 + 1.0 / 24.0;
    cp = cp * a2 - 1.0 / 2.0;
    const F cs = 1.0 + a2 * cp;
    const auto q1 = B::eq(q, B::set1(1.0));
    const auto q2 = B::eq(q, B::set1(2.0));
    const auto q3 = B::eq(q, B::set1(3.0));
    s = B::select(q1, cs, B::select(q2, -sn, B::select(q3, -cs, sn)));
    c = B::select(q1, -sn, B::select(q2, -cs, B::select(q3, sn, cs)));
}

template <class B>
void normal_pair(typename B::U c0, typename B::U c1, typename B::U c2, typename B::U c3, PhiloxKey key,
                 typename B::F& z0, typename B::F& z1) {
    using F = typename B::F;
    const Words<B> w = philox<B>(c0, c1, c2, c3, key);
    const F u1 = uniform<B>(w.w0, w.w1);
    const F u2 = uniform<B>(w.w2, w.w3);
    const F r = B::sqrt(unit_log<B>(u1) * -2.0);
    F s, c;
    turn_sincos<B>(u2, s, c);
    z0 = r * c;
    z1 = r * s;
}

// Per-lane state, structure of arrays.
template <int L>
struct Lanes {
    alignas(32) double x[L], y[L], z[L], t[L], lo[L], hi[L];
    alignas(32) std::uint64_t step[L], tag[L], path[L];
    // kernel outputs
    alignas(32) double nx[L], ny[L], nz[L], dt[L], exited[L], lam[L], side[L];
};

struct Geometry {
    double ca = 1.0, sa = 0.0;  // wedge: cos/sin of the aperture; cone: cos/sin of theta0
    bool reflex = false;        // wedge aperture above pi
    double inv_kappa = 0.2;
    double h = 1e-3;
};

template <class B>
void step_wedge(const WalkSetup& setup, const Geometry& g, Lanes<B::kLanes>& st, int i) {
    using F = typename B::F;
    const F x = B::load(st.x + i);
    const F y = B::load(st.y + i);
    const F zero = B::set1(0.0);
    const F r = B::sqrt(x * x + y * y);
    const F u = x * g.ca + y * g.sa;
    const F f1 = x * g.sa - y * g.ca;
    const F d0 = B::select(B::gt(x, zero), B::abs(y), r);
    const F d1 = B::select(B::gt(u, zero), B::abs(f1), r);
    const F q = B::min(d0, d1) * g.inv_kappa;
    const F dt = B::max(B::set1(g.h), q * q);
    const F sd = B::sqrt(dt);

    F z0, z1;
    normal_pair<B>(B::uload(st.step + i), B::uload(st.tag + i), B::uload(st.path + i), B::uset1(setup.stream),
                   setup.key, z0, z1);
    const F nx = x + sd * z0;
    const F ny = y + sd * z1;
    const F g1 = nx * g.sa - ny * g.ca;

    const auto out0 = B::le(ny, zero);
    const auto out1 = B::le(g1, zero);
    const F l0 = y / (y - ny);
    const F l1 = f1 / (f1 - g1);
    F lam, side;
    typename B::M exited;
    if (!g.reflex) {
        exited = B::mor(out0, out1);
        // both crossed: the earlier one; otherwise whichever crossed
        const F big = B::set1(2.0);
        const F a0 = B::select(out0, l0, big);
        const F a1 = B::select(out1, l1, big);
        const auto first1 = B::gt(a0, a1);
        lam = B::select(first1, a1, a0);
        side = B::select(first1, B::set1(1.0), zero);
    } else {
        exited = B::mand(out0, out1);
        // leave the union of the two half planes: the later of the crossings
        // of those half planes the previous point was in
        const F a0 = B::select(B::gt(y, zero), l0, B::set1(-1.0));
        const F a1 = B::select(B::gt(f1, zero), l1, B::set1(-1.0));
        const auto last1 = B::gt(a1, a0);
        lam = B::select(last1, a1, a0);
        side = B::select(last1, B::set1(1.0), zero);
    }
    B::store(st.nx + i, nx);
    B::store(st.ny + i, ny);
    B::store(st.nz + i, zero);
    B::store(st.dt + i, dt);
    B::store(st.exited + i, B::select(exited, B::set1(1.0), zero));
    B::store(st.lam + i, lam);
    B::store(st.side + i, side);
}

template <class B>
void step_cone3d(const WalkSetup& setup, const Geometry& g, Lanes<B::kLanes>& st, int i) {
    using F = typename B::F;
    using U = typename B::U;
    const F x = B::load(st.x + i);
    const F y = B::load(st.y + i);
    const F z = B::load(st.z + i);
    const F zero = B::set1(0.0);
    const F rp = B::sqrt(x * x + y * y);
    const F r = B::sqrt(x * x + y * y + z * z);
    const F f = z * g.sa - rp * g.ca;
    const F proj = z * g.ca + rp * g.sa;
    const F q = B::select(B::gt(proj, zero), B::abs(f), r) * g.inv_kappa;
    const F dt = B::max(B::set1(g.h), q * q);
    const F sd = B::sqrt(dt);

    const U c0 = B::uload(st.step + i);
    const U tag = B::uload(st.tag + i);
    const U c2 = B::uload(st.path + i);
    const U c3 = B::uset1(setup.stream);
    F z0, z1, z2, unused;
    normal_pair<B>(c0, tag, c2, c3, setup.key, z0, z1);
    normal_pair<B>(c0, tag | B::uset1(1u << 4), c2, c3, setup.key, z2, unused);
    const F nx = x + sd * z0;
    const F ny = y + sd * z1;
    const F nz = z + sd * z2;
    const F nrp = B::sqrt(nx * nx + ny * ny);
    const F nf = nz * g.sa - nrp * g.ca;

    B::store(st.nx + i, nx);
    B::store(st.ny + i, ny);
    B::store(st.nz + i, nz);
    B::store(st.dt + i, dt);
    B::store(st.exited + i, B::select(B::le(nf, zero), B::set1(1.0), zero));
    B::store(st.lam + i, f / (f - nf));
    B::store(st.side + i, zero);
}

template <class B>
void step_interval(const WalkSetup& setup, const Geometry& g, Lanes<B::kLanes>& st, int i) {
    using F = typename B::F;
    const F y = B::load(st.x + i);
    const F lo = B::load(st.lo + i);
    const F hi = B::load(st.hi + i);
    const F zero = B::set1(0.0);
    const F dlo = y - lo;
    const F dhi = hi - y;
    const F q = B::min(dlo, dhi) * g.inv_kappa;
    const F dt = B::max(B::set1(g.h), q * q);
    const F sd = B::sqrt(dt);

    F z0, z1;
    normal_pair<B>(B::uload(st.step + i), B::uload(st.tag + i), B::uload(st.path + i), B::uset1(setup.stream),
                   setup.key, z0, z1);
    const F ny = y + sd * z0;
    const auto below = B::le(ny, lo);
    const auto above = B::ge(ny, hi);
    B::store(st.nx + i, ny);
    B::store(st.ny + i, zero);
    B::store(st.nz + i, zero);
    B::store(st.dt + i, dt);
    B::store(st.exited + i, B::select(B::mor(below, above), B::set1(1.0), zero));
    B::store(st.lam + i, B::select(above, dhi / (ny - y), dlo / (y - ny)));
    B::store(st.side + i, B::select(above, B::set1(1.0), zero));
}

// Exact crossing of the segment p + lam d with the cone surface: first root in
// [0, 1] of s^2 z^2 - c^2 (x^2 + y^2) on the nappe the cone is bounded by.
// Falls back to the chord estimate when roundoff hides the root.
double cone_crossing(const Geometry& g, const double* p, const double* d, double fallback) {
    const double s2 = g.sa * g.sa, c2 = g.ca * g.ca;
    const double a = s2 * d[2] * d[2] - c2 * (d[0] * d[0] + d[1] * d[1]);
    const double b = 2.0 * (s2 * p[2] * d[2] - c2 * (p[0] * d[0] + p[1] * d[1]));
    const double c = s2 * p[2] * p[2] - c2 * (p[0] * p[0] + p[1] * p[1]);
    double roots[2];
    int n = 0;
    if (a == 0.0) {
        if (b != 0.0) roots[n++] = -c / b;
    } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
            roots[n++] = q / a;
            if (q != 0.0) roots[n++] = c / q;
        }
    }
    if (n == 2 && roots[1] < roots[0]) std::swap(roots[0], roots[1]);
    for (int k = 0; k < n; ++k) {
        const double lam = roots[k];
        if (!(lam >= 0.0 && lam <= 1.0)) continue;
        const double x = p[0] + lam * d[0], y = p[1] + lam * d[1], z = p[2] + lam * d[2];
        if (z * g.ca + std::sqrt(x * x + y * y) * g.sa >= 0.0) return lam;
    }
    return fallback;
}

template <class B>
void run_walks_impl(const WalkSetup& setup, std::span<const WalkRequest> requests, std::span<WalkResult> results) {
    constexpr int L = B::kLanes;
    if (results.size() < requests.size()) throw std::invalid_argument("run_walks: results shorter than requests");
    if (requests.empty()) return;
    if (!(setup.h > 0.0) || !(setup.kappa > 0.0)) throw std::invalid_argument("run_walks: need h > 0 and kappa > 0");

    Geometry g;
    g.inv_kappa = 1.0 / setup.kappa;
    g.h = setup.h;
    if (setup.kind != WalkKind::Interval) {
        g.ca = std::cos(setup.angle);
        g.sa = std::sin(setup.angle);
        g.reflex = setup.kind == WalkKind::Wedge && setup.angle > M_PI;
    }
    void (*kernel)(const WalkSetup&, const Geometry&, Lanes<L>&, int) =
        setup.kind == WalkKind::Wedge    ? &step_wedge<B>
        : setup.kind == WalkKind::Cone3d ? &step_cone3d<B>
                                         : &step_interval<B>;
    const bool interval = setup.kind == WalkKind::Interval;

    Lanes<L> st;
    std::ptrdiff_t owner[L];
    std::size_t next = 0;
    int active = 0;
    auto load = [&](int l, const WalkRequest& r) {
        st.x[l] = r.start[0];
        st.y[l] = r.start[1];
        st.z[l] = r.start[2];
        st.t[l] = 0.0;
        st.lo[l] = r.lo;
        st.hi[l] = r.hi;
        st.step[l] = 0;
        st.tag[l] = r.tag;
        st.path[l] = r.path;
    };
    auto refill = [&](int l) {
        if (next < requests.size()) {
            load(l, requests[next]);
            owner[l] = static_cast<std::ptrdiff_t>(next++);
            ++active;
        } else {
            load(l, requests.front());  // idle lane keeps a valid state
            owner[l] = -1;
        }
    };
    for (int l = 0; l < L; ++l) refill(l);

    while (active > 0) {
        kernel(setup, g, st, 0);
        for (int l = 0; l < L; ++l) {
            if (owner[l] < 0) continue;
            ++st.step[l];
            WalkResult& out = results[static_cast<std::size_t>(owner[l])];
            if (st.exited[l] != 0.0) {
                double lam = st.lam[l];
                if (setup.kind == WalkKind::Cone3d) {
                    const double p[3] = {st.x[l], st.y[l], st.z[l]};
                    const double d[3] = {st.nx[l] - st.x[l], st.ny[l] - st.y[l], st.nz[l] - st.z[l]};
                    lam = cone_crossing(g, p, d, lam);
                }
                out.time = st.t[l] + lam * st.dt[l];
                if (interval) {
                    out.point[0] = st.side[l] != 0.0 ? st.hi[l] : st.lo[l];
                    out.point[1] = out.point[2] = 0.0;
                } else {
                    out.point[0] = st.x[l] + lam * (st.nx[l] - st.x[l]);
                    out.point[1] = st.y[l] + lam * (st.ny[l] - st.y[l]);
                    out.point[2] = st.z[l] + lam * (st.nz[l] - st.z[l]);
                }
                out.side = static_cast<int>(st.side[l]);
                out.steps = st.step[l];
                out.exhausted = false;
                --active;
                refill(l);
                continue;
            }
            st.x[l] = st.nx[l];
            st.y[l] = st.ny[l];
            st.z[l] = st.nz[l];
            st.t[l] += st.dt[l];
            if (st.step[l] >= setup.budget) {
                out.time = st.t[l];
                out.point[0] = st.x[l];
                out.point[1] = st.y[l];
                out.point[2] = st.z[l];
                out.side = 0;
                out.steps = st.step[l];
                out.exhausted = true;
                --active;
                refill(l);
            }
        }
    }
}

// Test hooks: pad partial chunks with harmless inputs.
template <class B>
void normal_pairs_impl(std::span<const PhiloxCounter> counters, PhiloxKey key, std::span<double> z0,
                       std::span<double> z1) {
    constexpr int L = B::kLanes;
    if (z0.size() < counters.size() || z1.size() < counters.size())
        throw std::invalid_argument("normal_pairs: output too short");
    alignas(32) std::uint64_t c[4][L];
    alignas(32) double a[L], b[L];
    for (std::size_t i = 0; i < counters.size(); i += L) {
        for (int l = 0; l < L; ++l) {
            const std::size_t k = i + l < counters.size() ? i + l : i;
            for (int w = 0; w < 4; ++w) c[w][l] = counters[k][w];
        }
        typename B::F f0, f1;
        normal_pair<B>(B::uload(c[0]), B::uload(c[1]), B::uload(c[2]), B::uload(c[3]), key, f0, f1);
        B::store(a, f0);
        B::store(b, f1);
        for (int l = 0; l < L && i + l < counters.size(); ++l) {
            z0[i + l] = a[l];
            z1[i + l] = b[l];
        }
    }
}

template <class B>
void unit_log_impl(std::span<const double> u, std::span<double> out) {
    constexpr int L = B::kLanes;
    if (out.size() < u.size()) throw std::invalid_argument("unit_log: output too short");
    alignas(32) double buf[L];
    for (std::size_t i = 0; i < u.size(); i += L) {
        for (int l = 0; l < L; ++l) buf[l] = i + l < u.size() ? u[i + l] : 1.0;
        B::store(buf, unit_log<B>(B::load(buf)));
        for (int l = 0; l < L && i + l < u.size(); ++l) out[i + l] = buf[l];
    }
}

template <class B>
void turn_sincos_impl(std::span<const double> x, std::span<double> s, std::span<double> c) {
    constexpr int L = B::kLanes;
    if (s.size() < x.size() || c.size() < x.size()) throw std::invalid_argument("turn_sincos: output too short");
    alignas(32) double buf[L], sb[L], cb[L];
    for (std::size_t i = 0; i < x.size(); i += L) {
        for (int l = 0; l < L; ++l) buf[l] = i + l < x.size() ? x[i + l] : 0.0;
        typename B::F fs, fc;
        turn_sincos<B>(B::load(buf), fs, fc);
        B::store(sb, fs);
        B::store(cb, fc);
        for (int l = 0; l < L && i + l < x.size(); ++l) {
            s[i + l] = sb[l];
            c[i + l] = cb[l];
        }
    }
}

}  // namespace
}  // namespace conexit::simd

#define CONEXIT_DEFINE_BACKEND(suffix, Backend)                                                                  \
    namespace conexit::simd::detail {                                                                            \
    void run_walks_##suffix(const WalkSetup& setup, std::span<const WalkRequest> requests,                      \
                            std::span<WalkResult> results) {                                                     \
        run_walks_impl<Backend>(setup, requests, results);                                                       \
    }                                                                                                            \
    void normal_pairs_##suffix(std::span<const PhiloxCounter> counters, PhiloxKey key, std::span<double> z0,     \
                               std::span<double> z1) {                                                           \
        normal_pairs_impl<Backend>(counters, key, z0, z1);                                                       \
    }                                                                                                            \
    void unit_log_##suffix(std::span<const double> u, std::span<double> out) { unit_log_impl<Backend>(u, out); } \
    void turn_sincos_##suffix(std::span<const double> x, std::span<double> s, std::span<double> c) {             \
        turn_sincos_impl<Backend>(x, s, c);                                                                      \
    }                                                                                                            \
    }
