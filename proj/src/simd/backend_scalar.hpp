#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

namespace conexit::simd {

// One-lane backend for walk_impl.hpp. Every operation is a single IEEE
// operation so it rounds exactly like its AVX2 counterpart.
struct ScalarBackend {
    static constexpr int kLanes = 1;
    using F = double;
    using U = std::uint64_t;
    using M = bool;

    static F load(const double* p) { return *p; }
    static void store(double* p, F v) { *p = v; }
    static U uload(const std::uint64_t* p) { return *p; }
    static F set1(double v) { return v; }
    static U uset1(std::uint64_t v) { return v; }

    static F sqrt(F a) { return std::sqrt(a); }
    static F abs(F a) { return std::fabs(a); }
    static F max(F a, F b) { return a > b ? a : b; }
    static F min(F a, F b) { return a < b ? a : b; }
    static F round(F a) { return std::nearbyint(a); }

    static M gt(F a, F b) { return a > b; }
    static M ge(F a, F b) { return a >= b; }
    static M le(F a, F b) { return a <= b; }
    static M eq(F a, F b) { return a == b; }
    static M mand(M a, M b) { return a && b; }
    static M mor(M a, M b) { return a || b; }
    static F select(M m, F a, F b) { return m ? a : b; }

    static F as_f(U u) { return std::bit_cast<double>(u); }
    static U as_u(F f) { return std::bit_cast<std::uint64_t>(f); }

    // 32 x 32 -> 64 product of the low words, split into words.
    static void mulhilo(U a, std::uint32_t m, U& lo, U& hi) {
        const std::uint64_t p = (a & 0xFFFFFFFFull) * m;
        lo = p & 0xFFFFFFFFull;
        hi = p >> 32;
    }
};

}  // namespace conexit::simd
