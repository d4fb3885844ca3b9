#pragma once

#include <immintrin.h>

#include <cstdint>

// Only included from translation units built with -mavx2 (and without -mfma).

namespace conexit::simd {

struct F4 {
    __m256d v;
};
struct U4 {
    __m256i v;
};
struct M4 {
    __m256d v;
};

inline F4 operator+(F4 a, F4 b) { return {_mm256_add_pd(a.v, b.v)}; }
inline F4 operator-(F4 a, F4 b) { return {_mm256_sub_pd(a.v, b.v)}; }
inline F4 operator*(F4 a, F4 b) { return {_mm256_mul_pd(a.v, b.v)}; }
inline F4 operator/(F4 a, F4 b) { return {_mm256_div_pd(a.v, b.v)}; }
inline F4 operator+(F4 a, double b) { return a + F4{_mm256_set1_pd(b)}; }
inline F4 operator-(F4 a, double b) { return a - F4{_mm256_set1_pd(b)}; }
inline F4 operator*(F4 a, double b) { return a * F4{_mm256_set1_pd(b)}; }
inline F4 operator/(F4 a, double b) { return a / F4{_mm256_set1_pd(b)}; }
inline F4 operator+(double a, F4 b) { return F4{_mm256_set1_pd(a)} + b; }
inline F4 operator-(double a, F4 b) { return F4{_mm256_set1_pd(a)} - b; }
inline F4 operator*(double a, F4 b) { return F4{_mm256_set1_pd(a)} * b; }
inline F4 operator-(F4 a) { return {_mm256_xor_pd(a.v, _mm256_set1_pd(-0.0))}; }

inline U4 operator^(U4 a, U4 b) { return {_mm256_xor_si256(a.v, b.v)}; }
inline U4 operator&(U4 a, U4 b) { return {_mm256_and_si256(a.v, b.v)}; }
inline U4 operator|(U4 a, U4 b) { return {_mm256_or_si256(a.v, b.v)}; }
inline U4 operator+(U4 a, U4 b) { return {_mm256_add_epi64(a.v, b.v)}; }
inline U4 operator<<(U4 a, int n) { return {_mm256_slli_epi64(a.v, n)}; }
inline U4 operator>>(U4 a, int n) { return {_mm256_srli_epi64(a.v, n)}; }

struct Avx2Backend {
    static constexpr int kLanes = 4;
    using F = F4;
    using U = U4;
    using M = M4;

    static F load(const double* p) { return {_mm256_load_pd(p)}; }
    static void store(double* p, F v) { _mm256_store_pd(p, v.v); }
    static U uload(const std::uint64_t* p) { return {_mm256_load_si256(reinterpret_cast<const __m256i*>(p))}; }
    static F set1(double v) { return {_mm256_set1_pd(v)}; }
    static U uset1(std::uint64_t v) { return {_mm256_set1_epi64x(static_cast<long long>(v))}; }

    static F sqrt(F a) { return {_mm256_sqrt_pd(a.v)}; }
    static F abs(F a) { return {_mm256_andnot_pd(_mm256_set1_pd(-0.0), a.v)}; }
    // operand order matches the scalar ternaries: max(a, b) = a > b ? a : b
    static F max(F a, F b) { return select(gt(a, b), a, b); }
    static F min(F a, F b) { return select(M{_mm256_cmp_pd(a.v, b.v, _CMP_LT_OQ)}, a, b); }
    static F round(F a) { return {_mm256_round_pd(a.v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC)}; }

    static M gt(F a, F b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_GT_OQ)}; }
    static M ge(F a, F b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_GE_OQ)}; }
    static M le(F a, F b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_LE_OQ)}; }
    static M eq(F a, F b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_EQ_OQ)}; }
    static M mand(M a, M b) { return {_mm256_and_pd(a.v, b.v)}; }
    static M mor(M a, M b) { return {_mm256_or_pd(a.v, b.v)}; }
    static F select(M m, F a, F b) { return {_mm256_blendv_pd(b.v, a.v, m.v)}; }

    static F as_f(U u) { return {_mm256_castsi256_pd(u.v)}; }
    static U as_u(F f) { return {_mm256_castpd_si256(f.v)}; }

    static void mulhilo(U a, std::uint32_t m, U& lo, U& hi) {
        const __m256i p = _mm256_mul_epu32(a.v, _mm256_set1_epi64x(m));
        lo = {_mm256_and_si256(p, _mm256_set1_epi64x(0xFFFFFFFFll))};
        hi = {_mm256_srli_epi64(p, 32)};
    }
};

}  // namespace conexit::simd
