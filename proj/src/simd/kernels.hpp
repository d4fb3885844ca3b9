#pragma once

#include <span>

#include "conexit/simd/walk.hpp"

namespace conexit::simd::detail {

#define CONEXIT_DECLARE_BACKEND(suffix)                                                                          \
    void run_walks_##suffix(const WalkSetup& setup, std::span<const WalkRequest> requests,                      \
                            std::span<WalkResult> results);                                                      \
    void normal_pairs_##suffix(std::span<const PhiloxCounter> counters, PhiloxKey key, std::span<double> z0,     \
                               std::span<double> z1);                                                            \
    void unit_log_##suffix(std::span<const double> u, std::span<double> out);                                    \
    void turn_sincos_##suffix(std::span<const double> x, std::span<double> s, std::span<double> c);

CONEXIT_DECLARE_BACKEND(scalar)
#if defined(CONEXIT_HAVE_AVX2)
CONEXIT_DECLARE_BACKEND(avx2)
#endif

#undef CONEXIT_DECLARE_BACKEND

}  // namespace conexit::simd::detail
