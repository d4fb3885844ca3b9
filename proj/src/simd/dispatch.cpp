#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels.hpp"

namespace conexit::simd {

std::string_view to_string(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) {
    if (b == Backend::Scalar) return true;
#if defined(CONEXIT_HAVE_AVX2)
    static const bool has = __builtin_cpu_supports("avx2");
    return has;
#else
    return false;
#endif
}

Backend default_backend() {
    const char* env = std::getenv("CONEXIT_SIMD");
    if (env && std::string(env) == "scalar") return Backend::Scalar;
    return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

namespace {
void require(Backend b) {
    if (!backend_available(b)) throw std::runtime_error("SIMD backend " + std::string(to_string(b)) + " not available");
}
}  // namespace

#if defined(CONEXIT_HAVE_AVX2)
#define CONEXIT_DISPATCH(fn, ...)                                        \
    require(backend);                                                    \
    if (backend == Backend::Avx2) return detail::fn##_avx2(__VA_ARGS__); \
    return detail::fn##_scalar(__VA_ARGS__)
#else
#define CONEXIT_DISPATCH(fn, ...) \
    require(backend);             \
    return detail::fn##_scalar(__VA_ARGS__)
#endif

void run_walks(Backend backend, const WalkSetup& setup, std::span<const WalkRequest> requests,
               std::span<WalkResult> results) {
    CONEXIT_DISPATCH(run_walks, setup, requests, results);
}

void normal_pairs(Backend backend, std::span<const PhiloxCounter> counters, PhiloxKey key, std::span<double> z0,
                  std::span<double> z1) {
    CONEXIT_DISPATCH(normal_pairs, counters, key, z0, z1);
}

void unit_log(Backend backend, std::span<const double> u, std::span<double> out) {
    CONEXIT_DISPATCH(unit_log, u, out);
}

void turn_sincos(Backend backend, std::span<const double> x, std::span<double> s, std::span<double> c) {
    CONEXIT_DISPATCH(turn_sincos, x, s, c);
}

}  // namespace conexit::simd
