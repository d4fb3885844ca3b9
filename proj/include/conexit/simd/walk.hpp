#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "conexit/rng.hpp"

namespace conexit::simd {

// Adaptive Euler walks of Brownian motion until it leaves a domain. The step
// is dt = max(h, (d / kappa)^2) with d the distance to the boundary; the
// first step that lands outside is cut at the linearly interpolated crossing.
//
// Each path draws its normals from Philox with counter
//   {step, tag | call << 4, path, stream}
// so a path's result does not depend on which lane or thread ran it. The
// scalar and AVX2 kernels perform the same IEEE operations in the same order
// and agree bit for bit.

enum class WalkKind {
    Wedge,     // planar wedge {0 < phi < a}, Cartesian (x, y)
    Cone3d,    // circular cone about +z with half angle theta0
    Interval,  // 1-D interval (lo, hi); hi may be +inf
};

struct WalkSetup {
    WalkKind kind = WalkKind::Wedge;
    double h = 1e-3;
    double kappa = 5.0;
    std::uint64_t budget = 100'000'000;  // steps per path
    PhiloxKey key{};
    std::uint32_t stream = 0;
    double angle = 0.0;  // wedge aperture or cone half angle
};

struct WalkRequest {
    double start[3] = {0.0, 0.0, 0.0};
    double lo = 0.0, hi = 0.0;  // interval walks
    std::uint32_t path = 0;
    std::uint32_t tag = 0;      // role | attempt << 8
};

struct WalkResult {
    double time = 0.0;
    double point[3] = {0.0, 0.0, 0.0};
    int side = 0;               // wedge: ray 0 or 1; interval: 0 = lo, 1 = hi
    std::uint64_t steps = 0;
    bool exhausted = false;     // budget hit before exit; time/point hold the last state
};

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend b);

bool backend_available(Backend b);

// AVX2 when the CPU has it, unless CONEXIT_SIMD=scalar.
Backend default_backend();

void run_walks(Backend backend, const WalkSetup& setup, std::span<const WalkRequest> requests,
               std::span<WalkResult> results);

inline void run_walks(const WalkSetup& setup, std::span<const WalkRequest> requests, std::span<WalkResult> results) {
    run_walks(default_backend(), setup, requests, results);
}

// Box-Muller normals shared by both backends, exposed for testing. Element i
// of the outputs comes from Philox(counter_i, key).
void normal_pairs(Backend backend, std::span<const PhiloxCounter> counters, PhiloxKey key, std::span<double> z0,
                  std::span<double> z1);

// The polynomial log and sin/cos(2 pi x) of the normal generator.
void unit_log(Backend backend, std::span<const double> u, std::span<double> out);
void turn_sincos(Backend backend, std::span<const double> x, std::span<double> s, std::span<double> c);

}  // namespace conexit::simd
