#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string_view>

namespace conexit {

// Philox4x32 with 10 rounds (Salmon et al., SC'11). Pure function of
// (counter, key); every draw in the library is addressed by its counter.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * c[0];
        const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * c[2];
        c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
        k[0] += kPhiloxW0;
        k[1] += kPhiloxW1;
    }
    return c;
}

inline constexpr std::string_view kRngAlgorithm = "philox4x32-10";

// Provenance of a batch: the 64-bit seed is the Philox key; `streams` is the
// number of logical workers, stream w owning a contiguous block of paths.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint32_t streams = 1;

    PhiloxKey key() const { return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}; }
};

// Roles of the draws of one path; part of the counter.
enum class DrawRole : std::uint32_t {
    Walk = 0,       // BM walk (X- for IBM)
    WalkPlus = 1,   // X+ walk of IBM
    SideCoin = 2,   // exit-side Bernoulli of IBM
    Clock = 3,      // walk of the 1-D clock
    Tangent = 4,    // tangential coordinates for half-spaces
};

// Uniform in (0, 1] from the top 52 bits of (hi:lo).
inline double uniform_from_words(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32 | lo) >> 12) | 0x3FF0000000000000ull;
    return 2.0 - std::bit_cast<double>(bits);
}

}  // namespace conexit
