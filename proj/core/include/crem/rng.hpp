#pragma once

#include <cstdint>

namespace crem {

// Counter-based deterministic randomness. Every random quantity in the field
// is a pure function of a 128-bit stream key, so values can be recomputed in
// any order, from any thread, without shared state.

// SplitMix64 finalizer; full-avalanche 64-bit mixer.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

struct StreamKey {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    friend bool operator==(const StreamKey& a, const StreamKey& b) {
        return a.hi == b.hi && a.lo == b.lo;
    }
};

inline StreamKey root_key(std::uint64_t seed) {
    return {mix64(seed ^ 0x9e3779b97f4a7c15ULL), mix64(seed + 0x6a09e667f3bcc909ULL)};
}

// Child stream derivation: absorb one path bit. Distinct odd constants per
// bit keep sibling streams decorrelated; the cross-lane rotate couples the
// two words so 64-bit lane collisions do not collapse the whole key.
inline StreamKey child_key(const StreamKey& k, unsigned bit) {
    const std::uint64_t c = bit ? 0xd6e8feb86659fd93ULL : 0xa5a3564e2e347d3bULL;
    const std::uint64_t d = bit ? 0x8f462907bcab2bf5ULL : 0xc2b2ae3d27d4eb4fULL;
    const std::uint64_t s = k.lo + c;
    const std::uint64_t a = mix64(s ^ k.hi);
    const std::uint64_t b = mix64(k.hi + d + ((s << 29) | (s >> 35)));
    return {b, a};
}

inline std::uint64_t draw_u64(const StreamKey& k, std::uint64_t salt) {
    return mix64(k.lo ^ mix64(k.hi + salt));
}

// Uniform in the open interval (0,1): 53 mantissa bits centered in the cell,
// so 0 and 1 are unreachable and the normal inverse below never overflows.
inline double draw_unit(const StreamKey& k, std::uint64_t salt) {
    return (static_cast<double>(draw_u64(k, salt) >> 11) + 0.5) * 0x1p-53;
}

// Inverse of the standard normal CDF, Wichura's PPND16 (algorithm AS 241),
// relative error below 1e-15 over the full open interval.
double inv_normal_cdf(double p);

inline double draw_normal(const StreamKey& k, std::uint64_t salt) {
    return inv_normal_cdf(draw_unit(k, salt));
}

// Derives independent experiment seeds from a base seed; used for per-cell
// and per-sample fan-out so sweep layout changes never shift other cells.
inline std::uint64_t fanout_seed(std::uint64_t base, std::uint64_t index) {
    return mix64(base + 0x9e3779b97f4a7c15ULL * (index + 1));
}

} // namespace crem
