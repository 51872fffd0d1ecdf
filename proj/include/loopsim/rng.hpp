#pragma once

#include <cstdint>

namespace loopsim::rng {

// Counter-based randomness. Every uniform is a pure function of
// (seed, stream index, draw index), so any gate's draws can be generated
// without touching any other gate. This is what makes the simulator's
// output independent of worker count and of how many gates are skipped:
// there is no shared generator state to advance.
//
// Scheme, fixed for reproducibility:
//   mix64      : the SplitMix64 finalizer (bijective).
//   draw k of a stream with base b:  mix64(b + (k+1)*kGolden),
//                which is exactly the SplitMix64 sequence seeded at b.
//   stream base: mix64(seed ^ mix64(index + salt)), with one salt per
//                stream family so families can never alias.

inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline constexpr uint64_t kGateSalt = 0x632a7b4d8f11e301ull;  ///< per-gate content streams
inline constexpr uint64_t kSkipSalt = 0xc8d03aa55be2f977ull;  ///< per-block skip-walk streams
inline constexpr uint64_t kChildSalt = 0x1f83d9abfb41bd6bull; ///< derived run seeds

constexpr uint64_t mix64(uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

constexpr uint64_t stream_base(uint64_t seed, uint64_t index, uint64_t salt) {
    return mix64(seed ^ mix64(index + salt));
}

/// Draw k (0-based) of the SplitMix64 sequence seeded at base.
constexpr uint64_t bits_at(uint64_t base, uint64_t k) {
    return mix64(base + (k + 1) * kGolden);
}

/// Map 64 bits to [0, 1) on the 2^-53 grid.
constexpr double to_unit(uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential view of one stream.
struct Stream {
    uint64_t base = 0;
    uint64_t k = 0;

    uint64_t next_bits() { return bits_at(base, k++); }
    double next_unit() { return to_unit(next_bits()); }
};

inline Stream gate_stream(uint64_t seed, uint64_t gate) {
    return Stream{stream_base(seed, gate, kGateSalt)};
}

inline Stream skip_stream(uint64_t seed, uint64_t block) {
    return Stream{stream_base(seed, block, kSkipSalt)};
}

/// Decorrelated seed for a derived run (one scan point, one analyzer
/// setting). Documented so result files can name the effective seed.
constexpr uint64_t child_seed(uint64_t seed, uint64_t index) {
    return mix64(seed ^ mix64(index + kChildSalt));
}

// Pin the generator to the published SplitMix64 sequence for seed 0.
static_assert(bits_at(0, 0) == 0xe220a8397b1dcdafull);
static_assert(bits_at(0, 1) == 0x6e789e6aa1b965f4ull);
static_assert(bits_at(0, 2) == 0x06c45d188009454full);
static_assert(to_unit(0) == 0.0);
static_assert(to_unit(~0ull) < 1.0);

} // namespace loopsim::rng
