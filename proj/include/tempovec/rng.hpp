#pragma once

#include <cstdint>

namespace tempovec {

// splitmix64 (Vigna). Chosen over <random> engines because the standard
// distributions are not bit-reproducible across library implementations,
// and every seeded path in this project promises byte-identical reruns.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n >= 1. Modulo bias is < n / 2^64 and is
    // irrelevant for the n values used here (vocab sizes, window widths).
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    // Uniform integer in [lo, hi] inclusive.
    int64_t next_range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    bool next_bernoulli(double p) { return next_double() < p; }

    uint64_t state() const { return state_; }

private:
    uint64_t state_;
};

// Stateless mix of one 64-bit value, used for seed derivation.
inline uint64_t mix64(uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Derive an independent stream seed from a base seed and a domain tag.
// Used so that per-span, per-direction and per-purpose streams never overlap.
inline uint64_t derive_seed(uint64_t base, uint64_t tag) {
    return mix64(base ^ mix64(tag + 0x9E3779B97F4A7C15ULL));
}

}  // namespace tempovec
