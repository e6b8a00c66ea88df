#pragma once
#include <cstdint>

namespace bca {

// Deterministic coin stream derived from (seed, trial, tag). Uses the
// splitmix64 mixer so identical inputs produce identical draws on every
// platform, which the harness relies on for byte-identical reports.
class CoinStream {
public:
    explicit CoinStream(uint64_t seed, uint64_t trial = 0, uint64_t tag = 0) {
        state_ = mix(seed + 0x9E3779B97F4A7C15ull);
        state_ = mix(state_ ^ (0xBF58476D1CE4E5B9ull * (trial + 1)));
        state_ = mix(state_ ^ (0x94D049BB133111EBull * (tag + 1)));
    }

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Uniform double in [0, 1).
    double next() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform double in [lo, hi).
    double next(double lo, double hi) { return lo + (hi - lo) * next(); }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

private:
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    uint64_t state_;
};

} // namespace bca
