#pragma once

#include <cstdint>

namespace lrl {

/// Small deterministic generator with cheap stream derivation, so runs
/// are reproducible bit for bit across platforms and thread schedules.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Fine for the small n used here.
    int uniform_int(int n) { return static_cast<int>(uniform() * n); }
};

/// Derives an independent stream id from a base seed and tags.
inline uint64_t derive_seed(uint64_t seed, uint64_t tag_a, uint64_t tag_b = 0) {
    SplitMix64 g(seed ^ (0xD1B54A32D192ED03ull * (tag_a + 1)) ^
                 (0x8CB92BA72F3D8DD7ull * (tag_b + 1)));
    return g.next();
}

}  // namespace lrl
