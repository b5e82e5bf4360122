#pragma once

#include <cstdint>
#include <random>

namespace rso {

/// Seeded random stream. Wraps std::mt19937_64 but produces doubles through
/// an explicit 53-bit mantissa path so that sequences are identical across
/// platforms and standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n). Modulo bias is below n / 2^64.
    int uniform_int(int n) {
        return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
    }

    std::uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

/// Derives a decorrelated child seed from (root, index) so independent
/// streams (per trial, per purpose) never share state. SplitMix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t z = root + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace rso
