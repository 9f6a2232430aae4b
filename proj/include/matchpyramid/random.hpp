#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace matchpyramid {

/// Seeded generator whose output is identical across standard libraries.
///
/// std::uniform_*_distribution is implementation-defined, so the sampling
/// helpers here are written directly against the 64-bit Mersenne twister,
/// which the standard does pin down bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller.
    double normal();

private:
    std::mt19937_64 engine_;
};

/// Derives an independent sub-seed from a master seed and a stream name,
/// so that "init", "sampling" and "split" never share a random stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

}  // namespace matchpyramid
