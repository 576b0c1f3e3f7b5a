#pragma once

#include <cstdint>
#include <random>

namespace sfr {

/// SplitMix64 finalizer; used to derive independent per-item seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Seeded generator with distribution code owned here (not by the standard
/// library) so draws are identical across toolchains.
class Rng {
public:
    /// The seed is mixed first so that nearby seeds give unrelated streams.
    explicit Rng(std::uint64_t seed) : engine_(derive_seed(seed, 0x5EED)) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Uniform integer in [lo, hi] (inclusive).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Standard normal via Box-Muller.
    double normal();

private:
    std::mt19937_64 engine_;
};

}  // namespace sfr
