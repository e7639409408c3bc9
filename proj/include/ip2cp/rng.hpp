#pragma once

#include <cstdint>
#include <random>

namespace ip2cp {

// Seeded generator with distribution helpers whose output is fixed by this
// code rather than by the standard library implementation, so seeded runs
// reproduce across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n); n > 0. Unbiased (rejection).
    std::uint64_t below(std::uint64_t n);
    // Standard normal via Box-Muller (no cached second value).
    double normal();

private:
    std::mt19937_64 engine_;
};

}  // namespace ip2cp
