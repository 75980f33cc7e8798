#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace attn {

/// Child seed for a named pipeline stage; stable across platforms and runs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

/// mt19937_64 with portable (library-independent) conversions, so seeded outputs
/// can be frozen into golden files.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Standard normal via Box-Muller.
    double normal();
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace attn
