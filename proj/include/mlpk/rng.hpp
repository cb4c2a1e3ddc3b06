#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mlpk {

/// Seeded RNG with pinned uniform/normal transforms so that a given seed
/// produces the same stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);  // 2^53
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is negligible for n << 2^64 and irrelevant here;
        // determinism is what matters
        return gen_() % n;
    }

    /// Standard normal via Box-Muller (polar form avoided to keep the
    /// draw count per call fixed).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace mlpk
