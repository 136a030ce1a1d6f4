#pragma once
// Seeded randomness with portable output.
//
// std::uniform_*_distribution results differ between standard libraries, so
// the mappings from the raw mt19937_64 stream are done here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace ledgerscope {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) {
        constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = kMax - kMax % n;
        std::uint64_t x;
        do x = engine_();
        while (x >= limit);
        return x % n;
    }
    // Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }
    // Uniform in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }
    // Log-uniform integer in [lo, hi], lo > 0.
    std::int64_t log_uniform(std::int64_t lo, std::int64_t hi) {
        const double l = std::log(static_cast<double>(lo)), h = std::log(static_cast<double>(hi));
        return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::exp(l + unit() * (h - l))), lo, hi);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ledgerscope
