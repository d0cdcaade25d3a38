#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace gramts {

/// Seeded deterministic random stream. All draws are derived from raw
/// mt19937_64 output (no std::*_distribution), so equal seeds give
/// bit-identical sequences on every platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool coin_flip() { return (next_u64() & 1) != 0; }

    /// Uniform index in [0, n), unbiased via rejection.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: empty range");
        if (n == 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

    /// Index drawn proportionally to non-negative weights; uniform when
    /// all weights are zero.
    std::size_t categorical(std::span<const double> weights) {
        if (weights.empty()) throw std::invalid_argument("categorical: no weights");
        double total = 0;
        for (double w : weights) {
            if (w < 0) throw std::invalid_argument("categorical: negative weight");
            total += w;
        }
        if (total <= 0) return uniform_index(weights.size());
        double u = uniform01() * total;
        double acc = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace gramts
