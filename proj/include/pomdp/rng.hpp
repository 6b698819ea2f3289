#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pomdp/core.hpp"

// Deterministic randomness. mt19937_64 is bit-exact across platforms, but the
// std <random> distributions are not, so every transform is spelled out here.
// Streams are indexed: stream k of master seed s is seeded by mixing (s, k)
// through splitmix64, which keeps parallel work reproducible regardless of
// scheduling order.

namespace pomdp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngStream {
public:
    explicit RngStream(std::uint64_t master_seed, std::uint64_t stream_index = 0)
        : engine_(splitmix64(splitmix64(master_seed) ^ (0x9e3779b97f4a7c15ULL * (stream_index + 1)))) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform on [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        // rejection sampling to kill modulo bias; n is tiny in practice
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = engine_(); } while (x >= limit);
        return x % n;
    }

    // Box-Muller without the cached second variate (stateless across calls)
    double normal() {
        double u1;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double exponential() {
        double u;
        do { u = uniform(); } while (u >= 1.0);
        return -std::log1p(-u);
    }

    // index sampled from an (unnormalized, nonnegative) weight vector by CDF scan
    std::size_t categorical(const Vec& w) {
        double total = 0.0;
        for (double x : w) total += x;
        if (!(total > 0.0)) fail("NotADistribution", "categorical weights sum to zero");
        double u = uniform() * total;
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            u -= w[i];
            if (u < 0.0) return i;
        }
        return w.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace pomdp
