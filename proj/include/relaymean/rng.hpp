#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace relaymean {

// Seeded random stream used throughout the library.  All distribution
// sampling is hand-rolled on top of the raw 64-bit output so that results
// are reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; stateless (two uniforms per draw).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::mt19937_64 engine_;
};

namespace detail {

inline std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace detail

// Deterministic per-trial seed: hash(master seed, strategy, n, trial index).
// Adding trials or n values never reshuffles seeds of existing trials.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t n, std::uint64_t trial) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = detail::fnv1a_bytes(h, &master, sizeof master);
    h = detail::fnv1a_bytes(h, tag.data(), tag.size());
    h = detail::fnv1a_bytes(h, &n, sizeof n);
    h = detail::fnv1a_bytes(h, &trial, sizeof trial);
    return detail::splitmix64(h);
}

} // namespace relaymean
