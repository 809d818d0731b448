#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace cotec {

// splitmix64 finalizer; used to turn (seed, tag, index...) keys into
// well-separated engine seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a substream seed from a master seed and up to three stream keys.
/// Every component that needs randomness gets its own substream, so results
/// do not depend on the order in which substreams are consumed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t s = mix64(master ^ 0x6a09e667f3bcc909ULL);
    s = mix64(s ^ tag);
    s = mix64(s ^ a);
    s = mix64(s ^ b);
    return s;
}

// Stream tags. Arbitrary distinct constants.
namespace rng_tag {
inline constexpr std::uint64_t restart = 0x01;
inline constexpr std::uint64_t dimension = 0x02;
inline constexpr std::uint64_t planted_means = 0x03;
inline constexpr std::uint64_t planted_labels = 0x04;
inline constexpr std::uint64_t planted_noise = 0x05;
inline constexpr std::uint64_t experiment_tensor = 0x06;
inline constexpr std::uint64_t experiment_trial = 0x07;
}  // namespace rng_tag

/// Deterministic random source. The engine (mt19937_64) has a fully
/// specified output sequence; the distribution transforms below are
/// hand-rolled so that replays are exact and do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), rejection sampled (no modulo bias).
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
        const std::uint64_t span = n;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return static_cast<std::size_t>(x % span);
    }

    /// Standard normal via Box-Muller (no cached spare, keeps state simple).
    double normal() {
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Poisson sample. Knuth's product method per chunk; large means are
    /// split into chunks of <= 500 so exp(-lambda) never underflows.
    long long poisson(double lambda) {
        if (!(lambda >= 0.0))
            throw std::invalid_argument("poisson: lambda must be >= 0");
        long long total = 0;
        while (lambda > 500.0) {
            total += poisson_small(500.0);
            lambda -= 500.0;
        }
        total += poisson_small(lambda);
        return total;
    }

private:
    long long poisson_small(double lambda) {
        if (lambda == 0.0) return 0;
        const double floor = std::exp(-lambda);
        long long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > floor);
        return k - 1;
    }

    std::mt19937_64 engine_;
};

}  // namespace cotec
