#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace cavisim {

/// splitmix64 finalizer; used to derive seeds, not as the generator itself.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Seed for an independent per-draw stream. Keyed by (master seed, image id,
/// draw index) so a batch produces the same outputs no matter how its draws
/// are scheduled across workers.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t image_id,
                                    std::uint64_t draw_index) {
    return mix64(mix64(mix64(master) ^ image_id) ^ draw_index);
}

/// Deterministic random stream. Wraps std::mt19937_64 (whose output sequence
/// the standard pins down exactly) and implements the distributions by hand,
/// because the std distribution objects are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). Lemire multiply-shift reduction.
    std::uint64_t below(std::uint64_t n) {
        const unsigned __int128 prod =
            static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
        return static_cast<std::uint64_t>(prod >> 64);
    }

    /// Standard normal via Box-Muller; consumes two uniforms per pair and
    /// caches the second value.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        const double u1 = 1.0 - uniform01(); // in (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return mean + stddev * r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace cavisim
