#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>

#include "cavisim/errors.hpp"
#include "cavisim/math.hpp"
#include "cavisim/rng.hpp"

namespace cavisim {

/// Knobs of the fractal noise field used to roughen the cavity surface.
struct NoiseParams {
    int octaves = 4;          ///< number of octaves summed
    double persistence = 0.5; ///< geometric weight ratio between octaves, in (0, 1]
    double scale = 3.0;       ///< spatial smoothness: coordinates are divided by this
    Vec3 shift{0.0, 0.0, 0.0}; ///< offset added to the query point; also seeds the gradient table

    void validate() const {
        if (octaves < 1)
            throw invalid_parameter("noise octaves must be >= 1");
        if (!(persistence > 0.0 && persistence <= 1.0))
            throw invalid_parameter("noise persistence must be in (0, 1]");
        if (!(scale > 0.0))
            throw invalid_parameter("noise scale must be positive");
    }
};

namespace detail {

// 12 edge-midpoint gradients of the classic 3D simplex construction.
inline constexpr int kGrad3[12][3] = {
    {1, 1, 0}, {-1, 1, 0}, {1, -1, 0}, {-1, -1, 0},
    {1, 0, 1}, {-1, 0, 1}, {1, 0, -1}, {-1, 0, -1},
    {0, 1, 1}, {0, -1, 1}, {0, 1, -1}, {0, -1, -1}};

inline int fast_floor(double x) {
    const int i = static_cast<int>(x);
    return x < i ? i - 1 : i;
}

} // namespace detail

/// 3D simplex gradient noise with a permutation table shuffled from a 64-bit
/// seed. raw() is in [-1, 1] and is bit-deterministic for a given seed.
class SimplexNoise {
public:
    explicit SimplexNoise(std::uint64_t seed) {
        std::array<std::uint8_t, 256> p;
        for (int i = 0; i < 256; ++i)
            p[i] = static_cast<std::uint8_t>(i);
        // Hand-rolled Fisher-Yates: std::shuffle is implementation-defined.
        Rng rng(seed);
        for (int i = 255; i > 0; --i) {
            const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(p[i], p[j]);
        }
        for (int i = 0; i < 512; ++i)
            perm_[i] = p[i & 255];
    }

    double raw(double xin, double yin, double zin) const {
        constexpr double F3 = 1.0 / 3.0;
        constexpr double G3 = 1.0 / 6.0;

        // Skew input space to find the containing simplex cell.
        const double s = (xin + yin + zin) * F3;
        const int i = detail::fast_floor(xin + s);
        const int j = detail::fast_floor(yin + s);
        const int k = detail::fast_floor(zin + s);
        const double t = (i + j + k) * G3;
        const double x0 = xin - (i - t);
        const double y0 = yin - (j - t);
        const double z0 = zin - (k - t);

        // Rank the fractional coordinates to pick the simplex traversal order.
        int i1, j1, k1, i2, j2, k2;
        if (x0 >= y0) {
            if (y0 >= z0)      { i1 = 1; j1 = 0; k1 = 0; i2 = 1; j2 = 1; k2 = 0; }
            else if (x0 >= z0) { i1 = 1; j1 = 0; k1 = 0; i2 = 1; j2 = 0; k2 = 1; }
            else               { i1 = 0; j1 = 0; k1 = 1; i2 = 1; j2 = 0; k2 = 1; }
        } else {
            if (y0 < z0)       { i1 = 0; j1 = 0; k1 = 1; i2 = 0; j2 = 1; k2 = 1; }
            else if (x0 < z0)  { i1 = 0; j1 = 1; k1 = 0; i2 = 0; j2 = 1; k2 = 1; }
            else               { i1 = 0; j1 = 1; k1 = 0; i2 = 1; j2 = 1; k2 = 0; }
        }

        const double x1 = x0 - i1 + G3;
        const double y1 = y0 - j1 + G3;
        const double z1 = z0 - k1 + G3;
        const double x2 = x0 - i2 + 2.0 * G3;
        const double y2 = y0 - j2 + 2.0 * G3;
        const double z2 = z0 - k2 + 2.0 * G3;
        const double x3 = x0 - 1.0 + 3.0 * G3;
        const double y3 = y0 - 1.0 + 3.0 * G3;
        const double z3 = z0 - 1.0 + 3.0 * G3;

        const int ii = i & 255, jj = j & 255, kk = k & 255;

        double n = 0.0;
        n += corner(x0, y0, z0, grad_index(ii, jj, kk));
        n += corner(x1, y1, z1, grad_index(ii + i1, jj + j1, kk + k1));
        n += corner(x2, y2, z2, grad_index(ii + i2, jj + j2, kk + k2));
        n += corner(x3, y3, z3, grad_index(ii + 1, jj + 1, kk + 1));
        // 32 scales the kernel sum into [-1, 1] for this gradient set.
        return 32.0 * n;
    }

private:
    int grad_index(int i, int j, int k) const {
        return perm_[(i + perm_[(j + perm_[k & 255]) & 255]) & 255] % 12;
    }

    static double corner(double x, double y, double z, int gi) {
        double t = 0.6 - x * x - y * y - z * z;
        if (t < 0.0)
            return 0.0;
        t *= t;
        const int* g = detail::kGrad3[gi];
        return t * t * (g[0] * x + g[1] * y + g[2] * z);
    }

    std::array<std::uint8_t, 512> perm_;
};

/// Octave sum of simplex noise, normalized into [0, 1].
///
/// Octave n (n = 1..octaves) samples the base noise at frequency 2^(n-1) and
/// weight persistence^(n-1); each octave's raw value is first mapped from
/// [-1, 1] to [0, 1], and the weighted sum is divided by the total weight so
/// the result stays in [0, 1] for any octave count and persistence.
class OctaveNoise {
public:
    explicit OctaveNoise(const NoiseParams& params)
        : params_(params), base_(table_seed(params.shift)) {
        params.validate();
    }

    const NoiseParams& params() const { return params_; }

    /// Noise in [0, 1] at point p: the octave sum evaluated at (p + shift) / scale.
    double value(Vec3 p) const {
        const double qx = (p.x + params_.shift.x) / params_.scale;
        const double qy = (p.y + params_.shift.y) / params_.scale;
        const double qz = (p.z + params_.shift.z) / params_.scale;
        double sum = 0.0;
        double weight = 1.0;
        double total = 0.0;
        double freq = 1.0;
        for (int n = 0; n < params_.octaves; ++n) {
            const double raw = base_.raw(qx * freq, qy * freq, qz * freq);
            const double mapped = std::clamp(0.5 * (raw + 1.0), 0.0, 1.0);
            sum += weight * mapped;
            total += weight;
            weight *= params_.persistence;
            freq *= 2.0;
        }
        return sum / total;
    }

    /// Radial displacement in [-1, 1]: 2 * value(p) - 1.
    double displacement(Vec3 p) const { return 2.0 * value(p) - 1.0; }

    /// The gradient table seed is derived from the shift vector's bit
    /// patterns, so the shift acts as both spatial offset and stochastic seed.
    static std::uint64_t table_seed(Vec3 shift) {
        std::uint64_t bits[3];
        static_assert(sizeof(double) == sizeof(std::uint64_t));
        std::memcpy(&bits[0], &shift.x, 8);
        std::memcpy(&bits[1], &shift.y, 8);
        std::memcpy(&bits[2], &shift.z, 8);
        return mix64(mix64(mix64(bits[0]) ^ bits[1]) ^ bits[2]);
    }

private:
    NoiseParams params_;
    SimplexNoise base_;
};

/// One-off evaluation helpers; construct an OctaveNoise once when looping.
inline double noise_value(Vec3 p, const NoiseParams& params) {
    return OctaveNoise(params).value(p);
}

inline double displacement(Vec3 p, const NoiseParams& params) {
    return OctaveNoise(params).displacement(p);
}

} // namespace cavisim
