#pragma once

#include <cmath>
#include <vector>

#include "cavisim/errors.hpp"
#include "cavisim/volume.hpp"

namespace cavisim {

namespace detail {

// Normalized 1D Gaussian kernel sampled at integer offsets, truncated at 4 sigma.
inline std::vector<double> gaussian_kernel(double sigma_vox) {
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_vox)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        const double w = std::exp(-0.5 * (t / sigma_vox) * (t / sigma_vox));
        kernel[t + radius] = w;
        sum += w;
    }
    for (double& w : kernel)
        w /= sum;
    return kernel;
}

// Symmetric (half-sample) reflection into [0, n).
inline std::size_t reflect_index(long idx, long n) {
    while (idx < 0 || idx >= n) {
        if (idx < 0)
            idx = -idx - 1;
        if (idx >= n)
            idx = 2 * n - 1 - idx;
    }
    return static_cast<std::size_t>(idx);
}

inline void gaussian_pass(std::vector<float>& data, const Grid3& grid, int axis, double sigma_vox) {
    const auto kernel = gaussian_kernel(sigma_vox);
    const int radius = (static_cast<int>(kernel.size()) - 1) / 2;
    const long n = static_cast<long>(grid.dims[axis]);
    const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? grid.dims[0] : grid.dims[0] * grid.dims[1]);

    const std::size_t n_other0 = grid.dims[(axis + 1) % 3];
    const std::size_t n_other1 = grid.dims[(axis + 2) % 3];
    const std::size_t stride0 = (axis + 1) % 3 == 0 ? 1 : ((axis + 1) % 3 == 1 ? grid.dims[0] : grid.dims[0] * grid.dims[1]);
    const std::size_t stride1 = (axis + 2) % 3 == 0 ? 1 : ((axis + 2) % 3 == 1 ? grid.dims[0] : grid.dims[0] * grid.dims[1]);

    std::vector<double> line(n);
    for (std::size_t b = 0; b < n_other1; ++b)
        for (std::size_t a = 0; a < n_other0; ++a) {
            const std::size_t base = a * stride0 + b * stride1;
            for (long q = 0; q < n; ++q)
                line[q] = data[base + static_cast<std::size_t>(q) * stride];
            for (long q = 0; q < n; ++q) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t)
                    acc += kernel[t + radius] * line[reflect_index(q + t, n)];
                data[base + static_cast<std::size_t>(q) * stride] = static_cast<float>(acc);
            }
        }
}

} // namespace detail

/// Separable Gaussian smoothing with per-axis standard deviations in mm and
/// reflected boundaries. The kernel is normalized, so constant inputs pass
/// through unchanged and outputs stay within the input range.
inline ScalarVolume gaussian_smooth(const ScalarVolume& volume, Vec3 sigmas_mm) {
    if (!(sigmas_mm.x > 0.0 && sigmas_mm.y > 0.0 && sigmas_mm.z > 0.0))
        throw invalid_parameter("gaussian sigmas must be positive");
    ScalarVolume out = volume;
    for (int axis = 0; axis < 3; ++axis)
        detail::gaussian_pass(out.data, out.grid, axis, sigmas_mm[axis] / volume.grid.spacing[axis]);
    return out;
}

inline ScalarVolume gaussian_smooth(const BinaryMask& mask, Vec3 sigmas_mm) {
    return gaussian_smooth(to_float(mask), sigmas_mm);
}

} // namespace cavisim
