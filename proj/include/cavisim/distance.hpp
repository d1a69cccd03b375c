#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "cavisim/errors.hpp"
#include "cavisim/volume.hpp"

namespace cavisim {

namespace detail {

inline constexpr double kFarAway = 1e20; // "no source yet" marker, kept finite

// 1D squared distance transform (lower envelope of parabolas), with samples
// spaced `w` apart. In-place on f. The envelope sentinels are true
// infinities: intersection abscissas of kFarAway parabolas can exceed any
// finite sentinel when w < 1, which would otherwise walk k out of range.
inline void dt1d(std::vector<double>& f, double w, std::vector<int>& v, std::vector<double>& z,
                 std::vector<double>& scratch) {
    const int n = static_cast<int>(f.size());
    const double w2 = w * w;
    const double inf = std::numeric_limits<double>::infinity();
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
    z[0] = -inf;
    z[1] = inf;
    int k = 0;
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] - f[p]) / w2 + static_cast<double>(q) * q - static_cast<double>(p) * p) /
                (2.0 * (q - p));
            if (s > z[k])
                break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    scratch.resize(n);
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q)
            ++k;
        const double d = w * (q - v[k]);
        scratch[q] = d * d + f[v[k]];
    }
    f.swap(scratch);
}

// Squared distance from every voxel to the nearest source voxel, where
// source voxels are those with mask value == `source_value`. Per-axis sample
// spacing is taken from `weights` (mm for world distances, 1 for voxel space).
inline std::vector<double> squared_distance_to(const BinaryMask& mask, std::uint8_t source_value,
                                               Vec3 weights) {
    const auto [nx, ny, nz] = mask.grid.dims;
    std::vector<double> d(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        d[i] = ((mask[i] != 0) == (source_value != 0)) ? 0.0 : kFarAway;

    std::vector<double> line, z, scratch;
    std::vector<int> v;

    // x pass
    line.resize(nx);
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < ny; ++j) {
            const std::size_t base = mask.grid.index(0, j, k);
            for (std::size_t i = 0; i < nx; ++i)
                line[i] = d[base + i];
            dt1d(line, weights.x, v, z, scratch);
            for (std::size_t i = 0; i < nx; ++i)
                d[base + i] = line[i];
        }
    // y pass
    line.resize(ny);
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t base = mask.grid.index(i, 0, k);
            for (std::size_t j = 0; j < ny; ++j)
                line[j] = d[base + j * nx];
            dt1d(line, weights.y, v, z, scratch);
            for (std::size_t j = 0; j < ny; ++j)
                d[base + j * nx] = line[j];
        }
    // z pass
    line.resize(nz);
    const std::size_t plane = nx * ny;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t base = mask.grid.index(i, j, 0);
            for (std::size_t k = 0; k < nz; ++k)
                line[k] = d[base + k * plane];
            dt1d(line, weights.z, v, z, scratch);
            for (std::size_t k = 0; k < nz; ++k)
                d[base + k * plane] = line[k];
        }
    return d;
}

} // namespace detail

/// Signed Euclidean distance field in mm: negative inside the mask, positive
/// outside; the magnitude at each voxel is the exact distance to the nearest
/// voxel of the opposite phase, honoring anisotropic spacing. The field of
/// the complemented mask is therefore the exact negation.
inline ScalarVolume signed_distance(const BinaryMask& mask) {
    const std::size_t fg = count_nonzero(mask);
    if (fg == 0)
        throw empty_support("signed distance undefined for an all-background mask");
    if (fg == mask.size())
        throw empty_support("signed distance undefined for an all-foreground mask");

    const auto to_fg = detail::squared_distance_to(mask, 1, mask.grid.spacing);
    const auto to_bg = detail::squared_distance_to(mask, 0, mask.grid.spacing);

    ScalarVolume out(mask.grid);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = mask[i] ? -static_cast<float>(std::sqrt(to_bg[i]))
                         : static_cast<float>(std::sqrt(to_fg[i]));
    return out;
}

} // namespace cavisim
