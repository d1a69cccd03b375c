#pragma once

#include <cmath>

#include "cavisim/distance.hpp"
#include "cavisim/volume.hpp"

namespace cavisim {

/// Binary morphology with a spherical structuring element of integer radius
/// in voxel units: the ball {offsets o : |o|^2 <= r^2}. Implemented through
/// the exact squared distance transform in index space, which reproduces the
/// Minkowski definitions exactly. Out-of-grid voxels count as background.

inline BinaryMask dilate_ball(const BinaryMask& mask, int radius) {
    if (radius < 0)
        throw invalid_parameter("structuring element radius must be >= 0");
    if (radius == 0 || count_nonzero(mask) == 0)
        return mask;
    const auto d2 = detail::squared_distance_to(mask, 1, {1.0, 1.0, 1.0});
    BinaryMask out(mask.grid);
    const double r2 = static_cast<double>(radius) * radius + 0.5; // exact integer d2 below
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (d2[i] <= r2) ? 1 : 0;
    return out;
}

inline BinaryMask erode_ball(const BinaryMask& mask, int radius) {
    if (radius < 0)
        throw invalid_parameter("structuring element radius must be >= 0");
    if (radius == 0)
        return mask;
    // Pad with a background ring so voxels near the grid boundary erode the
    // same way as scipy-style border_value=0 semantics.
    const std::size_t pad = static_cast<std::size_t>(radius) + 1;
    Grid3 padded_grid;
    padded_grid.dims = {mask.grid.dims[0] + 2 * pad, mask.grid.dims[1] + 2 * pad,
                        mask.grid.dims[2] + 2 * pad};
    BinaryMask padded(padded_grid);
    for (std::size_t k = 0; k < mask.grid.dims[2]; ++k)
        for (std::size_t j = 0; j < mask.grid.dims[1]; ++j)
            for (std::size_t i = 0; i < mask.grid.dims[0]; ++i)
                padded.at(i + pad, j + pad, k + pad) = mask.at(i, j, k);

    const auto d2 = detail::squared_distance_to(padded, 0, {1.0, 1.0, 1.0});
    BinaryMask out(mask.grid);
    const double r2 = static_cast<double>(radius) * radius + 0.5;
    for (std::size_t k = 0; k < mask.grid.dims[2]; ++k)
        for (std::size_t j = 0; j < mask.grid.dims[1]; ++j)
            for (std::size_t i = 0; i < mask.grid.dims[0]; ++i) {
                const std::size_t p = padded_grid.index(i + pad, j + pad, k + pad);
                out.at(i, j, k) = (padded[p] && d2[p] > r2) ? 1 : 0;
            }
    return out;
}

inline BinaryMask close_ball(const BinaryMask& mask, int radius) {
    return erode_ball(dilate_ball(mask, radius), radius);
}

inline BinaryMask open_ball(const BinaryMask& mask, int radius) {
    return dilate_ball(erode_ball(mask, radius), radius);
}

} // namespace cavisim
