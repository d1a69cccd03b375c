#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "cavisim/errors.hpp"
#include "cavisim/math.hpp"
#include "cavisim/rng.hpp"

namespace cavisim {

/// Regular voxel grid. World position of voxel (i,j,k) is
/// origin + (i*sx, j*sy, k*sz); the origin is the center of voxel (0,0,0).
struct Grid3 {
    std::array<std::size_t, 3> dims{0, 0, 0};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};

    std::size_t size() const { return dims[0] * dims[1] * dims[2]; }

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return i + dims[0] * (j + dims[1] * k);
    }

    Vec3 world(double i, double j, double k) const {
        return {origin.x + i * spacing.x, origin.y + j * spacing.y, origin.z + k * spacing.z};
    }

    double voxel_volume() const { return spacing.x * spacing.y * spacing.z; }

    void validate() const {
        if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
            throw invalid_parameter("grid dims must all be >= 1");
        if (!(spacing.x > 0.0 && spacing.y > 0.0 && spacing.z > 0.0))
            throw invalid_parameter("grid spacing must be positive");
    }

    /// Geometric equality with a small absolute tolerance in mm.
    bool matches(const Grid3& other, double tol = 1e-6) const {
        if (dims != other.dims)
            return false;
        for (int a = 0; a < 3; ++a)
            if (std::abs(spacing[a] - other.spacing[a]) > tol ||
                std::abs(origin[a] - other.origin[a]) > tol)
                return false;
        return true;
    }
};

/// Throw unless both volumes live on the same grid. Resampling is out of
/// scope: inputs are expected pre-registered onto one grid.
inline void require_same_grid(const Grid3& a, const Grid3& b, const char* what) {
    if (!a.matches(b)) {
        std::ostringstream msg;
        msg << what << ": grids differ (dims " << a.dims[0] << "x" << a.dims[1] << "x" << a.dims[2]
            << " vs " << b.dims[0] << "x" << b.dims[1] << "x" << b.dims[2] << ")";
        throw grid_mismatch(msg.str());
    }
}

template <class T>
struct Volume {
    Grid3 grid;
    std::vector<T> data;

    Volume() = default;
    explicit Volume(const Grid3& g, T fill = T{}) : grid(g), data(g.size(), fill) {
        grid.validate();
    }

    T& at(std::size_t i, std::size_t j, std::size_t k) { return data[grid.index(i, j, k)]; }
    T at(std::size_t i, std::size_t j, std::size_t k) const { return data[grid.index(i, j, k)]; }

    T& operator[](std::size_t flat) { return data[flat]; }
    T operator[](std::size_t flat) const { return data[flat]; }

    std::size_t size() const { return data.size(); }
};

using ScalarVolume = Volume<float>;        ///< image intensities, alpha channels
using LabelVolume = Volume<std::int32_t>;  ///< parcellation labels
using BinaryMask = Volume<std::uint8_t>;   ///< values restricted to {0, 1}

inline std::size_t count_nonzero(const BinaryMask& mask) {
    std::size_t n = 0;
    for (auto v : mask.data)
        n += (v != 0);
    return n;
}

inline BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
    require_same_grid(a.grid, b.grid, "mask intersection");
    BinaryMask out(a.grid);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (a[i] && b[i]) ? 1 : 0;
    return out;
}

inline BinaryMask mask_and_not(const BinaryMask& a, const BinaryMask& b) {
    require_same_grid(a.grid, b.grid, "mask subtraction");
    BinaryMask out(a.grid);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (a[i] && !b[i]) ? 1 : 0;
    return out;
}

inline ScalarVolume to_float(const BinaryMask& mask) {
    ScalarVolume out(mask.grid);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = mask[i] ? 1.0f : 0.0f;
    return out;
}

/// Flat indices of all foreground voxels, in grid order.
inline std::vector<std::size_t> foreground_indices(const BinaryMask& mask) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i])
            out.push_back(i);
    return out;
}

inline std::array<std::size_t, 3> unflatten(const Grid3& grid, std::size_t flat) {
    const std::size_t i = flat % grid.dims[0];
    const std::size_t j = (flat / grid.dims[0]) % grid.dims[1];
    const std::size_t k = flat / (grid.dims[0] * grid.dims[1]);
    return {i, j, k};
}

/// Uniformly sample a foreground voxel from a precomputed support list.
inline std::array<std::size_t, 3> sample_random_voxel(const Grid3& grid,
                                                      const std::vector<std::size_t>& support,
                                                      Rng& rng) {
    if (support.empty())
        throw empty_support("cannot sample a voxel from an empty mask");
    return unflatten(grid, support[rng.below(support.size())]);
}

inline std::array<std::size_t, 3> sample_random_voxel(const BinaryMask& mask, Rng& rng) {
    return sample_random_voxel(mask.grid, foreground_indices(mask), rng);
}

} // namespace cavisim
