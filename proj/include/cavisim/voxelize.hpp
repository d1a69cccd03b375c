#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cavisim/errors.hpp"
#include "cavisim/mesh.hpp"
#include "cavisim/volume.hpp"

namespace cavisim {

namespace detail {

// Edge test for the +x ray at projected point (py, pz), for a triangle made
// counterclockwise in the (y, z) plane. Points exactly on an edge belong to
// exactly one of the two triangles sharing it: ties are broken by the edge
// direction, so each crossing is counted once (half-open ownership).
inline bool edge_admits(const Vec3& u, const Vec3& v, double py, double pz) {
    const double e = (v.y - u.y) * (pz - u.z) - (v.z - u.z) * (py - u.y);
    if (e != 0.0)
        return e > 0.0;
    const double dy = v.y - u.y, dz = v.z - u.z;
    return dz > 0.0 || (dz == 0.0 && dy < 0.0);
}

} // namespace detail

/// Rasterize a closed surface into a binary mask: voxels whose center lies
/// inside the surface become 1. For every grid column a +x ray through the
/// voxel centers collects its triangle crossings; centers between successive
/// crossing pairs are interior, with ties on the half-open side. A mesh that
/// does not intersect the grid yields an all-zero mask.
inline BinaryMask voxelize(const TriangleMesh& mesh, const Grid3& grid) {
    grid.validate();
    if (!is_watertight(mesh))
        throw topology_error("voxelize requires a watertight, consistently oriented mesh");

    BinaryMask out(grid);
    if (mesh.vertices.empty())
        return out;

    // Work in continuous voxel coordinates; centers sit at integers.
    std::vector<Vec3> verts(mesh.vertices.size());
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const Vec3& p = mesh.vertices[i];
        verts[i] = {(p.x - grid.origin.x) / grid.spacing.x,
                    (p.y - grid.origin.y) / grid.spacing.y,
                    (p.z - grid.origin.z) / grid.spacing.z};
    }

    const long nx = static_cast<long>(grid.dims[0]);
    const long ny = static_cast<long>(grid.dims[1]);
    const long nz = static_cast<long>(grid.dims[2]);
    std::vector<std::vector<double>> crossings(static_cast<std::size_t>(ny) * nz);

    for (const auto& f : mesh.faces) {
        Vec3 a = verts[f[0]], b = verts[f[1]], c = verts[f[2]];
        const double area2 = (b.y - a.y) * (c.z - a.z) - (b.z - a.z) * (c.y - a.y);
        if (area2 == 0.0)
            continue; // parallel to the ray; adjacent faces carry the crossings
        if (area2 < 0.0)
            std::swap(b, c);

        const long j0 = std::max(0L, static_cast<long>(std::ceil(std::min({a.y, b.y, c.y}))));
        const long j1 = std::min(ny - 1, static_cast<long>(std::floor(std::max({a.y, b.y, c.y}))));
        const long k0 = std::max(0L, static_cast<long>(std::ceil(std::min({a.z, b.z, c.z}))));
        const long k1 = std::min(nz - 1, static_cast<long>(std::floor(std::max({a.z, b.z, c.z}))));
        if (j0 > j1 || k0 > k1)
            continue;

        const Vec3 n = cross(b - a, c - a); // n.x != 0 since the projection has area

        for (long k = k0; k <= k1; ++k)
            for (long j = j0; j <= j1; ++j) {
                const auto py = static_cast<double>(j);
                const auto pz = static_cast<double>(k);
                if (!detail::edge_admits(a, b, py, pz) || !detail::edge_admits(b, c, py, pz) ||
                    !detail::edge_admits(c, a, py, pz))
                    continue;
                const double x = a.x - (n.y * (py - a.y) + n.z * (pz - a.z)) / n.x;
                crossings[static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * k].push_back(x);
            }
    }

    for (long k = 0; k < nz; ++k)
        for (long j = 0; j < ny; ++j) {
            auto& xs = crossings[static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * k];
            if (xs.empty())
                continue;
            if (xs.size() % 2 != 0)
                throw topology_error("voxelize: odd ray crossing count; surface is not closed");
            std::sort(xs.begin(), xs.end());
            for (std::size_t t = 0; t + 1 < xs.size(); t += 2) {
                long i = std::max(0L, static_cast<long>(std::ceil(xs[t])));
                for (; i < nx && static_cast<double>(i) < xs[t + 1]; ++i)
                    out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                           static_cast<std::size_t>(k)) = 1;
            }
        }
    return out;
}

} // namespace cavisim
