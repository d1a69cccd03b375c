#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cavisim/errors.hpp"
#include "cavisim/math.hpp"
#include "cavisim/noise.hpp"

namespace cavisim {

/// Closed triangle surface. Faces index into vertices; a valid mesh is
/// watertight (every undirected edge shared by exactly two faces) and
/// consistently oriented.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
};

inline Vec3 centroid(const TriangleMesh& mesh) {
    Vec3 c{};
    for (const Vec3& v : mesh.vertices)
        c = c + v;
    return c / static_cast<double>(mesh.vertices.size());
}

/// Number of distinct undirected edges.
inline std::size_t edge_count(const TriangleMesh& mesh) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
    for (const auto& f : mesh.faces)
        for (int e = 0; e < 3; ++e) {
            auto a = f[e], b = f[(e + 1) % 3];
            edges[{std::min(a, b), std::max(a, b)}]++;
        }
    return edges.size();
}

/// True iff face indices are in range, no face repeats a vertex, every
/// undirected edge is shared by exactly two faces, and the two adjacent
/// faces traverse it in opposite directions (consistent orientation).
inline bool is_watertight(const TriangleMesh& mesh) {
    const auto n = static_cast<std::uint32_t>(mesh.vertices.size());
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> undirected;
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
    for (const auto& f : mesh.faces) {
        if (f[0] >= n || f[1] >= n || f[2] >= n)
            return false;
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
            return false;
        for (int e = 0; e < 3; ++e) {
            auto a = f[e], b = f[(e + 1) % 3];
            undirected[{std::min(a, b), std::max(a, b)}]++;
            directed[{a, b}]++;
        }
    }
    for (const auto& [edge, count] : undirected)
        if (count != 2)
            return false;
    for (const auto& [edge, count] : directed)
        if (count != 1)
            return false;
    return true;
}

/// Signed enclosed volume (positive if faces wind counterclockwise as seen
/// from outside).
inline double enclosed_volume(const TriangleMesh& mesh) {
    double six_v = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        six_v += dot(a, cross(b, c));
    }
    return six_v / 6.0;
}

namespace detail {

// Base icosahedron: 12 golden-ratio vertices, 20 CCW-outward faces.
inline TriangleMesh base_icosahedron() {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh mesh;
    mesh.vertices = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& v : mesh.vertices)
        v = normalized(v);
    mesh.faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    return mesh;
}

} // namespace detail

/// Geodesic sphere: each icosahedron edge is divided into `frequency`
/// segments and every lattice vertex is projected onto the unit sphere.
/// Yields 10f^2+2 vertices and 20f^2 faces.
inline TriangleMesh icosphere(int frequency) {
    if (frequency < 1)
        throw invalid_parameter("icosphere frequency must be >= 1");
    const TriangleMesh base = detail::base_icosahedron();
    if (frequency == 1)
        return base;

    const auto f = static_cast<std::uint32_t>(frequency);
    TriangleMesh mesh;
    mesh.vertices = base.vertices;

    // Shared lattice vertices are deduplicated by exact combinatorial keys
    // (corner id, position along an undirected edge, or face-interior slot),
    // never by floating-point position.
    std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::uint32_t> edge_points;
    auto edge_point = [&](std::uint32_t a, std::uint32_t b, std::uint32_t step) {
        const std::uint32_t lo = std::min(a, b), hi = std::max(a, b);
        const std::uint32_t from_lo = (a == lo) ? step : f - step;
        auto key = std::make_tuple(lo, hi, from_lo);
        auto it = edge_points.find(key);
        if (it != edge_points.end())
            return it->second;
        const Vec3 p = normalized(base.vertices[lo] +
                                  (static_cast<double>(from_lo) / f) *
                                      (base.vertices[hi] - base.vertices[lo]));
        const auto id = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(p);
        edge_points.emplace(key, id);
        return id;
    };

    for (const auto& face : base.faces) {
        const std::uint32_t a = face[0], b = face[1], c = face[2];
        const Vec3 va = base.vertices[a], vb = base.vertices[b], vc = base.vertices[c];

        // Vertex ids on the barycentric lattice: i steps toward b, j toward c.
        std::vector<std::uint32_t> lattice((f + 1) * (f + 2) / 2);
        auto slot = [&](std::uint32_t i, std::uint32_t j) -> std::uint32_t& {
            // Row j has f+1-j entries; rows are packed in order.
            const std::uint32_t row_start = j * (2 * (f + 1) - j + 1) / 2;
            return lattice[row_start + i];
        };
        for (std::uint32_t j = 0; j <= f; ++j) {
            for (std::uint32_t i = 0; i + j <= f; ++i) {
                const std::uint32_t k = f - i - j;
                std::uint32_t id;
                if (i == f)      id = b;
                else if (j == f) id = c;
                else if (k == f) id = a;
                else if (j == 0) id = edge_point(a, b, i);
                else if (i == 0) id = edge_point(a, c, j);
                else if (k == 0) id = edge_point(b, c, j);
                else {
                    const Vec3 p = normalized((static_cast<double>(k) * va +
                                               static_cast<double>(i) * vb +
                                               static_cast<double>(j) * vc) /
                                              static_cast<double>(f));
                    id = static_cast<std::uint32_t>(mesh.vertices.size());
                    mesh.vertices.push_back(p);
                }
                slot(i, j) = id;
            }
        }

        // Triangulate the lattice with the parent face's winding.
        for (std::uint32_t j = 0; j < f; ++j)
            for (std::uint32_t i = 0; i + j < f; ++i) {
                mesh.faces.push_back({slot(i, j), slot(i + 1, j), slot(i, j + 1)});
                if (i + j + 1 < f)
                    mesh.faces.push_back({slot(i + 1, j), slot(i + 1, j + 1), slot(i, j + 1)});
            }
    }
    return mesh;
}

/// Displace each vertex along its radial direction by dfn(vertex), where dfn
/// maps points to [-1, 1]. Faces are untouched, so the connectivity (and
/// hence watertightness) is preserved.
template <class DisplacementFn>
    requires std::is_invocable_r_v<double, DisplacementFn, Vec3>
TriangleMesh perturb_radially(const TriangleMesh& mesh, DisplacementFn&& dfn) {
    TriangleMesh out;
    out.vertices.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) {
        const double n = norm(v);
        if (n == 0.0)
            throw invalid_parameter("radial perturbation undefined for a vertex at the origin");
        out.vertices.push_back(v + (dfn(v) / n) * v);
    }
    out.faces = mesh.faces;
    return out;
}

inline TriangleMesh perturb_radially(const TriangleMesh& mesh, const OctaveNoise& noise) {
    return perturb_radially(mesh, [&](Vec3 p) { return noise.displacement(p); });
}

inline TriangleMesh perturb_radially(const TriangleMesh& mesh, const NoiseParams& params) {
    return perturb_radially(mesh, OctaveNoise(params));
}

inline TriangleMesh apply_transform(const TriangleMesh& mesh, const AffineTransform& t) {
    if (!t.invertible())
        throw invalid_parameter("mesh transform must be invertible");
    TriangleMesh out;
    out.vertices.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices)
        out.vertices.push_back(t.apply(v));
    out.faces = mesh.faces;
    return out;
}

/// ASCII PLY export for debugging the cavity surface.
inline void write_ply(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot open '" + path + "' for writing");
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\nend_header\n";
    out.precision(17);
    for (const Vec3& v : mesh.vertices)
        out << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& f : mesh.faces)
        out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
    if (!out)
        throw io_error("write failed for '" + path + "'");
}

} // namespace cavisim
