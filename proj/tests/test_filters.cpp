#include <catch2/catch_amalgamated.hpp>

#include <cavisim/distance.hpp>
#include <cavisim/morphology.hpp>
#include <cavisim/smoothing.hpp>

#include "support/oracles.hpp"

using namespace cavisim;

namespace {

Grid3 cube_grid(std::size_t n, double spacing = 1.0) {
    Grid3 g;
    g.dims = {n, n, n};
    g.spacing = {spacing, spacing, spacing};
    return g;
}

} // namespace

TEST_CASE("gaussian smoothing of a constant volume is the identity") {
    ScalarVolume v(cube_grid(16));
    for (auto& x : v.data)
        x = 37.25f;
    const ScalarVolume s = gaussian_smooth(v, {1.0, 2.0, 0.7});
    for (std::size_t i = 0; i < s.size(); ++i)
        REQUIRE(s[i] == 37.25f);
}

TEST_CASE("gaussian impulse response matches the sampled separable kernel") {
    const std::size_t n = 21;
    ScalarVolume v(cube_grid(n));
    v.at(10, 10, 10) = 1.0f;
    const double sigma = 1.0;
    const ScalarVolume s = gaussian_smooth(v, {sigma, sigma, sigma});

    // Closed-form oracle: product of per-axis normalized sampled Gaussians
    // over the truncated support (radius 4 sigma).
    const int radius = 4;
    std::vector<double> k1(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        k1[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
        sum += k1[t + radius];
    }
    for (double& w : k1)
        w /= sum;

    for (int dz = -radius; dz <= radius; ++dz)
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx) {
                const double expected = k1[dx + radius] * k1[dy + radius] * k1[dz + radius];
                const double got = s.at(10 + dx, 10 + dy, 10 + dz);
                REQUIRE(std::abs(got - expected) <= 1e-3 * expected + 1e-12);
            }

    // Normalized kernel: the interior impulse mass is preserved.
    double mass = 0.0;
    for (auto x : s.data)
        mass += x;
    CHECK(std::abs(mass - 1.0) < 1e-6);
}

TEST_CASE("gaussian smoothing of a mask stays in [0,1] with saturated core and tail") {
    const std::size_t n = 32;
    BinaryMask m(cube_grid(n));
    for (std::size_t k = 8; k < 24; ++k)
        for (std::size_t j = 8; j < 24; ++j)
            for (std::size_t i = 8; i < 24; ++i)
                m.at(i, j, k) = 1;
    const ScalarVolume s = gaussian_smooth(m, {1.0, 1.0, 1.0});
    for (std::size_t i = 0; i < s.size(); ++i) {
        REQUIRE(s[i] >= 0.0f);
        REQUIRE(s[i] <= 1.0f);
    }
    // Deep inside (beyond 4 sigma from the boundary) the value is 1, and far
    // outside it is 0, to 1e-4.
    CHECK(std::abs(s.at(16, 16, 16) - 1.0) < 1e-4);
    CHECK(std::abs(s.at(2, 2, 2)) < 1e-4);
}

TEST_CASE("gaussian rejects non-positive sigmas") {
    ScalarVolume v(cube_grid(4));
    CHECK_THROWS_AS(gaussian_smooth(v, {0.0, 1.0, 1.0}), invalid_parameter);
    CHECK_THROWS_AS(gaussian_smooth(v, {1.0, -1.0, 1.0}), invalid_parameter);
}

TEST_CASE("signed distance of a single voxel") {
    BinaryMask m(cube_grid(9));
    m.at(4, 4, 4) = 1;
    const ScalarVolume d = signed_distance(m);
    // 6-neighbors sit exactly one unit from the only foreground voxel.
    CHECK(d.at(5, 4, 4) == 1.0f);
    CHECK(d.at(3, 4, 4) == 1.0f);
    CHECK(d.at(4, 5, 4) == 1.0f);
    CHECK(d.at(4, 4, 3) == 1.0f);
    CHECK(d.at(4, 4, 4) == -1.0f); // nearest background is one step away
    CHECK(d.at(6, 4, 4) == 2.0f);
    CHECK(d.at(5, 5, 4) == Catch::Approx(std::sqrt(2.0)));
}

TEST_CASE("signed distance of a sphere mask approximates the analytic field") {
    const std::size_t n = 33;
    const Grid3 g = cube_grid(n);
    const Vec3 center = g.world(16, 16, 16);
    const BinaryMask m = testsupport::sphere_mask(g, center, 10.0);
    const ScalarVolume d = signed_distance(m);
    const double diag = std::sqrt(3.0);
    CHECK(d.at(16, 16, 16) == Catch::Approx(-10.0).margin(diag));
    // A point well outside: distance to the sphere surface within a diagonal.
    const Vec3 p = g.world(16, 16, 31);
    const double analytic = norm(p - center) - 10.0;
    CHECK(d.at(16, 16, 31) == Catch::Approx(analytic).margin(diag));
}

TEST_CASE("signed distance of the complement is the exact negation") {
    const Grid3 g = cube_grid(12);
    BinaryMask m(g);
    for (std::size_t k = 3; k < 9; ++k)
        for (std::size_t j = 2; j < 7; ++j)
            for (std::size_t i = 4; i < 10; ++i)
                m.at(i, j, k) = 1;
    BinaryMask complement(g);
    for (std::size_t i = 0; i < m.size(); ++i)
        complement[i] = m[i] ? 0 : 1;
    const ScalarVolume d0 = signed_distance(m);
    const ScalarVolume d1 = signed_distance(complement);
    for (std::size_t i = 0; i < d0.size(); ++i)
        REQUIRE(d0[i] == -d1[i]);
}

TEST_CASE("signed distance honors anisotropic spacing") {
    Grid3 g = cube_grid(9);
    g.spacing = {2.0, 1.0, 0.5};
    BinaryMask m(g);
    m.at(4, 4, 4) = 1;
    const ScalarVolume d = signed_distance(m);
    CHECK(d.at(5, 4, 4) == 2.0f);
    CHECK(d.at(4, 5, 4) == 1.0f);
    CHECK(d.at(4, 4, 5) == 0.5f);
    CHECK(d.at(4, 5, 5) == Catch::Approx(std::sqrt(1.25)));
}

TEST_CASE("signed distance requires both phases") {
    BinaryMask empty(cube_grid(4));
    CHECK_THROWS_AS(signed_distance(empty), empty_support);
    BinaryMask full(cube_grid(4), 1);
    CHECK_THROWS_AS(signed_distance(full), empty_support);
}

TEST_CASE("ball morphology matches the Minkowski definition on a point") {
    BinaryMask m(cube_grid(15));
    m.at(7, 7, 7) = 1;
    const int r = 3;
    const BinaryMask d = dilate_ball(m, r);
    std::size_t expected = 0;
    for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                if (dx * dx + dy * dy + dz * dz <= r * r)
                    ++expected;
    CHECK(count_nonzero(d) == expected);
    // Eroding back recovers exactly the original point.
    const BinaryMask e = erode_ball(d, r);
    CHECK(count_nonzero(e) == 1);
    CHECK(e.at(7, 7, 7) == 1);
}

TEST_CASE("closing fills an interior hole, opening removes a spur") {
    BinaryMask m(cube_grid(24));
    for (std::size_t k = 6; k < 18; ++k)
        for (std::size_t j = 6; j < 18; ++j)
            for (std::size_t i = 6; i < 18; ++i)
                m.at(i, j, k) = 1;
    m.at(12, 12, 12) = 0; // one-voxel hole
    const BinaryMask closed = close_ball(m, 2);
    CHECK(closed.at(12, 12, 12) == 1);

    BinaryMask spur = m;
    for (std::size_t i = 18; i < 23; ++i)
        spur.at(i, 12, 12) = 1;
    const BinaryMask opened = open_ball(spur, 2);
    for (std::size_t i = 19; i < 23; ++i)
        REQUIRE(opened.at(i, 12, 12) == 0);
}

TEST_CASE("erosion near the grid border treats outside as background") {
    BinaryMask m(cube_grid(8), 1);
    const BinaryMask e = erode_ball(m, 2);
    CHECK(e.at(0, 0, 0) == 0);
    CHECK(e.at(4, 4, 4) == 1);
}
