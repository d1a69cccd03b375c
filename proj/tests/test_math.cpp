#include <catch2/catch_amalgamated.hpp>

#include <cavisim/math.hpp>
#include <cavisim/rng.hpp>

#include <cmath>
#include <numbers>

using namespace cavisim;

TEST_CASE("affine constructors behave as expected") {
    const AffineTransform id;
    const Vec3 p{1.5, -2.0, 7.0};
    REQUIRE(id.apply(p) == p);

    const auto t = AffineTransform::translation({1, 2, 3});
    const Vec3 q = t.apply(p);
    CHECK(q.x == Catch::Approx(2.5));
    CHECK(q.y == Catch::Approx(0.0));
    CHECK(q.z == Catch::Approx(10.0));

    const auto s = AffineTransform::scaling({2, 2, 2});
    const Vec3 r = s.apply({1, 1, 1});
    CHECK(r.x == 2.0);

    CHECK_THROWS_AS(AffineTransform::scaling({0, 1, 1}), invalid_parameter);
}

TEST_CASE("rotation composed with its inverse is the identity") {
    const double theta = 0.7718;
    const auto fwd = AffineTransform::rotation({theta, -0.2, 1.1});
    const auto back = AffineTransform::rotation_z(-1.1) * AffineTransform::rotation_y(0.2) *
                      AffineTransform::rotation_x(-theta);
    const auto prod = back * fwd;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(prod(r, c) == Catch::Approx(r == c ? 1.0 : 0.0).margin(1e-12));
}

TEST_CASE("transform chain with trivial rotation and axes is a pure translation") {
    const auto chain = make_transform_chain({0, 0, 0}, {0, 0, 0}, EllipsoidAxes{1, 1, 1},
                                            {5.0, -3.0, 2.0});
    const Vec3 moved = chain.apply({1.0, 1.0, 1.0});
    CHECK(moved.x == Catch::Approx(6.0));
    CHECK(moved.y == Catch::Approx(-2.0));
    CHECK(moved.z == Catch::Approx(3.0));
}

TEST_CASE("transform chain maps the centroid to the seed point") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 c{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
        const Vec3 angles{rng.uniform(0, 2 * std::numbers::pi),
                          rng.uniform(0, 2 * std::numbers::pi),
                          rng.uniform(0, 2 * std::numbers::pi)};
        const EllipsoidAxes axes =
            ellipsoid_semiaxes(rng.uniform(100, 50000), rng.uniform(1, 2));
        const Vec3 g{rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100)};
        const Vec3 image = make_transform_chain(c, angles, axes, g).apply(c);
        CHECK(std::abs(image.x - g.x) < 1e-9);
        CHECK(std::abs(image.y - g.y) < 1e-9);
        CHECK(std::abs(image.z - g.z) < 1e-9);
    }
}

TEST_CASE("ellipsoid semi-axes follow the configured volume convention") {
    SECTION("printed-formula mode, spherical case") {
        const auto axes = ellipsoid_semiaxes(4.0 / 3.0, 1.0, VolumeMode::paper);
        CHECK(axes.r1 == Catch::Approx(1.0));
        CHECK(axes.r2 == Catch::Approx(1.0));
        CHECK(axes.r3 == Catch::Approx(1.0));
    }
    SECTION("printed-formula mode, elongated case") {
        const auto axes = ellipsoid_semiaxes(4.0 / 3.0, 2.0, VolumeMode::paper);
        CHECK(axes.r1 == Catch::Approx(1.0));
        CHECK(axes.r2 == Catch::Approx(2.0));
        CHECK(axes.r3 == Catch::Approx(0.5));
        CHECK(axes.r1 * axes.r2 * axes.r3 == Catch::Approx(1.0));
    }
    SECTION("exact-volume mode recovers the analytic ellipsoid volume") {
        const auto axes = ellipsoid_semiaxes(1000.0, 1.7, VolumeMode::exact_volume);
        const double analytic = 4.0 / 3.0 * std::numbers::pi * axes.r1 * axes.r2 * axes.r3;
        CHECK(analytic == Catch::Approx(1000.0).epsilon(1e-12));
    }
    SECTION("the lambda factors cancel in the semi-axis product") {
        Rng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            const double v = rng.uniform(1.0, 1e5);
            const double lambda = rng.uniform(1.0, 2.0);
            const auto axes = ellipsoid_semiaxes(v, lambda);
            const double r = std::cbrt(3.0 * v / 4.0);
            CHECK(axes.r1 * axes.r2 * axes.r3 == Catch::Approx(r * r * r).epsilon(1e-12));
        }
    }
    SECTION("invalid parameters are rejected") {
        CHECK_THROWS_AS(ellipsoid_semiaxes(0.0, 1.0), invalid_parameter);
        CHECK_THROWS_AS(ellipsoid_semiaxes(-5.0, 1.0), invalid_parameter);
        CHECK_THROWS_AS(ellipsoid_semiaxes(10.0, 0.5), invalid_parameter);
    }
}
