#pragma once

#include <cmath>
#include <numbers>

#include "cavisim/errors.hpp"

namespace cavisim {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
    friend constexpr Vec3 operator*(Vec3 v, double s) { return s * v; }
    friend constexpr Vec3 operator/(Vec3 v, double s) { return {v.x / s, v.y / s, v.z / s}; }
    friend constexpr bool operator==(Vec3 a, Vec3 b) { return a.x == b.x && a.y == b.y && a.z == b.z; }
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(Vec3 v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(Vec3 v) {
    const double n = norm(v);
    if (n == 0.0)
        throw invalid_parameter("cannot normalize the zero vector");
    return v / n;
}

/// Homogeneous 4x4 affine transform, column-vector convention.
/// The bottom row is always (0, 0, 0, 1).
class AffineTransform {
public:
    AffineTransform() {
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                m_[r][c] = (r == c) ? 1.0 : 0.0;
    }

    static AffineTransform translation(Vec3 t) {
        AffineTransform a;
        a.m_[0][3] = t.x;
        a.m_[1][3] = t.y;
        a.m_[2][3] = t.z;
        return a;
    }

    static AffineTransform scaling(Vec3 s) {
        if (s.x == 0.0 || s.y == 0.0 || s.z == 0.0)
            throw invalid_parameter("scaling factors must be nonzero");
        AffineTransform a;
        a.m_[0][0] = s.x;
        a.m_[1][1] = s.y;
        a.m_[2][2] = s.z;
        return a;
    }

    static AffineTransform rotation_x(double rad) {
        AffineTransform a;
        const double c = std::cos(rad), s = std::sin(rad);
        a.m_[1][1] = c; a.m_[1][2] = -s;
        a.m_[2][1] = s; a.m_[2][2] = c;
        return a;
    }

    static AffineTransform rotation_y(double rad) {
        AffineTransform a;
        const double c = std::cos(rad), s = std::sin(rad);
        a.m_[0][0] = c;  a.m_[0][2] = s;
        a.m_[2][0] = -s; a.m_[2][2] = c;
        return a;
    }

    static AffineTransform rotation_z(double rad) {
        AffineTransform a;
        const double c = std::cos(rad), s = std::sin(rad);
        a.m_[0][0] = c; a.m_[0][1] = -s;
        a.m_[1][0] = s; a.m_[1][1] = c;
        return a;
    }

    /// Rotation about x, then y, then z applied in composition order
    /// rotation_x(ax) * rotation_y(ay) * rotation_z(az).
    static AffineTransform rotation(Vec3 angles) {
        return rotation_x(angles.x) * rotation_y(angles.y) * rotation_z(angles.z);
    }

    friend AffineTransform operator*(const AffineTransform& a, const AffineTransform& b) {
        AffineTransform out;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k)
                    acc += a.m_[r][k] * b.m_[k][c];
                out.m_[r][c] = acc;
            }
        return out;
    }

    Vec3 apply(Vec3 p) const {
        return {m_[0][0] * p.x + m_[0][1] * p.y + m_[0][2] * p.z + m_[0][3],
                m_[1][0] * p.x + m_[1][1] * p.y + m_[1][2] * p.z + m_[1][3],
                m_[2][0] * p.x + m_[2][1] * p.y + m_[2][2] * p.z + m_[2][3]};
    }

    /// Determinant of the linear (upper-left 3x3) part.
    double linear_determinant() const {
        return m_[0][0] * (m_[1][1] * m_[2][2] - m_[1][2] * m_[2][1])
             - m_[0][1] * (m_[1][0] * m_[2][2] - m_[1][2] * m_[2][0])
             + m_[0][2] * (m_[1][0] * m_[2][1] - m_[1][1] * m_[2][0]);
    }

    bool invertible(double tol = 1e-12) const { return std::abs(linear_determinant()) > tol; }

    double operator()(int r, int c) const { return m_[r][c]; }

private:
    double m_[4][4];
};

/// How the base radius of the cavity ellipsoid is derived from the volume knob.
enum class VolumeMode {
    paper,        ///< r = (3v/4)^(1/3); the enclosed ellipsoid volume is then pi*v
    exact_volume, ///< r = (3v/(4*pi))^(1/3); the enclosed ellipsoid volume is v
};

/// Semi-axes of the cavity ellipsoid. Product r1*r2*r3 equals r^3 by
/// construction since the lambda factors cancel.
struct EllipsoidAxes {
    double r1 = 1.0;
    double r2 = 1.0;
    double r3 = 1.0;

    Vec3 as_vec() const { return {r1, r2, r3}; }
};

inline EllipsoidAxes ellipsoid_semiaxes(double volume, double lambda,
                                        VolumeMode mode = VolumeMode::paper) {
    if (!(volume > 0.0))
        throw invalid_parameter("ellipsoid volume parameter must be positive");
    if (!(lambda >= 1.0))
        throw invalid_parameter("ellipsoid lambda must be >= 1");
    const double r = (mode == VolumeMode::paper)
                         ? std::cbrt(3.0 * volume / 4.0)
                         : std::cbrt(3.0 * volume / (4.0 * std::numbers::pi));
    return EllipsoidAxes{r, lambda * r, r / lambda};
}

/// Compose the cavity placement transform: recenter at the origin, rotate,
/// scale to the ellipsoid axes, then translate to the seed point.
inline AffineTransform make_transform_chain(Vec3 centroid, Vec3 angles,
                                            const EllipsoidAxes& axes, Vec3 seed_point) {
    if (!(axes.r1 > 0.0 && axes.r2 > 0.0 && axes.r3 > 0.0))
        throw invalid_parameter("ellipsoid semi-axes must be positive");
    return AffineTransform::translation(seed_point)
         * AffineTransform::scaling(axes.as_vec())
         * AffineTransform::rotation(angles)
         * AffineTransform::translation(-1.0 * centroid);
}

} // namespace cavisim
