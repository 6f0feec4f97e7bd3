#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace titan {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kBoltzmann = 1.380649e-23;    // J/K
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr bool operator==(const Vec3&) const = default;

    constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) {
    const double n = norm(v);
    return n > 0.0 ? v / n : Vec3{};
}

inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Mirror `p` across the plane {x : dot(n, x) = offset}; `n` must be unit length.
inline Vec3 mirror(const Vec3& p, const Vec3& n, double offset) {
    return p - n * (2.0 * (dot(n, p) - offset));
}

/// Specular reflection of direction `d` about unit normal `n`.
inline Vec3 reflect(const Vec3& d, const Vec3& n) { return d - n * (2.0 * dot(d, n)); }

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

    bool empty() const { return lo.x > hi.x; }

    void expand(const Vec3& p) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }

    void expand(const Aabb& b) {
        if (b.empty()) return;
        expand(b.lo);
        expand(b.hi);
    }

    bool contains(const Vec3& p, double tol = 0.0) const {
        return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol &&
               p.z >= lo.z - tol && p.z <= hi.z + tol;
    }

    Vec3 center() const { return (lo + hi) * 0.5; }

    /// Slab test; returns true when the ray overlaps the box within [t0, t1].
    bool hit(const Vec3& origin, const Vec3& inv_dir, double t0, double t1) const {
        for (int a = 0; a < 3; ++a) {
            double tn = (lo[a] - origin[a]) * inv_dir[a];
            double tf = (hi[a] - origin[a]) * inv_dir[a];
            if (tn > tf) std::swap(tn, tf);
            // NaN from 0*inf means the origin lies on the slab; treat as overlap.
            if (!(tn <= t1 && tf >= t0)) {
                if (std::isnan(tn) || std::isnan(tf)) continue;
                return false;
            }
            t0 = std::max(t0, std::isnan(tn) ? t0 : tn);
            t1 = std::min(t1, std::isnan(tf) ? t1 : tf);
        }
        return t0 <= t1;
    }

    bool operator==(const Aabb&) const = default;
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

}  // namespace titan
