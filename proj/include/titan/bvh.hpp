#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "titan/geometry.hpp"

namespace titan {

struct Triangle {
    std::array<Vec3, 3> v;
    std::uint32_t material = 0;
    std::uint32_t facet = 0;

    Vec3 unit_normal() const { return normalized(cross(v[1] - v[0], v[2] - v[0])); }
    bool operator==(const Triangle&) const = default;
};

/// Moller-Trumbore; returns t of the hit (two-sided) when t in (t_min, t_max).
std::optional<double> intersect_triangle(const Triangle& tri, const Vec3& origin, const Vec3& dir, double t_min,
                                         double t_max);

/// Binary bounding-volume hierarchy over a triangle list (binned SAH build).
/// Immutable after construction; queries are safe from concurrent readers.
class Bvh {
public:
    struct Candidate {
        std::uint32_t triangle;
        double t;
    };

    Bvh() = default;
    explicit Bvh(std::span<const Triangle> triangles);

    /// Closest triangle hit with t in (t_min, t_max); ties resolved by lowest index.
    std::optional<Candidate> closest(std::span<const Triangle> triangles, const Vec3& origin, const Vec3& dir,
                                     double t_min, double t_max) const;

    bool any_hit(std::span<const Triangle> triangles, const Vec3& origin, const Vec3& dir, double t_min,
                 double t_max) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Aabb box;
        std::uint32_t first = 0;  ///< leaf: first index into order_; inner: right child
        std::uint32_t count = 0;  ///< 0 for inner nodes
    };

    std::uint32_t build(std::span<const Triangle> triangles, std::vector<Aabb>& boxes, std::vector<Vec3>& centroids,
                        std::uint32_t begin, std::uint32_t end);

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> order_;
};

}  // namespace titan
