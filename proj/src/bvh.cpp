#include "titan/bvh.hpp"

#include <algorithm>
#include <numeric>

namespace titan {

namespace {

constexpr std::uint32_t kLeafSize = 4;

Vec3 inverse(const Vec3& d) { return {1.0 / d.x, 1.0 / d.y, 1.0 / d.z}; }

}  // namespace

std::optional<double> intersect_triangle(const Triangle& tri, const Vec3& origin, const Vec3& dir, double t_min,
                                         double t_max) {
    const Vec3 e1 = tri.v[1] - tri.v[0];
    const Vec3 e2 = tri.v[2] - tri.v[0];
    const Vec3 p = cross(dir, e2);
    const double det = dot(e1, p);
    const double scale = norm(e1) * norm(e2);
    if (std::abs(det) <= 1e-12 * scale) return std::nullopt;
    const double inv_det = 1.0 / det;
    const Vec3 s = origin - tri.v[0];
    const double u = dot(s, p) * inv_det;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 q = cross(s, e1);
    const double v = dot(dir, q) * inv_det;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = dot(e2, q) * inv_det;
    if (t <= t_min || t >= t_max) return std::nullopt;
    return t;
}

Bvh::Bvh(std::span<const Triangle> triangles) {
    if (triangles.empty()) return;
    std::vector<Aabb> boxes(triangles.size());
    std::vector<Vec3> centroids(triangles.size());
    for (std::size_t i = 0; i < triangles.size(); ++i) {
        for (const auto& v : triangles[i].v) boxes[i].expand(v);
        // Pad so flat (axis-aligned) triangles are never culled by slab rounding.
        const double pad = 1e-9 * (1.0 + std::max({std::abs(boxes[i].lo.x), std::abs(boxes[i].lo.y),
                                                   std::abs(boxes[i].lo.z), std::abs(boxes[i].hi.x),
                                                   std::abs(boxes[i].hi.y), std::abs(boxes[i].hi.z)}));
        boxes[i].lo = boxes[i].lo - Vec3{pad, pad, pad};
        boxes[i].hi = boxes[i].hi + Vec3{pad, pad, pad};
        centroids[i] = (triangles[i].v[0] + triangles[i].v[1] + triangles[i].v[2]) / 3.0;
    }
    order_.resize(triangles.size());
    std::iota(order_.begin(), order_.end(), 0U);
    nodes_.reserve(2 * triangles.size());
    build(triangles, boxes, centroids, 0, static_cast<std::uint32_t>(triangles.size()));
}

std::uint32_t Bvh::build(std::span<const Triangle> triangles, std::vector<Aabb>& boxes, std::vector<Vec3>& centroids,
                         std::uint32_t begin, std::uint32_t end) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    Aabb box;
    Aabb centroid_box;
    for (std::uint32_t i = begin; i < end; ++i) {
        box.expand(boxes[order_[i]]);
        centroid_box.expand(centroids[order_[i]]);
    }
    nodes_[index].box = box;
    if (end - begin <= kLeafSize) {
        nodes_[index].first = begin;
        nodes_[index].count = end - begin;
        return index;
    }
    const Vec3 extent = centroid_box.hi - centroid_box.lo;
    int axis = 0;
    if (extent.y > extent.x) axis = 1;
    if (extent.z > extent[axis]) axis = 2;
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = centroids[a][axis];
                         const double cb = centroids[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    build(triangles, boxes, centroids, begin, mid);
    const std::uint32_t right = build(triangles, boxes, centroids, mid, end);
    nodes_[index].first = right;
    nodes_[index].count = 0;
    return index;
}

std::optional<Bvh::Candidate> Bvh::closest(std::span<const Triangle> triangles, const Vec3& origin, const Vec3& dir,
                                           double t_min, double t_max) const {
    if (nodes_.empty()) return std::nullopt;
    const Vec3 inv = inverse(dir);
    std::optional<Candidate> best;
    double best_t = t_max;
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        // Inclusive bound so equal-t ties with a lower index are still visited.
        if (!node.box.hit(origin, inv, t_min, best_t)) continue;
        if (node.count > 0) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
                const std::uint32_t tri = order_[i];
                auto t = intersect_triangle(triangles[tri], origin, dir, t_min, t_max);
                if (!t) continue;
                if (!best || *t < best->t || (*t == best->t && tri < best->triangle)) {
                    best = Candidate{tri, *t};
                    best_t = *t;
                }
            }
        } else {
            const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
            stack[top++] = node.first;
            stack[top++] = self + 1;
        }
    }
    return best;
}

bool Bvh::any_hit(std::span<const Triangle> triangles, const Vec3& origin, const Vec3& dir, double t_min,
                  double t_max) const {
    if (nodes_.empty()) return false;
    const Vec3 inv = inverse(dir);
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (!node.box.hit(origin, inv, t_min, t_max)) continue;
        if (node.count > 0) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
                if (intersect_triangle(triangles[order_[i]], origin, dir, t_min, t_max)) return true;
            }
        } else {
            const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
            stack[top++] = node.first;
            stack[top++] = self + 1;
        }
    }
    return false;
}

}  // namespace titan
