#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "titan/bvh.hpp"
#include "titan/geometry.hpp"

namespace titan {

/// Reflection/absorption properties of a surface.
struct Material {
    std::string name;
    double rel_permittivity = 1.0;  ///< relative permittivity, >= 1
    double conductivity = 0.0;      ///< S/m, >= 0
    bool perfect_reflector = false; ///< |Gamma| = 1 at every angle

    bool operator==(const Material&) const = default;
};

/// Built-in library: "marble", "metal", "concrete".
const std::vector<Material>& builtin_materials();
std::optional<Material> builtin_material(const std::string& name);

/// A planar polygon of the mesh. Triangles produced by tessellating one
/// polygon share a facet; specular paths are enumerated per facet.
struct Facet {
    Vec3 normal;    ///< unit normal
    double offset;  ///< plane: dot(normal, x) = offset
    std::uint32_t material;
    std::vector<std::uint32_t> triangles;
};

struct Footprint {
    std::vector<Vec2> polygon;  ///< simple polygon, either orientation
    double height = 0.0;        ///< roof height above ground
};

struct Hit {
    std::int32_t triangle = -1;  ///< kGroundTriangle for the implicit ground plane
    double t = 0.0;
    Vec3 point;
    Vec3 normal;  ///< unit, oriented toward the ray origin side
};

inline constexpr std::int32_t kGroundTriangle = -1;
inline constexpr std::int32_t kGroundFacet = -1;

/// Self-intersection guard used by every ray/segment query.
inline constexpr double kRayEpsilon = 1e-4;

class SceneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Immutable digital-twin geometry: triangles, materials, building footprints
/// and an implicit ground plane. Build with SceneBuilder.
class Scene {
public:
    Scene();

    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<Material>& materials() const { return materials_; }
    const std::vector<Facet>& facets() const { return facets_; }
    const std::vector<Footprint>& footprints() const { return footprints_; }
    const std::vector<std::string>& groups() const { return groups_; }
    /// Group index per triangle (into groups()).
    const std::vector<std::uint32_t>& triangle_groups() const { return triangle_groups_; }
    const Aabb& bounds() const { return bounds_; }
    const Bvh& index() const { return index_; }

    double ground_z() const { return ground_z_; }
    double ground_elevation(double /*x*/, double /*y*/) const { return ground_z_; }
    /// Ground material index, or nullopt when the ground absorbs (blocks without reflecting).
    std::optional<std::uint32_t> ground_material() const { return ground_material_; }
    bool has_ground() const { return has_ground_; }

    const Material& material_of_facet(std::int32_t facet) const;
    std::int32_t facet_of(std::int32_t triangle) const {
        return triangle == kGroundTriangle ? kGroundFacet : static_cast<std::int32_t>(triangles_[triangle].facet);
    }
    /// Plane of a facet (the ground plane for kGroundFacet).
    std::pair<Vec3, double> plane_of(std::int32_t facet) const;

    /// Nearest hit with t in (kRayEpsilon, t_max). Direction must be unit length.
    std::optional<Hit> intersect(const Vec3& origin, const Vec3& dir, double t_max) const;
    /// Reference implementation of intersect() scanning every triangle.
    std::optional<Hit> intersect_exhaustive(const Vec3& origin, const Vec3& dir, double t_max) const;

    /// True when any surface (including the ground) crosses the open segment (a, b).
    bool segment_blocked(const Vec3& a, const Vec3& b) const;

    /// True iff the 2D point lies outside every building footprint.
    bool is_outdoor(const Vec2& p) const;

    /// Structural equality used by save/load round-trip checks.
    bool operator==(const Scene& other) const;

private:
    friend class SceneBuilder;

    std::vector<Triangle> triangles_;
    std::vector<Material> materials_;
    std::vector<Facet> facets_;
    std::vector<Footprint> footprints_;
    std::vector<Aabb> footprint_boxes_;
    std::vector<std::string> groups_;
    std::vector<std::uint32_t> triangle_groups_;
    Aabb bounds_;
    double ground_z_ = 0.0;
    bool has_ground_ = true;
    std::optional<std::uint32_t> ground_material_;
    Bvh index_;
};

/// Incremental scene construction; finish() validates and builds the index.
class SceneBuilder {
public:
    SceneBuilder();

    std::uint32_t add_material(const Material& m);
    std::uint32_t add_group(const std::string& name);
    /// Adds a planar convex polygon (fan-tessellated) as one facet. Returns the facet id.
    std::uint32_t add_polygon(const std::vector<Vec3>& vertices, std::uint32_t material, std::uint32_t group);
    void add_footprint(Footprint fp);
    void set_ground(double z, std::optional<std::uint32_t> material, bool present = true);
    /// Explicit bounds; otherwise finish() uses the vertex bounding box.
    void set_bounds(const Aabb& bounds);

    std::size_t triangle_count() const { return scene_.triangles_.size(); }

    Scene finish();

private:
    Scene scene_;
};

/// Parameters of the synthetic Manhattan-grid city.
struct ManhattanParams {
    int blocks_x = 4;
    int blocks_y = 4;
    double block_w = 40.0;   ///< m
    double street_w = 20.0;  ///< m
    double height_min = 15.0;
    double height_max = 60.0;
    std::uint64_t seed = 1;
};

/// Axis-aligned box buildings on a grid. Walls are marble, roofs metal,
/// ground concrete.
Scene generate_manhattan(const ManhattanParams& params);

/// Reads an OBJ subset (v/f, g/o groups) and a JSON {group: material} map.
/// Unmapped groups get the default material (concrete) unless `strict`.
Scene load_scene(const std::filesystem::path& obj_path, const std::filesystem::path& material_map,
                 bool strict = false);
Scene load_scene_from_strings(const std::string& obj_text, const std::string& material_map_json,
                              bool strict = false);

/// Writes the scene as OBJ plus material map; footprints and ground are kept
/// as `#@` records so that load_scene reproduces the scene exactly.
void save_scene(const Scene& scene, const std::filesystem::path& obj_path,
                const std::filesystem::path& material_map);
std::pair<std::string, std::string> scene_to_strings(const Scene& scene);

/// Rejection-samples `count` outdoor points at ground + ue_height.
std::vector<Vec3> sample_outdoor_ues(const Scene& scene, int count, double ue_height, std::uint64_t seed);

/// As above but restricted to a disc around `center` (clipped to scene bounds).
std::vector<Vec3> sample_outdoor_ues_near(const Scene& scene, int count, double ue_height, std::uint64_t seed,
                                          const Vec2& center, double radius);

/// Nearest outdoor location to `p` inside the scene's horizontal bounds.
Vec2 nearest_outdoor(const Scene& scene, const Vec2& p);

/// Even-odd point-in-polygon test.
bool point_in_polygon(const std::vector<Vec2>& polygon, const Vec2& p);

}  // namespace titan
