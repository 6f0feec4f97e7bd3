#include "titan/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "titan/rng.hpp"

namespace titan {

namespace {

Vec3 newell_normal(const std::vector<Vec3>& poly) {
    Vec3 n;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3& a = poly[i];
        const Vec3& b = poly[(i + 1) % poly.size()];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    return n;
}

std::optional<Hit> ground_hit(const Scene& scene, const Vec3& origin, const Vec3& dir, double t_max) {
    if (!scene.has_ground() || dir.z == 0.0) return std::nullopt;
    const double t = (scene.ground_z() - origin.z) / dir.z;
    if (!(t > kRayEpsilon && t < t_max)) return std::nullopt;
    Hit h;
    h.triangle = kGroundTriangle;
    h.t = t;
    h.point = origin + dir * t;
    h.point.z = scene.ground_z();
    h.normal = {0.0, 0.0, origin.z >= scene.ground_z() ? 1.0 : -1.0};
    return h;
}

Hit mesh_hit(const Scene& scene, std::uint32_t tri, double t, const Vec3& origin, const Vec3& dir) {
    Hit h;
    h.triangle = static_cast<std::int32_t>(tri);
    h.t = t;
    h.point = origin + dir * t;
    Vec3 n = scene.facets()[scene.triangles()[tri].facet].normal;
    if (dot(n, dir) > 0.0) n = -n;
    h.normal = n;
    return h;
}

/// Mesh hits win exact ties with the ground plane.
std::optional<Hit> nearer(std::optional<Hit> mesh, std::optional<Hit> ground) {
    if (!ground) return mesh;
    if (!mesh) return ground;
    return ground->t < mesh->t ? ground : mesh;
}

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

Material material_from_json(const std::string& key, const nlohmann::json& value, bool strict) {
    if (value.is_string()) {
        const auto name = value.get<std::string>();
        if (auto m = builtin_material(name)) return *m;
        if (strict) throw SceneError("unknown material '" + name + "' for group '" + key + "'");
        return *builtin_material("concrete");
    }
    if (value.is_object()) {
        Material m;
        m.name = value.value("name", key);
        m.rel_permittivity = value.value("rel_permittivity", 1.0);
        m.conductivity = value.value("conductivity", 0.0);
        m.perfect_reflector = value.value("perfect_reflector", false);
        if (m.rel_permittivity < 1.0 || m.conductivity < 0.0)
            throw SceneError("material '" + m.name + "' violates eps_r >= 1, sigma >= 0");
        return m;
    }
    throw SceneError("material map entry for '" + key + "' must be a name or an object");
}

nlohmann::json material_to_json(const Material& m) {
    if (auto b = builtin_material(m.name); b && *b == m) return m.name;
    return {{"name", m.name},
            {"rel_permittivity", m.rel_permittivity},
            {"conductivity", m.conductivity},
            {"perfect_reflector", m.perfect_reflector}};
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int parse_obj_index(const std::string& token, std::size_t vertex_count, int line_no) {
    const std::string head = token.substr(0, token.find('/'));
    std::size_t used = 0;
    long idx = 0;
    try {
        idx = std::stol(head, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != head.size() || idx == 0)
        throw SceneError("malformed face record at line " + std::to_string(line_no) + ": '" + token + "'");
    const long resolved = idx > 0 ? idx - 1 : static_cast<long>(vertex_count) + idx;
    if (resolved < 0 || resolved >= static_cast<long>(vertex_count))
        throw SceneError("face index out of range at line " + std::to_string(line_no));
    return static_cast<int>(resolved);
}

}  // namespace

const std::vector<Material>& builtin_materials() {
    static const std::vector<Material> table = {
        {"marble", 7.07, 0.0055, false},
        {"metal", 1.0, 0.0, true},
        {"concrete", 5.24, 0.0462, false},
    };
    return table;
}

std::optional<Material> builtin_material(const std::string& name) {
    for (const auto& m : builtin_materials())
        if (m.name == name) return m;
    return std::nullopt;
}

bool point_in_polygon(const std::vector<Vec2>& polygon, const Vec2& p) {
    bool inside = false;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = polygon[i];
        const Vec2& b = polygon[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

// ---------------------------------------------------------------------------
// Scene

Scene::Scene() = default;

const Material& Scene::material_of_facet(std::int32_t facet) const {
    if (facet == kGroundFacet) {
        if (!ground_material_) throw SceneError("ground has no material (absorbing ground)");
        return materials_[*ground_material_];
    }
    return materials_[facets_[facet].material];
}

std::pair<Vec3, double> Scene::plane_of(std::int32_t facet) const {
    if (facet == kGroundFacet) return {{0.0, 0.0, 1.0}, ground_z_};
    return {facets_[facet].normal, facets_[facet].offset};
}

std::optional<Hit> Scene::intersect(const Vec3& origin, const Vec3& dir, double t_max) const {
    std::optional<Hit> mesh;
    if (auto c = index_.closest(triangles_, origin, dir, kRayEpsilon, t_max)) mesh = mesh_hit(*this, c->triangle, c->t, origin, dir);
    return nearer(mesh, ground_hit(*this, origin, dir, t_max));
}

std::optional<Hit> Scene::intersect_exhaustive(const Vec3& origin, const Vec3& dir, double t_max) const {
    std::optional<Hit> mesh;
    for (std::size_t i = 0; i < triangles_.size(); ++i) {
        auto t = intersect_triangle(triangles_[i], origin, dir, kRayEpsilon, t_max);
        if (t && (!mesh || *t < mesh->t)) mesh = mesh_hit(*this, static_cast<std::uint32_t>(i), *t, origin, dir);
    }
    return nearer(mesh, ground_hit(*this, origin, dir, t_max));
}

bool Scene::segment_blocked(const Vec3& a, const Vec3& b) const {
    const Vec3 d = b - a;
    const double len = norm(d);
    if (len <= 2.0 * kRayEpsilon) return false;
    const Vec3 dir = d / len;
    const double t_max = len - kRayEpsilon;
    if (ground_hit(*this, a, dir, t_max)) return true;
    return index_.any_hit(triangles_, a, dir, kRayEpsilon, t_max);
}

bool Scene::is_outdoor(const Vec2& p) const {
    for (std::size_t i = 0; i < footprints_.size(); ++i) {
        const Aabb& box = footprint_boxes_[i];
        if (p.x < box.lo.x || p.x > box.hi.x || p.y < box.lo.y || p.y > box.hi.y) continue;
        if (point_in_polygon(footprints_[i].polygon, p)) return false;
    }
    return true;
}

bool Scene::operator==(const Scene& other) const {
    if (triangles_.size() != other.triangles_.size() || facets_.size() != other.facets_.size()) return false;
    for (std::size_t i = 0; i < triangles_.size(); ++i) {
        const auto& a = triangles_[i];
        const auto& b = other.triangles_[i];
        if (a.v != b.v || a.facet != b.facet) return false;
        if (!(materials_[a.material] == other.materials_[b.material])) return false;
        if (groups_[triangle_groups_[i]] != other.groups_[other.triangle_groups_[i]]) return false;
    }
    if (footprints_.size() != other.footprints_.size()) return false;
    for (std::size_t i = 0; i < footprints_.size(); ++i) {
        const auto& fa = footprints_[i];
        const auto& fb = other.footprints_[i];
        if (fa.height != fb.height || fa.polygon.size() != fb.polygon.size()) return false;
        for (std::size_t k = 0; k < fa.polygon.size(); ++k)
            if (fa.polygon[k].x != fb.polygon[k].x || fa.polygon[k].y != fb.polygon[k].y) return false;
    }
    if (!(bounds_ == other.bounds_) || ground_z_ != other.ground_z_ || has_ground_ != other.has_ground_) return false;
    if (ground_material_.has_value() != other.ground_material_.has_value()) return false;
    if (ground_material_ && !(materials_[*ground_material_] == other.materials_[*other.ground_material_])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// SceneBuilder

SceneBuilder::SceneBuilder() = default;

std::uint32_t SceneBuilder::add_material(const Material& m) {
    if (m.rel_permittivity < 1.0 || m.conductivity < 0.0)
        throw SceneError("material '" + m.name + "' violates eps_r >= 1, sigma >= 0");
    auto& mats = scene_.materials_;
    for (std::size_t i = 0; i < mats.size(); ++i)
        if (mats[i] == m) return static_cast<std::uint32_t>(i);
    mats.push_back(m);
    return static_cast<std::uint32_t>(mats.size() - 1);
}

std::uint32_t SceneBuilder::add_group(const std::string& name) {
    auto& g = scene_.groups_;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] == name) return static_cast<std::uint32_t>(i);
    g.push_back(name);
    return static_cast<std::uint32_t>(g.size() - 1);
}

std::uint32_t SceneBuilder::add_polygon(const std::vector<Vec3>& vertices, std::uint32_t material, std::uint32_t group) {
    if (vertices.size() < 3) throw SceneError("polygon needs at least 3 vertices");
    if (material >= scene_.materials_.size()) throw SceneError("polygon references unknown material index");
    const Vec3 raw = newell_normal(vertices);
    const double area2 = norm(raw);
    double scale = 0.0;
    for (const auto& v : vertices) scale = std::max(scale, distance(v, vertices[0]));
    if (area2 <= 1e-12 * scale * scale || scale == 0.0) throw SceneError("non-triangulatable polygon: degenerate");
    const Vec3 n = raw / area2;
    const double offset = dot(n, vertices[0]);
    for (const auto& v : vertices)
        if (std::abs(dot(n, v) - offset) > 1e-6 * (1.0 + scale))
            throw SceneError("non-triangulatable polygon: not planar");
    if (vertices.size() > 3) {
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            const Vec3& a = vertices[i];
            const Vec3& b = vertices[(i + 1) % vertices.size()];
            const Vec3& c = vertices[(i + 2) % vertices.size()];
            if (dot(cross(b - a, c - b), n) < -1e-12 * scale * scale)
                throw SceneError("non-triangulatable polygon: not convex");
        }
    }
    const auto facet_id = static_cast<std::uint32_t>(scene_.facets_.size());
    Facet facet{n, offset, material, {}};
    for (std::size_t i = 1; i + 1 < vertices.size(); ++i) {
        Triangle tri{{vertices[0], vertices[i], vertices[i + 1]}, material, facet_id};
        if (norm(cross(tri.v[1] - tri.v[0], tri.v[2] - tri.v[0])) <= 1e-12 * scale * scale) continue;
        facet.triangles.push_back(static_cast<std::uint32_t>(scene_.triangles_.size()));
        scene_.triangles_.push_back(tri);
        scene_.triangle_groups_.push_back(group);
    }
    scene_.facets_.push_back(std::move(facet));
    return facet_id;
}

void SceneBuilder::add_footprint(Footprint fp) {
    if (fp.polygon.size() < 3) throw SceneError("footprint needs at least 3 vertices");
    const std::size_t n = fp.polygon.size();
    // Simple-polygon check: no two non-adjacent edges may intersect.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            const Vec2 &a = fp.polygon[i], &b = fp.polygon[(i + 1) % n];
            const Vec2 &c = fp.polygon[j], &d = fp.polygon[(j + 1) % n];
            const double d1 = cross2(c, d, a), d2 = cross2(c, d, b), d3 = cross2(a, b, c), d4 = cross2(a, b, d);
            if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
                throw SceneError("footprint polygon is self-intersecting");
        }
    }
    scene_.footprints_.push_back(std::move(fp));
}

void SceneBuilder::set_bounds(const Aabb& bounds) { scene_.bounds_ = bounds; }

void SceneBuilder::set_ground(double z, std::optional<std::uint32_t> material, bool present) {
    scene_.ground_z_ = z;
    scene_.ground_material_ = material;
    scene_.has_ground_ = present;
}

Scene SceneBuilder::finish() {
    Scene s = std::move(scene_);
    scene_ = Scene{};
    if (s.bounds_.empty()) {
        for (const auto& t : s.triangles_)
            for (const auto& v : t.v) s.bounds_.expand(v);
        if (s.bounds_.empty()) s.bounds_ = Aabb{{0, 0, 0}, {0, 0, 0}};
    }
    for (const auto& t : s.triangles_)
        for (const auto& v : t.v)
            if (!s.bounds_.contains(v, 1e-9)) throw SceneError("triangle vertex outside scene bounds");
    s.footprint_boxes_.clear();
    for (const auto& fp : s.footprints_) {
        Aabb box;
        for (const auto& p : fp.polygon) box.expand(Vec3{p.x, p.y, 0.0});
        s.footprint_boxes_.push_back(box);
    }
    s.index_ = Bvh(s.triangles_);
    return s;
}

// ---------------------------------------------------------------------------
// Generators and I/O

Scene generate_manhattan(const ManhattanParams& p) {
    if (p.blocks_x <= 0 || p.blocks_y <= 0 || p.block_w <= 0 || p.street_w <= 0 || p.height_min <= 0 ||
        p.height_max < p.height_min)
        throw SceneError("generate_manhattan: dimensions must be positive");
    SceneBuilder b;
    const auto marble = b.add_material(*builtin_material("marble"));
    const auto metal = b.add_material(*builtin_material("metal"));
    const auto concrete = b.add_material(*builtin_material("concrete"));
    const auto walls = b.add_group("walls");
    const auto roofs = b.add_group("roofs");
    const auto floors = b.add_group("floors");
    Rng rng(p.seed);
    const double pitch = p.block_w + p.street_w;
    double top = 0.0;
    for (int j = 0; j < p.blocks_y; ++j) {
        for (int i = 0; i < p.blocks_x; ++i) {
            const double h = p.height_min + (p.height_max - p.height_min) * rng.uniform();
            const double x0 = 0.5 * p.street_w + i * pitch, x1 = x0 + p.block_w;
            const double y0 = 0.5 * p.street_w + j * pitch, y1 = y0 + p.block_w;
            top = std::max(top, h);
            // Outward-facing counter-clockwise quads.
            b.add_polygon({{x0, y0, 0}, {x0, y1, 0}, {x1, y1, 0}, {x1, y0, 0}}, marble, floors);
            b.add_polygon({{x0, y0, h}, {x1, y0, h}, {x1, y1, h}, {x0, y1, h}}, metal, roofs);
            b.add_polygon({{x0, y0, 0}, {x1, y0, 0}, {x1, y0, h}, {x0, y0, h}}, marble, walls);
            b.add_polygon({{x1, y0, 0}, {x1, y1, 0}, {x1, y1, h}, {x1, y0, h}}, marble, walls);
            b.add_polygon({{x1, y1, 0}, {x0, y1, 0}, {x0, y1, h}, {x1, y1, h}}, marble, walls);
            b.add_polygon({{x0, y1, 0}, {x0, y0, 0}, {x0, y0, h}, {x0, y1, h}}, marble, walls);
            b.add_footprint({{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, h});
        }
    }
    b.set_ground(0.0, concrete);
    // Bounds span the whole street grid, not just the building hulls.
    b.set_bounds(Aabb{{0.0, 0.0, 0.0}, {p.blocks_x * pitch, p.blocks_y * pitch, top}});
    return b.finish();
}

namespace {

struct ParsedObj {
    std::vector<Vec3> vertices;
    struct Face {
        std::vector<int> idx;
        std::string group;
        int line;
    };
    std::vector<Face> faces;
    std::vector<Footprint> footprints;
    std::optional<Aabb> bounds;
    std::optional<std::pair<double, std::string>> ground;  // z, material name or "none"
    bool ground_absent = false;
};

ParsedObj parse_obj(const std::string& text) {
    ParsedObj out;
    std::istringstream in(text);
    std::string line;
    std::string group = "default";
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) throw SceneError("malformed vertex record at line " + std::to_string(line_no));
            out.vertices.push_back(v);
        } else if (tag == "f") {
            ParsedObj::Face f{{}, group, line_no};
            std::string tok;
            while (ls >> tok) f.idx.push_back(parse_obj_index(tok, out.vertices.size(), line_no));
            if (f.idx.size() < 3) throw SceneError("malformed face record at line " + std::to_string(line_no));
            out.faces.push_back(std::move(f));
        } else if (tag == "g" || tag == "o") {
            std::string name;
            group = (ls >> name) ? name : "default";
        } else if (tag == "#@footprint") {
            Footprint fp;
            if (!(ls >> fp.height)) throw SceneError("malformed footprint record at line " + std::to_string(line_no));
            Vec2 p;
            while (ls >> p.x >> p.y) fp.polygon.push_back(p);
            out.footprints.push_back(std::move(fp));
        } else if (tag == "#@bounds") {
            Aabb b;
            if (!(ls >> b.lo.x >> b.lo.y >> b.lo.z >> b.hi.x >> b.hi.y >> b.hi.z))
                throw SceneError("malformed bounds record at line " + std::to_string(line_no));
            out.bounds = b;
        } else if (tag == "#@ground") {
            double z = 0;
            std::string mat;
            if (!(ls >> z >> mat)) throw SceneError("malformed ground record at line " + std::to_string(line_no));
            if (mat == "absent") out.ground_absent = true;
            out.ground = std::make_pair(z, mat);
        }
        // vt, vn, s, usemtl, mtllib and plain comments are ignored.
    }
    return out;
}

}  // namespace

Scene load_scene_from_strings(const std::string& obj_text, const std::string& material_map_json, bool strict) {
    const ParsedObj obj = parse_obj(obj_text);
    nlohmann::json map = nlohmann::json::object();
    if (!material_map_json.empty()) {
        try {
            map = nlohmann::json::parse(material_map_json);
        } catch (const nlohmann::json::exception& e) {
            throw SceneError(std::string("material map is not valid JSON: ") + e.what());
        }
        if (!map.is_object()) throw SceneError("material map must be a JSON object");
    }
    SceneBuilder b;
    std::map<std::string, std::uint32_t> group_material;
    auto material_for = [&](const std::string& group) {
        if (auto it = group_material.find(group); it != group_material.end()) return it->second;
        Material m;
        if (map.contains(group)) {
            m = material_from_json(group, map[group], strict);
        } else {
            if (strict) throw SceneError("group '" + group + "' has no material mapping");
            m = *builtin_material("concrete");
        }
        const auto id = b.add_material(m);
        group_material[group] = id;
        return id;
    };
    for (const auto& f : obj.faces) {
        std::vector<Vec3> poly;
        poly.reserve(f.idx.size());
        for (int i : f.idx) poly.push_back(obj.vertices[i]);
        try {
            b.add_polygon(poly, material_for(f.group), b.add_group(f.group));
        } catch (const SceneError& e) {
            throw SceneError(std::string(e.what()) + " (line " + std::to_string(f.line) + ")");
        }
    }
    if (!obj.footprints.empty()) {
        for (const auto& fp : obj.footprints) b.add_footprint(fp);
    } else {
        // Derive footprints per group: xy convex hull of groups with vertical extent.
        std::map<std::string, std::vector<Vec2>> pts;
        std::map<std::string, std::pair<double, double>> zr;
        for (const auto& f : obj.faces) {
            auto& z = zr.try_emplace(f.group, 1e300, -1e300).first->second;
            for (int i : f.idx) {
                pts[f.group].push_back({obj.vertices[i].x, obj.vertices[i].y});
                z.first = std::min(z.first, obj.vertices[i].z);
                z.second = std::max(z.second, obj.vertices[i].z);
            }
        }
        for (auto& [g, p] : pts) {
            if (zr[g].second - zr[g].first < 1.0) continue;
            auto hull = convex_hull(p);
            if (hull.size() >= 3) b.add_footprint({std::move(hull), zr[g].second});
        }
    }
    if (obj.ground && obj.ground_absent) {
        b.set_ground(obj.ground->first, std::nullopt, false);
    } else if (obj.ground && obj.ground->second == "none") {
        b.set_ground(obj.ground->first, std::nullopt);
    } else if (obj.ground) {
        const std::string& name = obj.ground->second;
        std::optional<std::uint32_t> id;
        if (map.contains("#ground")) {
            id = b.add_material(material_from_json("#ground", map["#ground"], strict));
        } else if (auto m = builtin_material(name)) {
            id = b.add_material(*m);
        } else {
            if (strict) throw SceneError("unknown ground material '" + name + "'");
            id = b.add_material(*builtin_material("concrete"));
        }
        b.set_ground(obj.ground->first, id);
    } else {
        b.set_ground(0.0, b.add_material(*builtin_material("concrete")));
    }
    if (obj.bounds) b.set_bounds(*obj.bounds);
    return b.finish();
}

}  // namespace titan

namespace titan {

std::pair<std::string, std::string> scene_to_strings(const Scene& scene) {
    std::ostringstream obj;
    obj << "# titan scene\n";
    const Aabb& b = scene.bounds();
    obj << "#@bounds " << fmt_double(b.lo.x) << ' ' << fmt_double(b.lo.y) << ' ' << fmt_double(b.lo.z) << ' '
        << fmt_double(b.hi.x) << ' ' << fmt_double(b.hi.y) << ' ' << fmt_double(b.hi.z) << '\n';
    nlohmann::json map = nlohmann::json::object();
    if (!scene.has_ground()) {
        obj << "#@ground " << fmt_double(scene.ground_z()) << " absent\n";
    } else if (auto gm = scene.ground_material()) {
        const Material& m = scene.materials()[*gm];
        obj << "#@ground " << fmt_double(scene.ground_z()) << ' ' << m.name << '\n';
        if (!builtin_material(m.name) || !(*builtin_material(m.name) == m)) map["#ground"] = material_to_json(m);
    } else {
        obj << "#@ground " << fmt_double(scene.ground_z()) << " none\n";
    }
    for (const auto& fp : scene.footprints()) {
        obj << "#@footprint " << fmt_double(fp.height);
        for (const auto& p : fp.polygon) obj << ' ' << fmt_double(p.x) << ' ' << fmt_double(p.y);
        obj << '\n';
    }
    // One polygon per facet; fan order reproduces the original tessellation.
    std::size_t written = 0;
    std::int64_t current_group = -1;
    for (const auto& facet : scene.facets()) {
        if (facet.triangles.empty()) continue;
        const auto group = scene.triangle_groups()[facet.triangles.front()];
        if (static_cast<std::int64_t>(group) != current_group) {
            obj << "g " << scene.groups()[group] << '\n';
            current_group = group;
            const Material& m = scene.materials()[facet.material];
            map[scene.groups()[group]] = material_to_json(m);
        }
        std::vector<Vec3> poly;
        const auto& first = scene.triangles()[facet.triangles.front()];
        poly.push_back(first.v[0]);
        poly.push_back(first.v[1]);
        for (auto t : facet.triangles) poly.push_back(scene.triangles()[t].v[2]);
        for (const auto& v : poly)
            obj << "v " << fmt_double(v.x) << ' ' << fmt_double(v.y) << ' ' << fmt_double(v.z) << '\n';
        obj << 'f';
        for (std::size_t i = 0; i < poly.size(); ++i) obj << ' ' << written + i + 1;
        obj << '\n';
        written += poly.size();
    }
    return {obj.str(), map.dump(2) + "\n"};
}

void save_scene(const Scene& scene, const std::filesystem::path& obj_path, const std::filesystem::path& material_map) {
    const auto [obj, map] = scene_to_strings(scene);
    std::ofstream o(obj_path, std::ios::binary);
    std::ofstream m(material_map, std::ios::binary);
    if (!o || !m) throw SceneError("cannot open scene output files for writing");
    o << obj;
    m << map;
}

Scene load_scene(const std::filesystem::path& obj_path, const std::filesystem::path& material_map, bool strict) {
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw SceneError("cannot read '" + p.string() + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    return load_scene_from_strings(slurp(obj_path), material_map.empty() ? std::string{} : slurp(material_map),
                                   strict);
}

namespace {

std::vector<Vec3> rejection_sample(const Scene& scene, int count, double ue_height, std::uint64_t seed,
                                   const std::optional<std::pair<Vec2, double>>& disc) {
    if (count < 1) throw SceneError("sample_outdoor_ues: count must be >= 1");
    const Aabb& b = scene.bounds();
    Rng rng(seed);
    std::vector<Vec3> out;
    out.reserve(count);
    const long budget = 1000L * count + 10000L;
    for (long attempt = 0; attempt < budget && static_cast<int>(out.size()) < count; ++attempt) {
        Vec2 p;
        if (disc) {
            const double r = disc->second * std::sqrt(rng.uniform());
            const double a = 2.0 * kPi * rng.uniform();
            p = {disc->first.x + r * std::cos(a), disc->first.y + r * std::sin(a)};
            if (p.x < b.lo.x || p.x > b.hi.x || p.y < b.lo.y || p.y > b.hi.y) continue;
        } else {
            p = {rng.uniform(b.lo.x, b.hi.x), rng.uniform(b.lo.y, b.hi.y)};
        }
        if (!scene.is_outdoor(p)) continue;
        out.push_back({p.x, p.y, scene.ground_elevation(p.x, p.y) + ue_height});
    }
    if (static_cast<int>(out.size()) < count)
        throw SceneError("sample_outdoor_ues: attempt budget exhausted (scene nearly fully built-up)");
    return out;
}

Vec2 closest_on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return {a.x + t * dx, a.y + t * dy};
}

}  // namespace

std::vector<Vec3> sample_outdoor_ues(const Scene& scene, int count, double ue_height, std::uint64_t seed) {
    return rejection_sample(scene, count, ue_height, seed, std::nullopt);
}

std::vector<Vec3> sample_outdoor_ues_near(const Scene& scene, int count, double ue_height, std::uint64_t seed,
                                          const Vec2& center, double radius) {
    return rejection_sample(scene, count, ue_height, seed, std::make_pair(center, radius));
}

Vec2 nearest_outdoor(const Scene& scene, const Vec2& p) {
    const Aabb& b = scene.bounds();
    auto clamp_in = [&](Vec2 q) { return Vec2{std::clamp(q.x, b.lo.x, b.hi.x), std::clamp(q.y, b.lo.y, b.hi.y)}; };
    const Vec2 q = clamp_in(p);
    if (scene.is_outdoor(q)) return q;
    // Project onto the boundary of the containing footprint and step 0.5 m outside.
    constexpr double kStep = 0.5;
    std::optional<Vec2> best;
    double best_d = 1e300;
    for (const auto& fp : scene.footprints()) {
        if (!point_in_polygon(fp.polygon, q)) continue;
        const std::size_t n = fp.polygon.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 c = closest_on_segment(fp.polygon[i], fp.polygon[(i + 1) % n], q);
            const double dx = c.x - q.x, dy = c.y - q.y;
            const double d = std::hypot(dx, dy);
            Vec2 cand = d > 0 ? Vec2{c.x + dx / d * kStep, c.y + dy / d * kStep} : c;
            cand = clamp_in(cand);
            if (d < best_d && scene.is_outdoor(cand)) {
                best_d = d;
                best = cand;
            }
        }
    }
    if (best) return *best;
    // Fallback: expanding ring search.
    for (double r = 1.0; r < 1e4; r += 1.0) {
        for (int k = 0; k < 32; ++k) {
            const double a = 2.0 * kPi * k / 32.0;
            const Vec2 cand = clamp_in({q.x + r * std::cos(a), q.y + r * std::sin(a)});
            if (scene.is_outdoor(cand)) return cand;
        }
    }
    throw SceneError("nearest_outdoor: no outdoor point found");
}

}  // namespace titan
