#include <doctest.h>

#include <cmath>
#include <set>

#include "titan/rng.hpp"
#include "titan/scene.hpp"

using namespace titan;

namespace {

Scene single_quad_scene() {
    SceneBuilder b;
    const auto m = b.add_material(*builtin_material("marble"));
    const auto g = b.add_group("walls");
    b.add_polygon({{0, 0, 0}, {10, 0, 0}, {10, 0, 5}, {0, 0, 5}}, m, g);
    b.set_ground(0.0, std::nullopt, false);
    return b.finish();
}

// Independent point-in-polygon: cast a ray towards +x and count edge crossings.
bool parity_inside(const std::vector<Vec2>& poly, const Vec2& p) {
    int crossings = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
        if ((a.y > p.y) == (b.y > p.y)) continue;
        const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (x > p.x) ++crossings;
    }
    return crossings % 2 == 1;
}

}  // namespace

TEST_CASE("Moller-Trumbore hit and miss") {
    const Triangle tri{{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}}};
    const auto t = intersect_triangle(tri, {0.2, 0.2, 5}, {0, 0, -1}, 0.0, 100.0);
    REQUIRE(t);
    CHECK(*t == doctest::Approx(5.0));
    CHECK_FALSE(intersect_triangle(tri, {0.8, 0.8, 5}, {0, 0, -1}, 0.0, 100.0));
    CHECK_FALSE(intersect_triangle(tri, {0.2, 0.2, 5}, {0, 0, -1}, 0.0, 4.0));
    // Two-sided.
    CHECK(intersect_triangle(tri, {0.2, 0.2, -5}, {0, 0, 1}, 0.0, 100.0));
}

TEST_CASE("single quad tessellates into two triangles") {
    const Scene s = single_quad_scene();
    CHECK(s.triangles().size() == 2);
    CHECK(s.facets().size() == 1);
}

TEST_CASE("empty OBJ gives an empty scene with a degenerate box at the origin") {
    const Scene s = load_scene_from_strings("", "{}");
    CHECK(s.triangles().empty());
    CHECK(s.bounds().lo.x == 0.0);
    CHECK(s.bounds().hi.x == 0.0);
    CHECK(s.bounds().hi.z == 0.0);
}

TEST_CASE("OBJ reader ignores vt/vn and maps groups to materials") {
    const std::string obj =
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\n"
        "g roof\nf 1/1/1 2/1/1 3/1/1 4/1/1\n";
    const Scene s = load_scene_from_strings(obj, R"({"roof": "metal"})");
    REQUIRE(s.triangles().size() == 2);
    CHECK(s.materials()[s.triangles()[0].material].name == "metal");
    CHECK_THROWS_AS(load_scene_from_strings(obj, R"({"wall": "metal"})", true), SceneError);
    CHECK_NOTHROW(load_scene_from_strings(obj, R"({"wall": "metal"})", false));
    CHECK_THROWS_AS(load_scene_from_strings("v 0 0 0\nf 1 2 3\n", "{}"), SceneError);
}

TEST_CASE("generate_manhattan shapes") {
    SUBCASE("one block is one box of 12 triangles") {
        const Scene s = generate_manhattan({1, 1, 40, 20, 30, 30, 5});
        CHECK(s.footprints().size() == 1);
        CHECK(s.triangles().size() == 12);
    }
    SUBCASE("3x3 footprints are pairwise disjoint") {
        const Scene s = generate_manhattan({3, 3, 40, 20, 15, 60, 5});
        REQUIRE(s.footprints().size() == 9);
        for (std::size_t i = 0; i < 9; ++i)
            for (std::size_t j = i + 1; j < 9; ++j) {
                const auto& a = s.footprints()[i].polygon;
                const auto& b = s.footprints()[j].polygon;
                const bool overlap_x = std::min(a[1].x, b[1].x) > std::max(a[0].x, b[0].x);
                const bool overlap_y = std::min(a[2].y, b[2].y) > std::max(a[0].y, b[0].y);
                CHECK_FALSE((overlap_x && overlap_y));
            }
    }
    SUBCASE("same seed, same vertices") {
        CHECK(generate_manhattan({}).triangles() == generate_manhattan({}).triangles());
        ManhattanParams other;
        other.seed = 2;
        CHECK_FALSE(generate_manhattan({}).triangles() == generate_manhattan(other).triangles());
    }
    CHECK_THROWS_AS(generate_manhattan({0, 1, 40, 20, 15, 60, 1}), SceneError);
}

TEST_CASE("save/load round trip is exact") {
    const Scene s = generate_manhattan({5, 2, 35, 18, 12, 70, 9});
    const auto [obj, map] = scene_to_strings(s);
    const Scene back = load_scene_from_strings(obj, map, true);
    CHECK(back == s);
    CHECK(back.triangles() == s.triangles());
}

TEST_CASE("ray against ground plane") {
    const Scene s = generate_manhattan({1, 1, 40, 20, 30, 30, 5});
    const auto hit = s.intersect({5, 5, 10}, {0, 0, -1}, 100.0);
    REQUIRE(hit);
    CHECK(hit->t == doctest::Approx(10.0));
    CHECK(hit->triangle == kGroundTriangle);
    // Parallel to the ground, above everything.
    CHECK_FALSE(s.intersect({-50, -50, 100}, {1, 0, 0}, 1000.0));
}

TEST_CASE("BVH agrees with the exhaustive scan on random rays") {
    const Scene s = generate_manhattan({2, 2, 30, 15, 10, 40, 3});
    Rng rng(11);
    int hits = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec3 o{rng.uniform(-20, 110), rng.uniform(-20, 110), rng.uniform(0.5, 60)};
        const Vec3 d = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
        const auto a = s.intersect(o, d, 500.0);
        const auto b = s.intersect_exhaustive(o, d, 500.0);
        REQUIRE(a.has_value() == b.has_value());
        if (!a) continue;
        ++hits;
        CHECK(a->triangle == b->triangle);
        CHECK(a->t == doctest::Approx(b->t).epsilon(1e-12));
    }
    CHECK(hits > 100);
}

TEST_CASE("is_outdoor matches ray-cast parity") {
    const Scene s = generate_manhattan({});
    CHECK(s.is_outdoor({5, 5}));     // street
    CHECK_FALSE(s.is_outdoor({30, 30}));  // first block centroid
    Rng rng(4);
    for (int i = 0; i < 10000; ++i) {
        const Vec2 p{rng.uniform(0, 240), rng.uniform(0, 240)};
        bool inside = false;
        for (const auto& fp : s.footprints()) inside = inside || parity_inside(fp.polygon, p);
        REQUIRE(s.is_outdoor(p) == !inside);
    }
}

TEST_CASE("outdoor UE sampling") {
    const Scene s = generate_manhattan({});
    const auto ues = sample_outdoor_ues(s, 100, 1.5, 7);
    REQUIRE(ues.size() == 100);
    for (const auto& u : ues) {
        CHECK(s.is_outdoor({u.x, u.y}));
        CHECK(u.z == doctest::Approx(1.5));
    }
    CHECK(ues == sample_outdoor_ues(s, 100, 1.5, 7));

    SceneBuilder b;
    b.set_bounds({{0, 0, 0}, {100, 50, 10}});
    const Scene open = b.finish();
    const auto pts = sample_outdoor_ues(open, 4000, 1.5, 3);
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        mx += p.x / pts.size();
        my += p.y / pts.size();
    }
    CHECK(mx == doctest::Approx(50).epsilon(0.03));
    CHECK(my == doctest::Approx(25).epsilon(0.03));

    const auto near = sample_outdoor_ues_near(s, 50, 1.5, 8, {60, 60}, 20);
    for (const auto& u : near) CHECK(std::hypot(u.x - 60, u.y - 60) <= 20.0 + 1e-9);
}

TEST_CASE("nearest_outdoor lands outside buildings") {
    const Scene s = generate_manhattan({});
    const Vec2 p = nearest_outdoor(s, {30, 30});
    CHECK(s.is_outdoor(p));
    // Block centre: 20 m to every wall, then a 0.5 m step outside.
    CHECK(std::hypot(p.x - 30, p.y - 30) == doctest::Approx(20.5));
}
