#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "titan/raytrace.hpp"
#include "titan/rng.hpp"
#include "titan/scene.hpp"

using namespace titan;

namespace {

constexpr double kFreq = 2e9;
const double kLambda = kSpeedOfLight / kFreq;

Scene empty_scene() {
    SceneBuilder b;
    b.set_ground(0.0, std::nullopt, false);
    b.set_bounds({{-100, -100, 0}, {100, 100, 50}});
    return b.finish();
}

Scene ground_only(const Material& m) {
    SceneBuilder b;
    const auto id = b.add_material(m);
    b.set_ground(0.0, id);
    b.set_bounds({{-200, -200, 0}, {200, 200, 50}});
    return b.finish();
}

Scene corridor() {
    SceneBuilder b;
    const auto m = b.add_material(*builtin_material("marble"));
    const auto g = b.add_group("walls");
    b.add_polygon({{-80, -10, 0}, {80, -10, 0}, {80, -10, 40}, {-80, -10, 40}}, m, g);
    b.add_polygon({{-80, 10, 0}, {80, 10, 0}, {80, 10, 40}, {-80, 10, 40}}, m, g);
    b.set_ground(0.0, std::nullopt, false);
    b.set_bounds({{-100, -100, 0}, {100, 100, 50}});
    return b.finish();
}

double gain_db(Complex a) { return 20.0 * std::log10(std::abs(a)); }

}  // namespace

TEST_CASE("Fresnel coefficients") {
    const Material metal = *builtin_material("metal");
    CHECK(std::abs(fresnel_reflection(metal, 0.3, Polarization::TE, kFreq)) == doctest::Approx(1.0));
    CHECK(std::abs(fresnel_reflection(metal, 1.2, Polarization::TM, kFreq)) == doctest::Approx(1.0));

    const Material marble = *builtin_material("marble");
    for (auto pol : {Polarization::TE, Polarization::TM})
        CHECK(std::abs(fresnel_reflection(marble, kPi / 2 - 1e-7, pol, kFreq)) == doctest::Approx(1.0).epsilon(1e-5));

    // Normal incidence: (1 - sqrt(eps_c)) / (1 + sqrt(eps_c)).
    const double omega = 2 * kPi * kFreq;
    const Complex eps(marble.rel_permittivity, -marble.conductivity / (omega * 8.8541878128e-12));
    const Complex want = (1.0 - std::sqrt(eps)) / (1.0 + std::sqrt(eps));
    const Complex got = fresnel_reflection(marble, 0.0, Polarization::TE, kFreq);
    CHECK(got.real() == doctest::Approx(want.real()).epsilon(1e-9));
    CHECK(got.imag() == doctest::Approx(want.imag()).epsilon(1e-9));
}

TEST_CASE("path amplitude follows Friis") {
    const Complex los = path_amplitude(100.0, {}, kFreq);
    CHECK(gain_db(los) == doctest::Approx(-78.47).epsilon(1e-4));
    CHECK(gain_db(los) == doctest::Approx(20 * std::log10(kLambda / (4 * kPi * 100))));
    const Complex bounce[1] = {Complex(-1.0, 0.0)};
    CHECK(std::abs(path_amplitude(100.0, bounce, kFreq)) == doctest::Approx(std::abs(los)));
    CHECK(std::abs(path_amplitude(200.0, {}, kFreq)) == doctest::Approx(std::abs(los) / 2));
}

TEST_CASE("trace_image basics") {
    SUBCASE("empty scene: a single LoS tap") {
        const auto taps = trace_image(empty_scene(), {0, 0, 10}, {30, 40, 10}, 3, kFreq);
        REQUIRE(taps.size() == 1);
        CHECK(taps[0].is_los());
        CHECK(taps[0].length() == doctest::Approx(50.0));
    }
    SUBCASE("ground plane: LoS plus a bounce at the mirror point") {
        const double ht = 20, hr = 2, d = 60;
        const auto taps = trace_image(ground_only(*builtin_material("concrete")), {0, 0, ht}, {d, 0, hr}, 3, kFreq);
        REQUIRE(taps.size() == 2);
        CHECK(taps[1].interactions.size() == 1);
        CHECK(taps[1].interactions[0].point.x == doctest::Approx(d * ht / (ht + hr)));
        CHECK(taps[1].interactions[0].point.z == doctest::Approx(0.0));
        CHECK(taps[1].length() == doctest::Approx(std::hypot(d, ht + hr)));
    }
    SUBCASE("opaque wall at depth 0: nothing") {
        SceneBuilder b;
        const auto m = b.add_material(*builtin_material("marble"));
        const auto g = b.add_group("w");
        b.add_polygon({{0, -50, 0}, {0, 50, 0}, {0, 50, 50}, {0, -50, 50}}, m, g);
        b.set_ground(0.0, std::nullopt, false);
        const Scene s = b.finish();
        CHECK(trace_image(s, {-10, 0, 5}, {10, 0, 5}, 0, kFreq).empty());
    }
}

TEST_CASE("energy bound on every tap") {
    const Scene s = generate_manhattan({});
    const auto ues = sample_outdoor_ues(s, 10, 1.5, 2);
    for (const auto& u : ues)
        for (const auto& t : trace_image(s, {120, 120, 80}, u, 3, kFreq))
            CHECK(std::abs(t.amplitude) <= kLambda / (4 * kPi * kSpeedOfLight * t.delay) * (1 + 1e-12));
}

TEST_CASE("trace_sbr: LoS is exact and corridor paths are recovered") {
    TraceConfig cfg;
    cfg.max_depth = 2;
    cfg.ray_count = 100000;
    {
        const Vec3 rx[1] = {{25, -5, 3}};
        const auto sbr = trace_sbr(empty_scene(), {0, 0, 10}, rx, cfg).front();
        const auto img = trace_image(empty_scene(), {0, 0, 10}, rx[0], 2, kFreq);
        REQUIRE(sbr.size() == 1);
        CHECK(gain_db(sbr[0].amplitude) == doctest::Approx(gain_db(img[0].amplitude)).epsilon(1e-9));
    }
    const Scene s = corridor();
    const Vec3 tx{-50, -3, 8};
    const Vec3 rx[2] = {{40, 5, 2}, {10, -7, 1.5}};
    const auto sbr = trace_sbr(s, tx, rx, cfg);
    for (int r = 0; r < 2; ++r) {
        const auto img = trace_image(s, tx, rx[r], 2, kFreq);
        CHECK(img.size() >= 3);
        for (const auto& t : img) {
            auto it = std::find_if(sbr[r].begin(), sbr[r].end(),
                                   [&](const PathTap& x) { return x.signature() == t.signature(); });
            REQUIRE(it != sbr[r].end());
            CHECK(std::abs(gain_db(it->amplitude) - gain_db(t.amplitude)) <= 0.5);
        }
    }
}

TEST_CASE("lower fidelity finds a subset of the paths") {
    const Scene s = generate_manhattan({2, 2, 40, 20, 20, 50, 3});
    const auto ues = sample_outdoor_ues(s, 8, 1.5, 5);
    TraceConfig full;
    full.max_depth = 3;
    full.ray_count = 40000;
    TraceConfig low = full;
    low.fidelity = 0.01;
    CHECK(low.effective_rays() == 400);
    const auto a = trace_sbr(s, {60, 50, 70}, ues, full);
    const auto b = trace_sbr(s, {60, 50, 70}, ues, low);
    for (std::size_t u = 0; u < ues.size(); ++u) {
        std::set<std::vector<std::int32_t>> sa, sb;
        for (const auto& t : a[u]) sa.insert(t.signature());
        for (const auto& t : b[u]) sb.insert(t.signature());
        CHECK(std::includes(sa.begin(), sa.end(), sb.begin(), sb.end()));
    }
}

TEST_CASE("trace_sbr is independent of the thread count") {
    const Scene s = generate_manhattan({2, 2, 40, 20, 20, 50, 3});
    const auto ues = sample_outdoor_ues(s, 6, 1.5, 9);
    TraceConfig cfg;
    cfg.ray_count = 20000;
    const auto one = trace_sbr(s, {40, 80, 90}, ues, cfg);
    cfg.threads = 4;
    const auto four = trace_sbr(s, {40, 80, 90}, ues, cfg);
    REQUIRE(one.size() == four.size());
    for (std::size_t u = 0; u < one.size(); ++u) {
        REQUIRE(one[u].size() == four[u].size());
        for (std::size_t i = 0; i < one[u].size(); ++i) {
            CHECK(one[u][i].amplitude == four[u][i].amplitude);
            CHECK(one[u][i].delay == four[u][i].delay);
        }
    }
}

TEST_CASE("los_clear agrees with an exhaustive segment test") {
    const Scene s = generate_manhattan({2, 2, 40, 20, 20, 50, 3});
    CHECK_FALSE(los_clear(s, {5, 30, 10}, {75, 30, 10}));   // through a building
    CHECK(los_clear(s, {0, 0, 100}, {120, 120, 90}));       // above all roofs
    Rng rng(17);
    for (int i = 0; i < 500; ++i) {
        const Vec3 a{rng.uniform(0, 120), rng.uniform(0, 120), rng.uniform(1, 80)};
        const Vec3 b{rng.uniform(0, 120), rng.uniform(0, 120), rng.uniform(1, 80)};
        const Vec3 d = b - a;
        const double len = norm(d);
        bool blocked = false;
        for (const auto& tri : s.triangles())
            if (intersect_triangle(tri, a, d / len, kRayEpsilon, len - kRayEpsilon)) blocked = true;
        if (s.has_ground() && (a.z - s.ground_z()) * (b.z - s.ground_z()) < 0) blocked = true;
        CHECK(los_clear(s, a, b) == !blocked);
    }
}

TEST_CASE("reciprocity on random pairs") {
    const Scene s = generate_manhattan({2, 2, 40, 20, 20, 50, 3});
    Rng rng(23);
    const auto ground = sample_outdoor_ues(s, 10, 1.5, 23);
    for (const auto& rx : ground) {
        const Vec3 tx{rng.uniform(0, 120), rng.uniform(0, 120), rng.uniform(55, 120)};
        auto f = trace_image(s, tx, rx, 3, kFreq);
        auto r = trace_image(s, rx, tx, 3, kFreq);
        REQUIRE(f.size() == r.size());
        auto by_delay = [](const PathTap& a, const PathTap& b) { return a.delay < b.delay; };
        std::sort(f.begin(), f.end(), by_delay);
        std::sort(r.begin(), r.end(), by_delay);
        for (std::size_t i = 0; i < f.size(); ++i) {
            CHECK(f[i].delay == doctest::Approx(r[i].delay).epsilon(1e-12));
            CHECK(std::abs(f[i].amplitude) == doctest::Approx(std::abs(r[i].amplitude)).epsilon(1e-12));
        }
    }
}

TEST_CASE("launch directions are unit and prefix-stable") {
    for (long i = 0; i < 1000; ++i) CHECK(norm(launch_direction(i)) == doctest::Approx(1.0));
    CHECK(launch_direction(7).x == launch_direction(7).x);
}

TEST_CASE("trace config validation") {
    TraceConfig c;
    c.fidelity = 1e-9;
    CHECK_THROWS(c.validate());
    c.fidelity = 1.0;
    c.max_depth = -1;
    CHECK_THROWS(c.validate());
}
