#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "titan/harness.hpp"

using namespace titan;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& text) {
    const fs::path p = fs::temp_directory_path() / ("titan_test_" + name);
    std::ofstream(p) << text;
    return p;
}

ScenarioConfig tiny() {
    ScenarioConfig c;
    c.scene.manhattan.blocks_x = c.scene.manhattan.blocks_y = 2;
    c.ue_count = 6;
    c.repetitions = 1;
    c.seed = 5;
    c.trace.ray_count = 2000;
    c.trace.max_depth = 1;
    c.placement.n_iter = 4;
    c.placement.max_uavs = 2;
    c.scheduler.n_slots = 5;
    return c;
}

}  // namespace

TEST_CASE("TOML and JSON configs parse to the same scenario") {
    const auto toml = temp_file("a.toml", "seed = 11\nue_count = 30\nmethods = [\"titan\", \"uma_bo\"]\n"
                                          "[trace]\nray_count = 5000\n[scheduler]\npf_time_constant = \"inf\"\n");
    const auto js = temp_file("a.json", R"({"seed": 11, "ue_count": 30, "methods": ["titan", "uma_bo"],
                                            "trace": {"ray_count": 5000}, "scheduler": {"pf_time_constant": "inf"}})");
    const ScenarioConfig a = load_scenario_config(toml), b = load_scenario_config(js);
    CHECK(a.seed == 11);
    CHECK(a.trace.ray_count == 5000);
    CHECK(std::isinf(a.scheduler.pf_time_constant));
    CHECK(a.methods == std::vector<Method>{Method::Titan, Method::UmaBo});
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);

    ScenarioConfig c = a;
    c.seed = 12;
    CHECK(config_hash(c) != config_hash(a));
    c = a;
    c.threads = 4;
    CHECK(config_hash(c) == config_hash(a));

    // Missing keys fall back to defaults; bad values are rejected.
    const ScenarioConfig d = scenario_from_json(nlohmann::json::object());
    CHECK(d.ue_count == 100);
    CHECK(d.repetitions == 20);
    CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"ue_count", "many"}}), ConfigError);
    CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"methods", {"greedy"}}}), std::exception);
    CHECK_THROWS(load_scenario_config(fs::temp_directory_path() / "titan_test_missing.toml"));

    const ScenarioConfig round = scenario_from_json(scenario_to_json(a));
    CHECK(config_hash(round) == config_hash(a));
}

TEST_CASE("mean and 95% interval") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    const auto ci = mean_ci95(v);
    CHECK(ci.mean == 3.0);
    // t(0.975, 4) = 2.7764451051977987, s = sqrt(2.5)
    const double half = 2.7764451051977987 * std::sqrt(2.5) / std::sqrt(5.0);
    CHECK(ci.lo == doctest::Approx(3.0 - half).epsilon(1e-12));
    CHECK(ci.hi == doctest::Approx(3.0 + half).epsilon(1e-12));
    const std::vector<double> one{7};
    CHECK(std::isnan(mean_ci95(one).lo));
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("summary groups rows per cell and metric") {
    std::vector<ResultRow> rows;
    for (int rep = 0; rep < 3; ++rep) {
        rows.push_back({"s1", "titan", "", 1, rep, 0, "coverage", 0.5 + rep * 0.1});
        rows.push_back({"s1", "random", "", 1, rep, 0, "coverage", 0.2});
    }
    const auto sum = summarize(rows);
    REQUIRE(sum.size() == 2);
    CHECK(sum[0].method == "titan");
    CHECK(sum[0].stats.mean == doctest::Approx(0.6));
    CHECK(sum[0].stats.n == 3);
    CHECK(summary_csv(sum).find("s1,random") != std::string::npos);
}

TEST_CASE("UE perturbation") {
    const Workspace ws = build_workspace(tiny());
    const auto ues = sample_ues(ws, tiny(), 3);
    CHECK(perturb_ues(ws.scene, ues, 0.0, 9) == ues);
    for (const auto& p : perturb_ues(ws.scene, ues, 30.0, 9)) {
        CHECK(ws.scene.is_outdoor({p.x, p.y}));
        CHECK(p.z == ues[0].z);
    }
}

TEST_CASE("scenario runners: shape of the outputs") {
    SUBCASE("random with two repetitions gives two rows per metric") {
        ScenarioConfig c = tiny();
        c.methods = {Method::Random};
        c.uav_counts = {1};
        c.repetitions = 2;
        const auto out = run_scenario1(c);
        int cov = 0;
        for (const auto& r : out.rows) cov += r.metric == "coverage";
        CHECK(cov == 2);
    }
    SUBCASE("scenario2 timelines") {
        ScenarioConfig c = tiny();
        c.gnbs = {{30, 30, 25}, {90, 30, 25}, {60, 90, 25}};
        c.methods = {Method::Titan};
        CHECK(run_scenario2(c).timeline.size() == 1);
        c.events = {{1, 0}, {2, 1}, {3, 2}};
        const auto out = run_scenario2(c);
        REQUIRE(out.timeline.size() == 7);
        CHECK(out.timeline[6].kind == "recovered");
        CHECK(out.timeline[6].uav_count == 3);
        CHECK(out.timeline[5].failed_gnbs == "0;1;2");
        c.events = {{1, 0}, {2, 0}};
        CHECK_THROWS_AS(run_scenario2(c), ConfigError);
    }
    SUBCASE("sigma = 0 matches the unperturbed pipeline") {
        ScenarioConfig c = tiny();
        c.methods = {Method::Titan};
        c.uav_counts = {1};
        c.robustness.gps_sigma = {0.0};
        const auto gps = run_scenario3_gps(c);
        const auto base = run_scenario1(c);
        auto objective = [](const ScenarioOutput& o) {
            for (const auto& r : o.rows)
                if (r.metric == "objective") return r.value;
            return -1.0;
        };
        CHECK(objective(gps) == objective(base));
    }
}

TEST_CASE("writing outputs") {
    ScenarioConfig c = tiny();
    c.methods = {Method::Random};
    c.uav_counts = {1};
    const auto out = run_scenario1(c);
    const fs::path dir = fs::temp_directory_path() / "titan_test_out";
    fs::remove_all(dir);
    const auto files = write_outputs(out, c, dir);
    CHECK(fs::exists(dir / "results.csv"));
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "placements.jsonl"));
    CHECK_FALSE(fs::exists(dir / "timeline.csv"));
    CHECK(files.size() >= 4);
    write_outputs(out, c, dir / "json", "json");
    CHECK(fs::exists(dir / "json" / "results.json"));

    const std::string pgm = coverage_map_pgm(build_workspace(c), {{{60, 60, 100}}, {}}, c);
    CHECK(pgm.rfind("P2\n", 0) == 0);
}
