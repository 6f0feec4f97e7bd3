// titan command-line tool: scene generation, tracing, satellite visibility,
// placement optimization, scenario runs and coverage maps.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/version.hpp>
#include <json.hpp>

#include "titan/harness.hpp"
#include "titan/version.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string format = "csv";
    int verbosity = 0;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("-c,--config", c.config, "Scenario file (.toml or .json)");
    sub->add_option("-o,--out", c.out, "Output directory (default: $TITAN_OUT_DIR or ./out)");
    sub->add_option("--seed", c.seed, "Base seed override");
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", c.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("-v,--verbose", c.verbosity, "More progress output (repeatable)");
}

titan::ScenarioConfig load_config(const Common& c) {
    titan::ScenarioConfig cfg;
    if (!c.config.empty()) {
        if (!fs::is_regular_file(c.config)) throw UsageError("config file not found: " + c.config);
        cfg = titan::load_scenario_config(c.config);
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.threads) cfg.threads = *c.threads;
    cfg.trace.threads = cfg.threads;
    cfg.validate();
    return cfg;
}

fs::path out_dir(const Common& c) {
    fs::path dir = c.out;
    if (dir.empty()) {
        const char* env = std::getenv("TITAN_OUT_DIR");
        dir = env && *env ? env : "out";
    }
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

/// No timestamps or thread counts: the manifest itself is reproducible.
void write_manifest(const fs::path& dir, const std::string& subcommand, const titan::ScenarioConfig& cfg,
                    const std::vector<std::string>& files, ordered_json extra = ordered_json::object()) {
    ordered_json m;
    m["tool"] = "titan";
    m["subcommand"] = subcommand;
    m["config_hash"] = titan::config_hash(cfg);
    m["seed"] = cfg.seed;
    m["versions"] = {{"titan", titan::kVersion},
                     {"nlohmann_json", "3.11.3"},
                     {"cli11", "2.4.2"},
                     {"tomlplusplus", "3.4.0"},
                     {"boost", BOOST_LIB_VERSION},
                     {"compiler", __VERSION__}};
    m["arguments"] = std::move(extra);
    m["config"] = titan::scenario_to_json(cfg);
    m["files"] = files;
    write_text(dir / "run_manifest.json", m.dump(2) + "\n");
}

titan::Vec3 to_vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

int cmd_gen_scene(const Common& c) {
    const auto cfg = load_config(c);
    const fs::path dir = out_dir(c);
    const titan::Scene scene = titan::build_workspace(cfg).scene;
    titan::save_scene(scene, dir / "scene.obj", dir / "materials.json");
    if (c.verbosity > 0)
        std::fprintf(stderr, "scene: %zu footprints, %zu triangles\n", scene.footprints().size(), scene.triangles().size());
    write_manifest(dir, "gen-scene", cfg, {"scene.obj", "materials.json"});
    return 0;
}

int cmd_trace(const Common& c, const std::vector<double>& tx, const std::vector<double>& rx,
              std::optional<int> depth, const std::string& method) {
    auto cfg = load_config(c);
    if (depth) cfg.trace.max_depth = *depth;
    cfg.trace.validate();
    const fs::path dir = out_dir(c);
    const titan::Scene scene = titan::build_workspace(cfg).scene;
    const titan::Vec3 a = to_vec3(tx), b = to_vec3(rx);
    std::vector<titan::PathTap> taps;
    if (method == "image") {
        taps = titan::trace_image(scene, a, b, cfg.trace.max_depth, cfg.trace.carrier_freq);
    } else {
        const titan::Vec3 rxs[1] = {b};
        taps = titan::trace_sbr(scene, a, rxs, cfg.trace).front();
    }
    std::string file;
    if (c.format == "json") {
        ordered_json arr = ordered_json::array();
        for (const auto& t : taps)
            arr.push_back({{"amplitude_db", 20.0 * std::log10(std::abs(t.amplitude))},
                           {"delay_ns", t.delay * 1e9},
                           {"depth", t.depth()},
                           {"signature", t.signature_string()}});
        file = "taps.json";
        write_text(dir / file, arr.dump(1) + "\n");
    } else {
        std::string csv = "amplitude_db,delay_ns,depth,signature\n";
        char buf[96];
        for (const auto& t : taps) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,", 20.0 * std::log10(std::abs(t.amplitude)), t.delay * 1e9,
                          t.depth());
            csv += buf + t.signature_string() + "\n";
        }
        file = "taps.csv";
        write_text(dir / file, csv);
    }
    if (c.verbosity > 0) std::fprintf(stderr, "%zu taps\n", taps.size());
    write_manifest(dir, "trace", cfg, {file},
                   {{"tx", tx}, {"rx", rx}, {"method", method}, {"max_depth", cfg.trace.max_depth}});
    return 0;
}

int cmd_satvis(const Common& c, const std::string& tle, double lat, double lon, double alt,
               const std::vector<double>& thresholds, double window, double step, std::optional<double> start_jd) {
    const auto cfg = load_config(c);
    const fs::path dir = out_dir(c);
    if (!fs::is_regular_file(tle)) throw UsageError("TLE file not found: " + tle);
    const auto tles = titan::load_tle_file(tle);
    if (tles.empty()) throw std::runtime_error("no TLE sets in " + tle);
    titan::Observer obs{lat, lon, alt};
    obs.validate();
    const double jd = start_jd.value_or(tles.front().epoch_jd());
    const auto series = titan::visibility_series(tles, obs, jd, window, step, thresholds);
    std::vector<std::string> files;
    if (c.format == "json") {
        ordered_json j;
        j["thresholds_deg"] = series.thresholds;
        j["times_s"] = series.times;
        j["counts"] = series.counts;
        j["mean"] = series.mean;
        j["min"] = series.min;
        j["max"] = series.max;
        j["histogram_bin_deg"] = series.histogram_bin;
        j["histogram"] = series.histogram;
        write_text(dir / "visibility.json", j.dump(1) + "\n");
        files.push_back("visibility.json");
    } else {
        write_text(dir / "visibility.csv", series.counts_csv());
        write_text(dir / "elevation_histogram.csv", series.histogram_csv());
        files = {"visibility.csv", "elevation_histogram.csv"};
    }
    if (c.verbosity > 0)
        for (std::size_t i = 0; i < thresholds.size(); ++i)
            std::fprintf(stderr, "elevation >= %g deg: mean %.2f, min %.0f, max %.0f\n", thresholds[i], series.mean[i],
                         series.min[i], series.max[i]);
    write_manifest(dir, "satvis", cfg, files,
                   {{"tle", tle},
                    {"latitude", lat},
                    {"longitude", lon},
                    {"altitude", alt},
                    {"thresholds", thresholds},
                    {"window_s", window},
                    {"step_s", step},
                    {"start_jd", jd}});
    return 0;
}

int cmd_optimize(const Common& c) {
    const auto cfg = load_config(c);
    const fs::path dir = out_dir(c);
    const auto res = titan::run_optimize(cfg);
    auto files = titan::write_outputs(res.output, cfg, dir, c.format);
    write_text(dir / "schedule.json", res.final.schedule.to_json() + "\n");
    files.push_back("schedule.json");
    const auto& k = res.final.kpis;
    std::printf("uavs=%zu coverage=%.4f sum_rate_bps=%.6g fairness_counts=%.4f objective=%.6g%s\n",
                res.placement.topology.uav_positions.size(), k.coverage, k.sum_rate, k.fairness_counts, k.objective,
                res.placement.target_unmet ? " target_unmet" : "");
    write_manifest(dir, "optimize", cfg, files);
    return 0;
}

int cmd_scenario(const Common& c, const std::vector<std::string>& only) {
    auto cfg = load_config(c);
    if (!only.empty()) cfg.scenarios = only;
    cfg.validate();
    const fs::path dir = out_dir(c);
    const auto out = titan::run_scenarios(cfg);
    const auto files = titan::write_outputs(out, cfg, dir, c.format);
    if (c.verbosity > 0) std::fprintf(stderr, "%zu result rows\n", out.rows.size());
    write_manifest(dir, "scenario", cfg, files, {{"scenarios", cfg.scenarios}});
    return 0;
}

titan::Topology topology_from_placements(const std::string& path, const titan::Workspace& ws) {
    std::ifstream in(path);
    if (!in) throw UsageError("placements file not found: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty placements file: " + path);
    const auto j = nlohmann::json::parse(line);
    titan::Topology t;
    for (const auto& p : j.at("uav_positions")) t.uav_positions.push_back({p[0], p[1], p[2]});
    if (j.contains("active_gnbs")) t.active_gnbs = j.at("active_gnbs").get<std::vector<int>>();
    for (int g : t.active_gnbs)
        if (g < 0 || g >= static_cast<int>(ws.gnbs.size())) throw std::runtime_error("placements refer to unknown gNB");
    return t;
}

int cmd_coverage_map(const Common& c, const std::vector<std::vector<double>>& uavs, const std::string& placements) {
    const auto cfg = load_config(c);
    const fs::path dir = out_dir(c);
    const auto ws = titan::build_workspace(cfg);
    titan::Topology topo;
    ordered_json args = ordered_json::object();
    if (!placements.empty()) {
        topo = topology_from_placements(placements, ws);
        args["placements"] = placements;
    } else if (!uavs.empty()) {
        for (const auto& u : uavs) topo.uav_positions.push_back(to_vec3(u));
        for (int g = 0; g < static_cast<int>(ws.gnbs.size()); ++g) topo.active_gnbs.push_back(g);
        args["uav"] = uavs;
    } else {
        const auto res = titan::run_optimize(cfg);
        topo = res.placement.topology;
        args["optimized"] = true;
    }
    write_text(dir / "coverage_map.pgm", titan::coverage_map_pgm(ws, topo, cfg));
    write_manifest(dir, "coverage-map", cfg, {"coverage_map.pgm"}, std::move(args));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"titan: UAV placement over ray-traced urban channels"};
    app.set_version_flag("--version", titan::kVersion);
    app.require_subcommand(1, 1);
    Common common;

    auto* gen = app.add_subcommand("gen-scene", "Write the configured scene as OBJ + material map");
    add_common(gen, common);

    auto* trace = app.add_subcommand("trace", "Trace one tx/rx pair and write its taps");
    add_common(trace, common);
    std::vector<double> tx, rx;
    std::optional<int> depth;
    std::string trace_method = "sbr";
    trace->add_option("--tx", tx, "Transmitter x,y,z (m)")->delimiter(',')->expected(3)->required();
    trace->add_option("--rx", rx, "Receiver x,y,z (m)")->delimiter(',')->expected(3)->required();
    trace->add_option("--depth", depth, "Maximum reflection order")->check(CLI::NonNegativeNumber);
    trace->add_option("--method", trace_method, "Tracer")->check(CLI::IsMember({"sbr", "image"}));

    auto* satvis = app.add_subcommand("satvis", "Visible-satellite counts over a time window");
    add_common(satvis, common);
    std::string tle;
    double lat = 37.77, lon = -122.42, alt = 0.0, window = 86400.0, step = 60.0;
    std::vector<double> thresholds{60.0, 70.0, 80.0};
    std::optional<double> start_jd;
    satvis->add_option("--tle", tle, "TLE file (2- or 3-line sets)")->required();
    satvis->add_option("--lat", lat, "Observer latitude (deg)");
    satvis->add_option("--lon", lon, "Observer longitude (deg)");
    satvis->add_option("--alt", alt, "Observer altitude (m)");
    satvis->add_option("--thresholds", thresholds, "Elevation thresholds (deg)")->delimiter(',');
    satvis->add_option("--window", window, "Window length (s)")->check(CLI::PositiveNumber);
    satvis->add_option("--step", step, "Time step (s)")->check(CLI::PositiveNumber);
    satvis->add_option("--start-jd", start_jd, "Start Julian date (default: first TLE epoch)");

    auto* optimize = app.add_subcommand("optimize", "Place UAVs for the configured network");
    add_common(optimize, common);

    auto* scenario = app.add_subcommand("scenario", "Run the configured scenario sweeps");
    add_common(scenario, common);
    std::vector<std::string> only;
    scenario->add_option("--only", only, "Scenarios to run instead of the configured list")
        ->delimiter(',')
        ->check(CLI::IsMember({"scenario1", "scenario2", "scenario3_gps", "scenario3_fidelity"}));

    auto* covmap = app.add_subcommand("coverage-map", "Best-server SINR raster as ASCII PGM");
    add_common(covmap, common);
    std::vector<std::vector<double>> uavs;
    std::string placements;
    covmap->add_option("--uav", uavs, "UAV x,y,z (repeatable; default: optimize first)")->delimiter(',');
    covmap->add_option("--placements", placements, "placements.jsonl; the first line is used");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    for (const auto& u : uavs)
        if (u.size() != 3) {
            std::fprintf(stderr, "error: --uav expects x,y,z\n");
            return 2;
        }

    try {
        if (*gen) return cmd_gen_scene(common);
        if (*trace) return cmd_trace(common, tx, rx, depth, trace_method);
        if (*satvis) return cmd_satvis(common, tle, lat, lon, alt, thresholds, window, step, start_jd);
        if (*optimize) return cmd_optimize(common);
        if (*scenario) return cmd_scenario(common, only);
        if (*covmap) return cmd_coverage_map(common, uavs, placements);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const titan::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
