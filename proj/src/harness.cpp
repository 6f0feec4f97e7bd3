#include "titan/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <toml.hpp>

#include "titan/parallel.hpp"

namespace titan {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

void ScenarioConfig::validate() const {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (ue_count < 1) throw ConfigError("ue_count must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (uavs_per_failure < 1) throw ConfigError("uavs_per_failure must be >= 1");
    for (double s : robustness.gps_sigma)
        if (!(s >= 0.0)) throw ConfigError("gps_sigma values must be >= 0");
    for (double f : robustness.fidelity)
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fidelity values must be in (0, 1]");
    for (int c : uav_counts)
        if (c < 1) throw ConfigError("uav_counts must be >= 1");
    if (ue_layout != "uniform" && ue_layout != "around_gnbs") throw ConfigError("ue_layout must be uniform or around_gnbs");
    if (ue_layout == "around_gnbs" && gnbs.empty()) throw ConfigError("ue_layout around_gnbs needs gnbs");
    for (const auto& e : events)
        if (e.gnb < 0 || e.gnb >= static_cast<int>(gnbs.size()))
            throw ConfigError("event references unknown gNB " + std::to_string(e.gnb));
    for (const auto& s : scenarios)
        if (s != "scenario1" && s != "scenario2" && s != "scenario3_gps" && s != "scenario3_fidelity")
            throw ConfigError("unknown scenario: " + s);
    radio.validate();
    trace.validate();
    placement.validate();
    scheduler.validate();
    if (!(coverage_map.resolution > 0.0) || !(coverage_map.sinr_min_db < coverage_map.sinr_max_db))
        throw ConfigError("coverage_map: resolution must be > 0 and sinr_min_db < sinr_max_db");
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

Vec3 vec3_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json toml_to_json(const toml::node& node) {
    if (auto t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
        return out;
    }
    if (auto a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(toml_to_json(v));
        return out;
    }
    if (auto v = node.as_string()) return v->get();
    if (auto v = node.as_integer()) return v->get();
    if (auto v = node.as_floating_point()) return v->get();
    if (auto v = node.as_boolean()) return v->get();
    throw ConfigError("unsupported TOML value (dates and times are not accepted)");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a table/object");
    ScenarioConfig c;
    read(j, "seed", c.seed);
    read(j, "repetitions", c.repetitions);
    read(j, "threads", c.threads);
    read(j, "ue_count", c.ue_count);
    read(j, "ue_height", c.ue_height);
    read(j, "ue_layout", c.ue_layout);
    read(j, "ue_radius", c.ue_radius);
    read(j, "uav_counts", c.uav_counts);
    read(j, "uavs_per_failure", c.uavs_per_failure);
    read(j, "count_gnbs_in_fairness", c.count_gnbs_in_fairness);
    read(j, "scenarios", c.scenarios);
    if (j.contains("gnbs")) {
        c.gnbs.clear();
        for (const auto& g : j.at("gnbs")) c.gnbs.push_back(vec3_from(g));
    }
    if (j.contains("methods")) {
        c.methods.clear();
        try {
            for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (j.contains("events")) {
        c.events.clear();
        for (const auto& e : j.at("events")) {
            DisasterEvent ev;
            read(e, "time", ev.time);
            read(e, "gnb", ev.gnb);
            c.events.push_back(ev);
        }
    }
    if (j.contains("scene")) {
        const json& s = j.at("scene");
        read(s, "kind", c.scene.kind);
        read(s, "blocks_x", c.scene.manhattan.blocks_x);
        read(s, "blocks_y", c.scene.manhattan.blocks_y);
        read(s, "block_w", c.scene.manhattan.block_w);
        read(s, "street_w", c.scene.manhattan.street_w);
        read(s, "height_min", c.scene.manhattan.height_min);
        read(s, "height_max", c.scene.manhattan.height_max);
        read(s, "seed", c.scene.manhattan.seed);
        read(s, "path", c.scene.path);
        read(s, "material_map", c.scene.material_map);
        read(s, "strict", c.scene.strict);
        if (c.scene.kind != "manhattan" && c.scene.kind != "file") throw ConfigError("scene.kind must be manhattan or file");
    }
    if (j.contains("radio")) {
        const json& r = j.at("radio");
        read(r, "carrier_freq", c.radio.carrier_freq);
        read(r, "subcarrier_spacing", c.radio.subcarrier_spacing);
        read(r, "num_subcarriers", c.radio.num_subcarriers);
        read(r, "bandwidth", c.radio.bandwidth);
        read(r, "tx_power_dbm", c.radio.tx_power_dbm);
        read(r, "eirp_d2c_dbm", c.radio.eirp_d2c_dbm);
        read(r, "d2c_bandwidth", c.radio.d2c_bandwidth);
        read(r, "noise_temperature", c.radio.noise_temperature);
        read(r, "sinr_threshold_db", c.radio.sinr_threshold_db);
        read(r, "cross_tier_interference", c.radio.cross_tier_interference);
    }
    if (j.contains("trace")) {
        const json& t = j.at("trace");
        read(t, "max_depth", c.trace.max_depth);
        read(t, "ray_count", c.trace.ray_count);
        read(t, "capture_radius_scale", c.trace.capture_radius_scale);
        read(t, "fidelity", c.trace.fidelity);
    }
    if (j.contains("placement")) {
        const json& p = j.at("placement");
        read(p, "rho_target", c.placement.rho_target);
        read(p, "n_iter", c.placement.n_iter);
        read(p, "max_uavs", c.placement.max_uavs);
        if (p.contains("fixed_count") && !p.at("fixed_count").is_null()) c.placement.fixed_count = p.at("fixed_count").get<int>();
        if (p.contains("weights")) {
            const auto w = p.at("weights").get<std::vector<double>>();
            if (w.size() != 3) throw ConfigError("placement.weights must have 3 entries");
            c.placement.weights = {w[0], w[1], w[2]};
        }
        read(p, "z_min", c.placement.z_min);
        read(p, "z_max", c.placement.z_max);
        read(p, "n_startup", c.placement.tpe.n_startup);
        read(p, "gamma", c.placement.tpe.gamma);
        read(p, "n_candidates", c.placement.tpe.n_candidates);
    }
    if (j.contains("scheduler")) {
        const json& s = j.at("scheduler");
        read(s, "n_slots", c.scheduler.n_slots);
        read(s, "rb_subcarriers", c.scheduler.rb_subcarriers);
        if (s.contains("pf_time_constant")) {
            const auto& v = s.at("pf_time_constant");
            c.scheduler.pf_time_constant =
                v.is_string() && v.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity() : v.get<double>();
        }
        read(s, "max_ues_per_tx_per_slot", c.scheduler.max_ues_per_tx_per_slot);
        read(s, "slot_duration", c.scheduler.slot_duration);
        read(s, "epsilon", c.scheduler.epsilon);
    }
    if (j.contains("robustness")) {
        read(j.at("robustness"), "gps_sigma", c.robustness.gps_sigma);
        read(j.at("robustness"), "fidelity", c.robustness.fidelity);
    }
    if (j.contains("satellites")) {
        const json& s = j.at("satellites");
        read(s, "tle", c.satellites.tle_path);
        read(s, "latitude", c.satellites.observer.latitude);
        read(s, "longitude", c.satellites.observer.longitude);
        read(s, "altitude", c.satellites.observer.altitude);
        if (s.contains("jd")) c.satellites.jd = s.at("jd").get<double>();
        read(s, "min_elevation", c.satellites.min_elevation);
        read(s, "count", c.satellites.default_count);
        read(s, "range", c.satellites.range);
        read(s, "tle_range", c.satellites.tle_range);
    }
    if (j.contains("coverage_map")) {
        read(j.at("coverage_map"), "resolution", c.coverage_map.resolution);
        read(j.at("coverage_map"), "sinr_min_db", c.coverage_map.sinr_min_db);
        read(j.at("coverage_map"), "sinr_max_db", c.coverage_map.sinr_max_db);
    }
    c.trace.threads = c.threads;
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

json scenario_to_json(const ScenarioConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["repetitions"] = c.repetitions;
    j["ue_count"] = c.ue_count;
    j["ue_height"] = c.ue_height;
    j["ue_layout"] = c.ue_layout;
    j["ue_radius"] = c.ue_radius;
    j["uav_counts"] = c.uav_counts;
    j["uavs_per_failure"] = c.uavs_per_failure;
    j["count_gnbs_in_fairness"] = c.count_gnbs_in_fairness;
    j["scenarios"] = c.scenarios;
    j["gnbs"] = json::array();
    for (const auto& g : c.gnbs) j["gnbs"].push_back({g.x, g.y, g.z});
    j["methods"] = json::array();
    for (auto m : c.methods) j["methods"].push_back(method_name(m));
    j["events"] = json::array();
    for (const auto& e : c.events) j["events"].push_back({{"time", e.time}, {"gnb", e.gnb}});
    const auto& m = c.scene.manhattan;
    j["scene"] = {{"kind", c.scene.kind},         {"blocks_x", m.blocks_x},   {"blocks_y", m.blocks_y},
                  {"block_w", m.block_w},         {"street_w", m.street_w},   {"height_min", m.height_min},
                  {"height_max", m.height_max},   {"seed", m.seed},           {"path", c.scene.path},
                  {"material_map", c.scene.material_map}, {"strict", c.scene.strict}};
    const auto& r = c.radio;
    j["radio"] = {{"carrier_freq", r.carrier_freq},
                  {"subcarrier_spacing", r.subcarrier_spacing},
                  {"num_subcarriers", r.num_subcarriers},
                  {"bandwidth", r.bandwidth},
                  {"tx_power_dbm", r.tx_power_dbm},
                  {"eirp_d2c_dbm", r.eirp_d2c_dbm},
                  {"d2c_bandwidth", r.d2c_bandwidth},
                  {"noise_temperature", r.noise_temperature},
                  {"sinr_threshold_db", r.sinr_threshold_db},
                  {"cross_tier_interference", r.cross_tier_interference}};
    j["trace"] = {{"max_depth", c.trace.max_depth},
                  {"ray_count", c.trace.ray_count},
                  {"capture_radius_scale", c.trace.capture_radius_scale},
                  {"fidelity", c.trace.fidelity}};
    const auto& p = c.placement;
    j["placement"] = {{"rho_target", p.rho_target},
                      {"n_iter", p.n_iter},
                      {"max_uavs", p.max_uavs},
                      {"fixed_count", p.fixed_count ? json(*p.fixed_count) : json(nullptr)},
                      {"weights", {p.weights.capacity, p.weights.coverage, p.weights.fairness}},
                      {"z_min", p.z_min},
                      {"z_max", p.z_max},
                      {"n_startup", p.tpe.n_startup},
                      {"gamma", p.tpe.gamma},
                      {"n_candidates", p.tpe.n_candidates}};
    const auto& s = c.scheduler;
    j["scheduler"] = {{"n_slots", s.n_slots},
                      {"rb_subcarriers", s.rb_subcarriers},
                      {"pf_time_constant", std::isfinite(s.pf_time_constant) ? json(s.pf_time_constant) : json("inf")},
                      {"max_ues_per_tx_per_slot", s.max_ues_per_tx_per_slot},
                      {"slot_duration", s.slot_duration},
                      {"epsilon", s.epsilon}};
    j["robustness"] = {{"gps_sigma", c.robustness.gps_sigma}, {"fidelity", c.robustness.fidelity}};
    j["satellites"] = {{"tle", c.satellites.tle_path},
                       {"latitude", c.satellites.observer.latitude},
                       {"longitude", c.satellites.observer.longitude},
                       {"altitude", c.satellites.observer.altitude},
                       {"min_elevation", c.satellites.min_elevation},
                       {"count", c.satellites.default_count},
                       {"range", c.satellites.range},
                       {"tle_range", c.satellites.tle_range}};
    if (c.satellites.jd) j["satellites"]["jd"] = *c.satellites.jd;
    j["coverage_map"] = {{"resolution", c.coverage_map.resolution},
                         {"sinr_min_db", c.coverage_map.sinr_min_db},
                         {"sinr_max_db", c.coverage_map.sinr_max_db}};
    return j;
}

json read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (path.extension() == ".toml") {
        try {
            return toml_to_json(toml::parse(text, path.string()));
        } catch (const toml::parse_error& e) {
            throw ConfigError("TOML parse error in " + path.string() + ": " + std::string(e.description()));
        }
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("JSON parse error in " + path.string() + ": " + e.what());
    }
}

ScenarioConfig load_scenario_config(const fs::path& path) {
    ScenarioConfig c = scenario_from_json(read_config_file(path));
    const fs::path base = path.parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
    };
    resolve(c.scene.path);
    resolve(c.scene.material_map);
    resolve(c.satellites.tle_path);
    return c;
}

std::string config_hash(const ScenarioConfig& config) {
    const std::string text = scenario_to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Statistics

MeanCi mean_ci95(std::span<const double> v) {
    MeanCi r;
    r.n = v.size();
    if (v.empty()) {
        r.mean = r.lo = r.hi = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    r.mean = sum / static_cast<double>(r.n);
    if (r.n < 2) {
        r.lo = r.hi = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    const double sd = std::sqrt(ss / static_cast<double>(r.n - 1));
    const boost::math::students_t dist(static_cast<double>(r.n - 1));
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    const double half = t * sd / std::sqrt(static_cast<double>(r.n));
    r.lo = r.mean - half;
    r.hi = r.mean + half;
    return r;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void ScenarioOutput::append(ScenarioOutput o) {
    auto move_into = [](auto& dst, auto& src) {
        dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
    };
    move_into(rows, o.rows);
    move_into(timing, o.timing);
    move_into(timeline, o.timeline);
    move_into(placements, o.placements);
    move_into(trials, o.trials);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    using Key = std::tuple<std::string, std::string, std::string, int, std::string>;
    std::vector<Key> order;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : rows) {
        Key k{r.scenario, r.method, r.setting, r.uav_count, r.metric};
        auto [it, inserted] = groups.try_emplace(k);
        if (inserted) order.push_back(k);
        it->second.push_back(r.value);
    }
    std::vector<SummaryRow> out;
    for (const auto& k : order) {
        SummaryRow s{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), std::get<4>(k), {}};
        s.stats = mean_ci95(groups[k]);
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inputs

Workspace build_workspace(const ScenarioConfig& config) {
    Workspace ws;
    if (config.scene.kind == "file") {
        if (config.scene.path.empty()) throw ConfigError("scene.path is required for kind = file");
        ws.scene = load_scene(config.scene.path, config.scene.material_map, config.scene.strict);
    } else {
        ws.scene = generate_manhattan(config.scene.manhattan);
    }
    ws.gnbs = config.gnbs;
    return ws;
}

std::vector<Vec3> sample_ues(const Workspace& ws, const ScenarioConfig& config, std::uint64_t rep_seed) {
    const std::uint64_t seed = derive_seed(rep_seed, "ues");
    if (config.ue_layout == "uniform") return sample_outdoor_ues(ws.scene, config.ue_count, config.ue_height, seed);
    std::vector<Vec3> out;
    const int n_sites = static_cast<int>(ws.gnbs.size());
    for (int g = 0; g < n_sites; ++g) {
        const int count = config.ue_count / n_sites + (g < config.ue_count % n_sites ? 1 : 0);
        if (count == 0) continue;
        const auto part = sample_outdoor_ues_near(ws.scene, count, config.ue_height, derive_seed(seed, std::to_string(g)),
                                                  {ws.gnbs[g].x, ws.gnbs[g].y}, config.ue_radius);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

std::vector<Vec3> perturb_ues(const Scene& scene, const std::vector<Vec3>& ues, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("perturb_ues: sigma must be >= 0");
    Rng rng(seed);
    const Aabb& b = scene.bounds();
    std::vector<Vec3> out;
    out.reserve(ues.size());
    for (const auto& u : ues) {
        const double nx = rng.normal(), ny = rng.normal();
        if (sigma == 0.0) {
            out.push_back(u);
            continue;
        }
        Vec2 p{std::clamp(u.x + sigma * nx, b.lo.x, b.hi.x), std::clamp(u.y + sigma * ny, b.lo.y, b.hi.y)};
        if (!scene.is_outdoor(p)) p = nearest_outdoor(scene, p);
        out.push_back({p.x, p.y, u.z});
    }
    return out;
}

std::vector<SatelliteLink> resolve_satellites(const SatelliteSource& src) {
    if (src.tle_path.empty()) return default_satellites(src.default_count, src.min_elevation, src.range);
    const auto tles = load_tle_file(src.tle_path);
    if (tles.empty()) return {};
    const double jd = src.jd.value_or(tles.front().epoch_jd());
    auto sats = satellites_in_view(tles, src.observer, jd, src.min_elevation);
    if (!src.tle_range)
        for (auto& s : sats) s.range = src.range;
    return sats;
}

FinalEvaluation evaluate_final(const Workspace& ws, const std::vector<Vec3>& ues, const Topology& topology,
                               const ScenarioConfig& config, double fidelity) {
    EvaluationSetup setup;
    setup.radio = config.radio;
    setup.trace = config.trace;
    setup.trace.fidelity = fidelity;
    setup.weights = config.placement.weights;
    setup.backend = ChannelBackend::Raytraced;
    setup.count_gnbs_in_fairness = config.count_gnbs_in_fairness;
    NetworkEvaluator ev(ws.scene, ues, ws.gnbs, setup);
    FinalEvaluation fe;
    std::tie(fe.kpis, fe.report) = ev.evaluate_full(topology);
    std::vector<std::optional<int>> assoc(ues.size());
    for (int u : fe.kpis.covered_set) assoc[u] = fe.report[u].serving;
    const int n_tx = static_cast<int>(topology.uav_positions.size() + ws.gnbs.size());
    fe.schedule = run_pf(fe.report, assoc, n_tx, config.scheduler, config.radio);
    return fe;
}

// ---------------------------------------------------------------------------
// Scenarios

namespace {

struct CellContext {
    std::string scenario, method, setting;
    int uav_count = 0;
    int rep = 0;
    std::uint64_t seed = 0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void add_row(ScenarioOutput& out, const CellContext& c, const std::string& metric, double value) {
    out.rows.push_back({c.scenario, c.method, c.setting, c.uav_count, c.rep, c.seed, metric, value});
}

void add_kpi_rows(ScenarioOutput& out, const CellContext& c, const Kpis& k) {
    add_row(out, c, "objective", k.objective);
    add_row(out, c, "coverage", k.coverage);
    add_row(out, c, "sum_rate_bps", k.sum_rate);
    add_row(out, c, "fairness_counts", k.fairness_counts);
    add_row(out, c, "fairness_rates", k.fairness_rates);
}

void add_final_rows(ScenarioOutput& out, const CellContext& c, const FinalEvaluation& fe) {
    add_kpi_rows(out, c, fe.kpis);
    add_row(out, c, "pf_throughput_bps", fe.schedule.sum_throughput);
    add_row(out, c, "pf_jain", fe.schedule.jain_rates);
}

std::string placement_line(const CellContext& c, const Topology& t, bool target_unmet, double objective) {
    ordered_json j;
    j["scenario"] = c.scenario;
    j["method"] = c.method;
    j["setting"] = c.setting;
    j["uav_count"] = c.uav_count;
    j["rep"] = c.rep;
    j["seed"] = c.seed;
    j["uav_positions"] = ordered_json::array();
    for (const auto& p : t.uav_positions) j["uav_positions"].push_back({p.x, p.y, p.z});
    j["active_gnbs"] = t.active_gnbs;
    j["target_unmet"] = target_unmet;
    j["objective"] = objective;
    return j.dump();
}

void add_trial_lines(ScenarioOutput& out, const CellContext& c, const PlacementResult& pr) {
    std::istringstream in(trial_log_jsonl(pr));
    for (std::string line; std::getline(in, line);) {
        ordered_json j;
        j["scenario"] = c.scenario;
        j["setting"] = c.setting;
        j["rep"] = c.rep;
        const ordered_json entry = ordered_json::parse(line);
        for (const auto& [k, v] : entry.items()) j[k] = v;
        out.trials.push_back(j.dump());
    }
}

EvaluationSetup base_setup(const ScenarioConfig& config, int trace_threads) {
    EvaluationSetup s;
    s.radio = config.radio;
    s.trace = config.trace;
    s.trace.threads = trace_threads;
    s.weights = config.placement.weights;
    s.count_gnbs_in_fairness = config.count_gnbs_in_fairness;
    return s;
}

std::vector<Method> uav_methods(const ScenarioConfig& config) {
    std::vector<Method> out;
    for (auto m : config.methods)
        if (m != Method::D2c) out.push_back(m);
    return out;
}

/// Runs independent cells on config.threads workers and concatenates their
/// outputs in cell order, so the result is independent of the worker count.
template <typename Fn>
ScenarioOutput run_cells(std::size_t n, int threads, Fn&& fn) {
    std::vector<ScenarioOutput> slots(n);
    parallel_for(n, threads, [&](std::size_t i) { slots[i] = fn(i); });
    ScenarioOutput out;
    for (auto& s : slots) out.append(std::move(s));
    return out;
}

ScenarioConfig with_inner_threads(const ScenarioConfig& config, std::size_t cells) {
    ScenarioConfig c = config;
    c.trace.threads = cells > 1 ? 1 : config.threads;
    return c;
}

}  // namespace

ScenarioOutput run_scenario1(const ScenarioConfig& config) {
    config.validate();
    if (config.methods.empty()) throw ConfigError("scenario1: method list is empty");
    const Workspace ws = build_workspace(config);
    struct Cell {
        Method method;
        int count;
        int rep;
    };
    std::vector<Cell> cells;
    for (int rep = 0; rep < config.repetitions; ++rep)
        for (auto m : config.methods) {
            if (m == Method::D2c) {
                cells.push_back({m, 0, rep});
                continue;
            }
            for (int c : config.uav_counts) cells.push_back({m, c, rep});
        }
    const ScenarioConfig inner = with_inner_threads(config, cells.size());
    const auto satellites = resolve_satellites(config.satellites);

    return run_cells(cells.size(), config.threads, [&](std::size_t i) {
        const Cell& cell = cells[i];
        ScenarioOutput out;
        const std::uint64_t rep_seed = split_seed(config.seed, cell.rep);
        CellContext ctx{"scenario1", method_name(cell.method), "", cell.count, cell.rep, rep_seed};
        try {
            const auto ues = sample_ues(ws, config, rep_seed);
            if (cell.method == Method::D2c) {
                const Kpis k = d2c_baseline(ws.scene, ues, satellites, config.radio, config.placement.weights);
                add_kpi_rows(out, ctx, k);
                return out;
            }
            PlacementConfig pc = config.placement;
            pc.method = cell.method;
            pc.fixed_count = cell.count;
            pc.seed = derive_seed(rep_seed, "placement");
            const auto t0 = std::chrono::steady_clock::now();
            const PlacementResult pr = run_placement(ws.scene, ues, ws.gnbs, {}, base_setup(inner, inner.trace.threads), pc);
            out.timing.push_back({ctx.scenario, ctx.method, ctx.setting, ctx.uav_count, ctx.rep, seconds_since(t0)});
            const FinalEvaluation fe = evaluate_final(ws, ues, pr.topology, inner);
            add_final_rows(out, ctx, fe);
            add_row(out, ctx, "target_unmet", pr.target_unmet ? 1.0 : 0.0);
            out.placements.push_back(placement_line(ctx, pr.topology, pr.target_unmet, fe.kpis.objective));
            add_trial_lines(out, ctx, pr);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "scenario1 %s uavs=%d rep=%d failed: %s\n", ctx.method.c_str(), ctx.uav_count, ctx.rep,
                         e.what());
            out = {};
            add_row(out, ctx, "failed", 1.0);
        }
        return out;
    });
}

ScenarioOutput run_scenario2(const ScenarioConfig& config) {
    config.validate();
    const auto methods = uav_methods(config);
    if (methods.empty()) throw ConfigError("scenario2: needs at least one UAV placement method");
    const Workspace ws = build_workspace(config);
    std::vector<DisasterEvent> events = config.events;
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    {
        std::vector<int> active(ws.gnbs.size(), 1);
        for (const auto& e : events) {
            if (!active[e.gnb]) throw ConfigError("event disables gNB " + std::to_string(e.gnb) + " twice");
            active[e.gnb] = 0;
        }
    }
    struct Cell {
        Method method;
        int rep;
    };
    std::vector<Cell> cells;
    for (int rep = 0; rep < config.repetitions; ++rep)
        for (auto m : methods) cells.push_back({m, rep});
    const ScenarioConfig inner = with_inner_threads(config, cells.size());

    return run_cells(cells.size(), config.threads, [&](std::size_t i) {
        const Cell& cell = cells[i];
        ScenarioOutput out;
        const std::uint64_t rep_seed = split_seed(config.seed, cell.rep);
        const std::string mname = method_name(cell.method);
        const auto ues = sample_ues(ws, config, rep_seed);

        Topology topo;
        for (int g = 0; g < static_cast<int>(ws.gnbs.size()); ++g) topo.active_gnbs.push_back(g);
        std::string failed;
        double initial_rate = 0.0;

        auto record = [&](int stage, const std::string& kind, const FinalEvaluation& fe) {
            CellContext ctx{"scenario2", mname, "stage=" + std::to_string(stage) + ":" + kind,
                            static_cast<int>(topo.uav_positions.size()), cell.rep, rep_seed};
            if (stage == 0) initial_rate = fe.kpis.sum_rate;
            const double ratio = initial_rate > 0.0 ? fe.kpis.sum_rate / initial_rate : 0.0;
            add_final_rows(out, ctx, fe);
            add_row(out, ctx, "recovery_ratio", ratio);
            out.timeline.push_back({mname, cell.rep, stage, kind, failed, ctx.uav_count, fe.kpis.coverage,
                                    fe.kpis.sum_rate, fe.kpis.fairness_counts, fe.kpis.objective, ratio});
            return ctx;
        };

        record(0, "initial", evaluate_final(ws, ues, topo, inner));
        int stage = 0;
        for (const auto& ev : events) {
            ++stage;
            topo.active_gnbs.erase(std::remove(topo.active_gnbs.begin(), topo.active_gnbs.end(), ev.gnb),
                                   topo.active_gnbs.end());
            failed += (failed.empty() ? "" : ";") + std::to_string(ev.gnb);
            record(stage, "degraded", evaluate_final(ws, ues, topo, inner));

            PlacementConfig pc = config.placement;
            pc.method = cell.method;
            pc.fixed_count = stage * config.uavs_per_failure;
            pc.seed = derive_seed(rep_seed, "placement/stage=" + std::to_string(stage));
            const auto t0 = std::chrono::steady_clock::now();
            const PlacementResult pr =
                run_placement(ws.scene, ues, ws.gnbs, topo.active_gnbs, base_setup(inner, inner.trace.threads), pc);
            const double wall = seconds_since(t0);
            topo.uav_positions = pr.topology.uav_positions;
            const FinalEvaluation fe = evaluate_final(ws, ues, topo, inner);
            const CellContext ctx = record(stage, "recovered", fe);
            out.timing.push_back({ctx.scenario, ctx.method, ctx.setting, ctx.uav_count, ctx.rep, wall});
            out.placements.push_back(placement_line(ctx, topo, pr.target_unmet, fe.kpis.objective));
            add_trial_lines(out, ctx, pr);
        }
        return out;
    });
}

ScenarioOutput run_scenario3_gps(const ScenarioConfig& config) {
    config.validate();
    if (config.robustness.gps_sigma.empty()) throw ConfigError("scenario3_gps: gps_sigma list is empty");
    const auto methods = uav_methods(config);
    if (methods.empty()) throw ConfigError("scenario3_gps: needs at least one UAV placement method");
    const Workspace ws = build_workspace(config);
    struct Cell {
        Method method;
        double sigma;
        int count;
        int rep;
    };
    std::vector<Cell> cells;
    for (int rep = 0; rep < config.repetitions; ++rep)
        for (auto m : methods)
            for (int c : config.uav_counts)
                for (double s : config.robustness.gps_sigma) cells.push_back({m, s, c, rep});
    const ScenarioConfig inner = with_inner_threads(config, cells.size());

    return run_cells(cells.size(), config.threads, [&](std::size_t i) {
        const Cell& cell = cells[i];
        ScenarioOutput out;
        const std::uint64_t rep_seed = split_seed(config.seed, cell.rep);
        CellContext ctx{"scenario3_gps", method_name(cell.method), "sigma=" + fmt_short(cell.sigma), cell.count, cell.rep,
                        rep_seed};
        const auto ues = sample_ues(ws, config, rep_seed);
        const auto noisy = perturb_ues(ws.scene, ues, cell.sigma, derive_seed(rep_seed, "gps"));
        PlacementConfig pc = config.placement;
        pc.method = cell.method;
        pc.fixed_count = cell.count;
        pc.seed = derive_seed(rep_seed, "placement");
        const auto t0 = std::chrono::steady_clock::now();
        const PlacementResult pr = run_placement(ws.scene, noisy, ws.gnbs, {}, base_setup(inner, inner.trace.threads), pc);
        out.timing.push_back({ctx.scenario, ctx.method, ctx.setting, ctx.uav_count, ctx.rep, seconds_since(t0)});
        const FinalEvaluation fe = evaluate_final(ws, ues, pr.topology, inner);
        add_final_rows(out, ctx, fe);
        out.placements.push_back(placement_line(ctx, pr.topology, pr.target_unmet, fe.kpis.objective));
        add_trial_lines(out, ctx, pr);
        return out;
    });
}

ScenarioOutput run_scenario3_fidelity(const ScenarioConfig& config) {
    config.validate();
    const auto& fids = config.robustness.fidelity;
    if (std::find(fids.begin(), fids.end(), 1.0) == fids.end())
        throw ConfigError("scenario3_fidelity: fidelity list must include 1.0");
    const auto methods = uav_methods(config);
    if (methods.empty()) throw ConfigError("scenario3_fidelity: needs at least one UAV placement method");
    const Workspace ws = build_workspace(config);
    struct Cell {
        Method method;
        double fidelity;
        int count;
        int rep;
    };
    std::vector<Cell> cells;
    for (int rep = 0; rep < config.repetitions; ++rep)
        for (auto m : methods)
            for (int c : config.uav_counts)
                for (double f : fids) cells.push_back({m, f, c, rep});
    const ScenarioConfig inner = with_inner_threads(config, cells.size());

    std::vector<Kpis> finals(cells.size());
    ScenarioOutput out = run_cells(cells.size(), config.threads, [&](std::size_t i) {
        const Cell& cell = cells[i];
        ScenarioOutput o;
        const std::uint64_t rep_seed = split_seed(config.seed, cell.rep);
        CellContext ctx{"scenario3_fidelity", method_name(cell.method), "fidelity=" + fmt_short(cell.fidelity),
                        cell.count, cell.rep, rep_seed};
        const auto ues = sample_ues(ws, config, rep_seed);
        PlacementConfig pc = config.placement;
        pc.method = cell.method;
        pc.fixed_count = cell.count;
        pc.seed = derive_seed(rep_seed, "placement");
        EvaluationSetup setup = base_setup(inner, inner.trace.threads);
        setup.trace.fidelity = cell.fidelity;
        const auto t0 = std::chrono::steady_clock::now();
        const PlacementResult pr = run_placement(ws.scene, ues, ws.gnbs, {}, setup, pc);
        o.timing.push_back({ctx.scenario, ctx.method, ctx.setting, ctx.uav_count, ctx.rep, seconds_since(t0)});
        const FinalEvaluation fe = evaluate_final(ws, ues, pr.topology, inner, 1.0);
        finals[i] = fe.kpis;
        add_final_rows(o, ctx, fe);
        o.placements.push_back(placement_line(ctx, pr.topology, pr.target_unmet, fe.kpis.objective));
        add_trial_lines(o, ctx, pr);
        return o;
    });

    // Ratios against the full-fidelity cell of the same (method, count, rep).
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::size_t ref = i;
        for (std::size_t j = 0; j < cells.size(); ++j)
            if (cells[j].fidelity == 1.0 && cells[j].method == cells[i].method && cells[j].count == cells[i].count &&
                cells[j].rep == cells[i].rep)
                ref = j;
        const Cell& cell = cells[i];
        CellContext ctx{"scenario3_fidelity", method_name(cell.method), "fidelity=" + fmt_short(cell.fidelity),
                        cell.count, cell.rep, split_seed(config.seed, cell.rep)};
        auto ratio = [](double a, double b) { return b > 0.0 ? a / b : (a > 0.0 ? std::numeric_limits<double>::infinity() : 1.0); };
        add_row(out, ctx, "objective_ratio", ratio(finals[i].objective, finals[ref].objective));
        add_row(out, ctx, "sum_rate_ratio", ratio(finals[i].sum_rate, finals[ref].sum_rate));
    }
    return out;
}

ScenarioOutput run_scenarios(const ScenarioConfig& config) {
    ScenarioOutput out;
    for (const auto& s : config.scenarios) {
        if (s == "scenario1") out.append(run_scenario1(config));
        else if (s == "scenario2") out.append(run_scenario2(config));
        else if (s == "scenario3_gps") out.append(run_scenario3_gps(config));
        else if (s == "scenario3_fidelity") out.append(run_scenario3_fidelity(config));
        else throw ConfigError("unknown scenario: " + s);
    }
    return out;
}

OptimizeOutput run_optimize(const ScenarioConfig& config) {
    config.validate();
    const auto methods = uav_methods(config);
    if (methods.empty()) throw ConfigError("optimize: needs a UAV placement method");
    const Workspace ws = build_workspace(config);
    const std::uint64_t rep_seed = split_seed(config.seed, 0);
    const auto ues = sample_ues(ws, config, rep_seed);
    std::vector<int> active;
    for (int g = 0; g < static_cast<int>(ws.gnbs.size()); ++g) active.push_back(g);
    PlacementConfig pc = config.placement;
    pc.method = methods.front();
    pc.seed = derive_seed(rep_seed, "placement");
    OptimizeOutput o;
    const auto t0 = std::chrono::steady_clock::now();
    o.placement = run_placement(ws.scene, ues, ws.gnbs, active, base_setup(config, config.threads), pc);
    const double wall = seconds_since(t0);
    o.final = evaluate_final(ws, ues, o.placement.topology, config);
    CellContext ctx{"optimize", method_name(pc.method), "", static_cast<int>(o.placement.topology.uav_positions.size()),
                    0, rep_seed};
    add_final_rows(o.output, ctx, o.final);
    add_row(o.output, ctx, "target_unmet", o.placement.target_unmet ? 1.0 : 0.0);
    o.output.timing.push_back({ctx.scenario, ctx.method, ctx.setting, ctx.uav_count, 0, wall});
    o.output.placements.push_back(placement_line(ctx, o.placement.topology, o.placement.target_unmet, o.final.kpis.objective));
    add_trial_lines(o.output, ctx, o.placement);
    return o;
}

std::string coverage_map_pgm(const Workspace& ws, const Topology& topology, const ScenarioConfig& config) {
    const Aabb& b = ws.scene.bounds();
    const double res = config.coverage_map.resolution;
    const int nx = std::max(1, static_cast<int>(std::ceil((b.hi.x - b.lo.x) / res)));
    const int ny = std::max(1, static_cast<int>(std::ceil((b.hi.y - b.lo.y) / res)));
    std::vector<Vec3> points;
    std::vector<int> index(static_cast<std::size_t>(nx) * ny, -1);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const Vec2 p{b.lo.x + (ix + 0.5) * res, b.lo.y + (iy + 0.5) * res};
            if (!ws.scene.is_outdoor(p)) continue;
            index[static_cast<std::size_t>(iy) * nx + ix] = static_cast<int>(points.size());
            points.push_back({p.x, p.y, ws.scene.ground_elevation(p.x, p.y) + config.ue_height});
        }
    EvaluationSetup setup = base_setup(config, config.threads);
    NetworkEvaluator ev(ws.scene, points, ws.gnbs, setup);
    const SinrReport report = ev.evaluate_full(topology).second;
    const auto& cm = config.coverage_map;
    std::ostringstream out;
    out << "P2\n" << nx << ' ' << ny << "\n255\n";
    for (int iy = ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const int k = index[static_cast<std::size_t>(iy) * nx + ix];
            int level = 0;
            if (k >= 0) {
                const double g = report[k].wideband;
                const double db = g > 0.0 ? to_db(g) : cm.sinr_min_db;
                const double x = std::clamp((db - cm.sinr_min_db) / (cm.sinr_max_db - cm.sinr_min_db), 0.0, 1.0);
                level = 1 + static_cast<int>(std::lround(x * 254.0));
            }
            out << level << (ix + 1 < nx ? " " : "\n");
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Output

std::string results_csv(const std::vector<ResultRow>& rows, const std::string& hash) {
    std::string out = "scenario,method,setting,uav_count,rep,seed,config_hash,metric,value\n";
    for (const auto& r : rows) {
        out += csv_field(r.scenario) + ',' + csv_field(r.method) + ',' + csv_field(r.setting) + ',' +
               std::to_string(r.uav_count) + ',' + std::to_string(r.rep) + ',' + std::to_string(r.seed) + ',' + hash + ',' +
               csv_field(r.metric) + ',' + fmt(r.value) + '\n';
    }
    return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out = "scenario,method,setting,uav_count,metric,n,mean,ci95_low,ci95_high\n";
    for (const auto& r : rows)
        out += csv_field(r.scenario) + ',' + csv_field(r.method) + ',' + csv_field(r.setting) + ',' +
               std::to_string(r.uav_count) + ',' + csv_field(r.metric) + ',' + std::to_string(r.stats.n) + ',' +
               fmt(r.stats.mean) + ',' + fmt(r.stats.lo) + ',' + fmt(r.stats.hi) + '\n';
    return out;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
    std::string out = "scenario,method,setting,uav_count,rep,wall_s\n";
    for (const auto& r : rows)
        out += csv_field(r.scenario) + ',' + csv_field(r.method) + ',' + csv_field(r.setting) + ',' +
               std::to_string(r.uav_count) + ',' + std::to_string(r.rep) + ',' + fmt(r.wall_s) + '\n';
    return out;
}

std::string timeline_csv(const std::vector<TimelineRow>& rows) {
    std::string out =
        "method,rep,stage,kind,failed_gnbs,uav_count,coverage,sum_rate_bps,fairness_counts,objective,recovery_ratio\n";
    for (const auto& r : rows)
        out += csv_field(r.method) + ',' + std::to_string(r.rep) + ',' + std::to_string(r.stage) + ',' + r.kind + ',' +
               csv_field(r.failed_gnbs) + ',' + std::to_string(r.uav_count) + ',' + fmt(r.coverage) + ',' +
               fmt(r.sum_rate) + ',' + fmt(r.fairness_counts) + ',' + fmt(r.objective) + ',' + fmt(r.recovery_ratio) +
               '\n';
    return out;
}

namespace {

void write_file(const fs::path& path, const std::string& text, std::vector<std::string>& written) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    written.push_back(path.filename().string());
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + '\n';
    return out;
}

}  // namespace

std::vector<std::string> write_outputs(const ScenarioOutput& output, const ScenarioConfig& config, const fs::path& dir,
                                       const std::string& format) {
    fs::create_directories(dir);
    std::vector<std::string> written;
    const std::string hash = config_hash(config);
    const auto summary = summarize(output.rows);
    if (format == "json") {
        ordered_json rows = ordered_json::array();
        for (const auto& r : output.rows)
            rows.push_back({{"scenario", r.scenario}, {"method", r.method}, {"setting", r.setting},
                            {"uav_count", r.uav_count}, {"rep", r.rep}, {"seed", r.seed}, {"config_hash", hash},
                            {"metric", r.metric}, {"value", r.value}});
        write_file(dir / "results.json", rows.dump(1) + "\n", written);
        ordered_json sum = ordered_json::array();
        for (const auto& s : summary)
            sum.push_back({{"scenario", s.scenario}, {"method", s.method}, {"setting", s.setting},
                           {"uav_count", s.uav_count}, {"metric", s.metric}, {"n", s.stats.n},
                           {"mean", s.stats.mean}, {"ci95_low", s.stats.lo}, {"ci95_high", s.stats.hi}});
        write_file(dir / "summary.json", sum.dump(1) + "\n", written);
    } else if (format == "csv") {
        write_file(dir / "results.csv", results_csv(output.rows, hash), written);
        write_file(dir / "summary.csv", summary_csv(summary), written);
    } else {
        throw ConfigError("format must be csv or json");
    }
    write_file(dir / "placements.jsonl", join_lines(output.placements), written);
    write_file(dir / "timing.csv", timing_csv(output.timing), written);
    if (!output.timeline.empty()) write_file(dir / "timeline.csv", timeline_csv(output.timeline), written);
    if (!output.trials.empty()) write_file(dir / "trials.jsonl", join_lines(output.trials), written);
    return written;
}

}  // namespace titan
