#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "titan/placement.hpp"
#include "titan/satellite.hpp"
#include "titan/scheduler.hpp"

namespace titan {

struct SceneSource {
    std::string kind = "manhattan";  ///< "manhattan" or "file"
    ManhattanParams manhattan;
    std::string path;
    std::string material_map;
    bool strict = false;
};

struct DisasterEvent {
    int time = 0;
    int gnb = 0;
};

struct RobustnessConfig {
    std::vector<double> gps_sigma{0.0, 1.0, 5.0, 10.0};  ///< m
    std::vector<double> fidelity{1.0, 0.01};
};

struct SatelliteSource {
    std::string tle_path;  ///< empty: default constellation
    Observer observer{37.77, -122.42, 0.0};
    std::optional<double> jd;  ///< evaluation instant; default first TLE epoch
    double min_elevation = 60.0;
    int default_count = 6;
    double range = 600e3;  ///< m
    bool tle_range = false;  ///< use TLE slant ranges instead of `range`
};

struct CoverageMapConfig {
    double resolution = 5.0;   ///< m per cell
    double sinr_min_db = -10.0;
    double sinr_max_db = 30.0;
};

struct ScenarioConfig {
    SceneSource scene;
    int ue_count = 100;
    double ue_height = 1.5;
    std::string ue_layout = "uniform";  ///< "uniform" or "around_gnbs"
    double ue_radius = 80.0;            ///< m, for around_gnbs
    std::vector<Vec3> gnbs;
    std::vector<Method> methods{Method::Titan, Method::Random};
    std::vector<int> uav_counts{1, 2, 3};
    std::vector<DisasterEvent> events;
    int uavs_per_failure = 1;
    RobustnessConfig robustness;
    int repetitions = 20;
    std::uint64_t seed = 1;
    int threads = 1;
    bool count_gnbs_in_fairness = false;
    std::vector<std::string> scenarios{"scenario1"};
    RadioConfig radio;
    TraceConfig trace;
    PlacementConfig placement;
    SchedulerConfig scheduler;
    SatelliteSource satellites;
    CoverageMapConfig coverage_map;

    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& config);
/// Parses TOML (.toml) or JSON (anything else) into JSON.
nlohmann::json read_config_file(const std::filesystem::path& path);
ScenarioConfig load_scenario_config(const std::filesystem::path& path);
/// FNV-1a 64 of the canonical JSON of the config, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

struct MeanCi {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;
};

/// Mean with a two-sided Student-t 95% interval (NaN bounds for n < 2).
MeanCi mean_ci95(std::span<const double> values);
double median(std::vector<double> values);

struct ResultRow {
    std::string scenario;
    std::string method;
    std::string setting;  ///< e.g. "sigma=10" or "stage=2:recovered"; empty when unused
    int uav_count = 0;
    int rep = 0;
    std::uint64_t seed = 0;
    std::string metric;
    double value = 0.0;
};

struct TimingRow {
    std::string scenario;
    std::string method;
    std::string setting;
    int uav_count = 0;
    int rep = 0;
    double wall_s = 0.0;
};

struct TimelineRow {
    std::string method;
    int rep = 0;
    int stage = 0;
    std::string kind;         ///< initial | degraded | recovered
    std::string failed_gnbs;  ///< ';'-joined ids
    int uav_count = 0;
    double coverage = 0.0;
    double sum_rate = 0.0;
    double fairness_counts = 0.0;
    double objective = 0.0;
    double recovery_ratio = 0.0;  ///< sum_rate / initial sum_rate
};

struct ScenarioOutput {
    std::vector<ResultRow> rows;
    std::vector<TimingRow> timing;
    std::vector<TimelineRow> timeline;
    std::vector<std::string> placements;  ///< JSON lines
    std::vector<std::string> trials;      ///< JSON lines

    void append(ScenarioOutput other);
};

struct SummaryRow {
    std::string scenario, method, setting;
    int uav_count = 0;
    std::string metric;
    MeanCi stats;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// Scene, UE and gNB inputs shared by every run of one config.
struct Workspace {
    Scene scene;
    std::vector<Vec3> gnbs;
};

Workspace build_workspace(const ScenarioConfig& config);
/// UE drop of one repetition (uniform outdoor or around the gNB sites).
std::vector<Vec3> sample_ues(const Workspace& ws, const ScenarioConfig& config, std::uint64_t rep_seed);
/// Gaussian horizontal noise (same unit draws for every sigma), clamped to outdoor points.
std::vector<Vec3> perturb_ues(const Scene& scene, const std::vector<Vec3>& ues, double sigma, std::uint64_t seed);
std::vector<SatelliteLink> resolve_satellites(const SatelliteSource& source);

/// Raytraced KPIs plus PF scheduling of a topology (covered UEs only).
struct FinalEvaluation {
    Kpis kpis;
    SinrReport report;
    ScheduleResult schedule;
};
FinalEvaluation evaluate_final(const Workspace& ws, const std::vector<Vec3>& ues, const Topology& topology,
                               const ScenarioConfig& config, double fidelity = 1.0);

ScenarioOutput run_scenario1(const ScenarioConfig& config);
ScenarioOutput run_scenario2(const ScenarioConfig& config);
ScenarioOutput run_scenario3_gps(const ScenarioConfig& config);
ScenarioOutput run_scenario3_fidelity(const ScenarioConfig& config);
/// Runs every scenario named in config.scenarios.
ScenarioOutput run_scenarios(const ScenarioConfig& config);

/// Single optimization with the first configured method (Algorithm 1 unless
/// placement.fixed_count is set).
struct OptimizeOutput {
    PlacementResult placement;
    FinalEvaluation final;
    ScenarioOutput output;
};
OptimizeOutput run_optimize(const ScenarioConfig& config);

/// ASCII PGM (P2) of the best-server wideband SINR over a ground raster at UE
/// height; building interiors are 0, SINR maps linearly onto 1..255.
std::string coverage_map_pgm(const Workspace& ws, const Topology& topology, const ScenarioConfig& config);

std::string results_csv(const std::vector<ResultRow>& rows, const std::string& config_hash);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string timing_csv(const std::vector<TimingRow>& rows);
std::string timeline_csv(const std::vector<TimelineRow>& rows);

/// Writes results.csv, summary.csv, placements.jsonl, timing.csv and, when
/// present, timeline.csv and trials.jsonl. `format` "json" writes
/// results.json/summary.json instead of the CSV tables. Returns written files.
std::vector<std::string> write_outputs(const ScenarioOutput& output, const ScenarioConfig& config,
                                       const std::filesystem::path& dir, const std::string& format = "csv");

}  // namespace titan
