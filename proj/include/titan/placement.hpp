#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "titan/metrics.hpp"
#include "titan/satellite.hpp"
#include "titan/tpe.hpp"

namespace titan {

enum class Method { Titan, Random, UmaBo, SumcapBo, D2c };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct PlacementConfig {
    double rho_target = 0.8;
    int n_iter = 150;      ///< trials per UAV count
    int max_uavs = 5;
    /// When set, only this UAV count is searched (no escalation).
    std::optional<int> fixed_count;
    ObjectiveWeights weights;
    Method method = Method::Titan;
    std::uint64_t seed = 1;
    double z_min = 50.0;   ///< m
    double z_max = 1000.0; ///< m
    TpeConfig tpe;         ///< seed field is overridden per UAV count

    void validate() const;
};

struct TrialLogEntry {
    int trial = 0;
    int uav_count = 0;
    std::vector<double> params;
    double objective = 0.0;
    bool failed = false;
    Kpis kpis;
};

struct PlacementResult {
    Method method = Method::Titan;
    Topology topology;
    Kpis kpis;                 ///< under the method's own channel backend
    bool target_unmet = false;
    ObjectiveWeights weights;  ///< weights the search optimized
    std::vector<TrialLogEntry> trials;
};

/// One JSON object per trial: {trial, uav_count, params, objective, kpis}.
std::string trial_log_jsonl(const PlacementResult& result);

/// Decision-vector box: scene horizontal bounds x altitude limits, per UAV.
SearchSpace placement_space(const Scene& scene, int n_uavs, double z_min, double z_max);
std::vector<Vec3> decode_positions(const std::vector<double>& params);

/// Algorithm 1 over an evaluator (whose setup fixes backend and weights).
/// Escalates the UAV count while the incumbent's coverage is below
/// rho_target; the optimizer restarts at every count, the incumbent does not.
PlacementResult titan_optimize(const NetworkEvaluator& evaluator, const std::vector<int>& active_gnbs,
                               const PlacementConfig& config);

/// Uniform over horizontal bounds x [z_min, z_max].
Topology random_placement(const Scene& scene, int n_uavs, double z_min, double z_max, std::uint64_t seed);

/// Runs config.method. `base` supplies radio/trace settings; backend and
/// weights are set per method (Titan: raytraced; UmaBo: UMa expectation;
/// SumcapBo: raytraced with weights (1, 0, 0); Random: raytraced KPIs of a
/// random topology with fixed_count (or max_uavs) UAVs).
PlacementResult run_placement(const Scene& scene, const std::vector<Vec3>& ues, const std::vector<Vec3>& gnb_sites,
                              const std::vector<int>& active_gnbs, const EvaluationSetup& base,
                              const PlacementConfig& config);

/// Traditional D2C: a UE is covered when the segment toward some satellite
/// is unobstructed and its SNR reaches the threshold. Each satellite splits
/// the D2C bandwidth evenly among its covered UEs; the UE picks the visible
/// satellite with the highest SNR (ties: lowest index).
Kpis d2c_baseline(const Scene& scene, const std::vector<Vec3>& ues, const std::vector<SatelliteLink>& satellites,
                  const RadioConfig& radio, const ObjectiveWeights& weights = {});

/// Free-space D2C SNR (linear) over the full D2C bandwidth at slant range `range` (m).
double d2c_snr(const RadioConfig& radio, double range);

}  // namespace titan
