#pragma once

#include <optional>
#include <span>
#include <vector>

#include "titan/channel.hpp"
#include "titan/raytrace.hpp"
#include "titan/scene.hpp"

namespace titan {

/// Exponents of the composite utility C_sum^w1 * Cov^w2 * J^w3.
struct ObjectiveWeights {
    double capacity = 1.0;
    double coverage = 1.0;
    double fairness = 1.0;

    void validate() const;
    bool operator==(const ObjectiveWeights&) const = default;
};

struct Kpis {
    double sum_rate = 0.0;         ///< bit/s over covered UEs and subcarriers
    double coverage = 0.0;         ///< fraction of UEs covered
    double fairness_counts = 0.0;  ///< Jain over per-server UE counts
    double fairness_rates = 0.0;   ///< Jain over covered UEs' rates
    double objective = 0.0;
    std::vector<int> covered_set;
    std::vector<int> per_uav_load;         ///< covered UEs per UAV
    std::vector<double> per_ue_rate;       ///< bit/s, 0 for uncovered
    std::vector<std::optional<int>> serving;
    std::vector<double> wideband_sinr;     ///< linear
};

/// UEs whose wideband SINR reaches the threshold (inclusive).
std::vector<int> coverage_set(const SinrReport& report, double threshold_linear);

/// B_sc * log2(1 + sinr).
double shannon_capacity(double sinr, double subcarrier_bandwidth);

/// Sum over covered UEs and all subcarriers of the Shannon rate.
double sum_rate(const SinrReport& report, std::span<const int> covered, const RadioConfig& config);

/// Jain's index over per-server loads; all-zero loads give 0.
double jain_counts(std::span<const int> loads);

/// Jain's index over rates; empty or all-zero gives 0.
double jain_rates(std::span<const double> rates);

/// Composite utility with C_sum in Mbit/s. 0^0 is taken as 1.
double objective(const Kpis& kpis, const ObjectiveWeights& weights);

/// KPI stack from a SINR report. Transmitters [0, n_uavs) are UAVs. Load
/// fairness runs over `fairness_servers` (default: the UAVs only).
Kpis compute_kpis(const SinrReport& report, int n_uavs, const RadioConfig& config, const ObjectiveWeights& weights,
                  std::span<const int> fairness_servers = {});

enum class ChannelBackend { Raytraced, Uma };

struct Topology {
    std::vector<Vec3> uav_positions;
    std::vector<int> active_gnbs;  ///< indices into the gNB site list
};

struct EvaluationSetup {
    RadioConfig radio;
    TraceConfig trace;
    ObjectiveWeights weights;
    ChannelBackend backend = ChannelBackend::Raytraced;
    UmaOptions uma;
    bool count_gnbs_in_fairness = false;
};

/// Evaluates topologies against a fixed scene, UE set and gNB site list.
/// gNB links are traced once and reused. Thread-safe for concurrent evaluate().
class NetworkEvaluator {
public:
    NetworkEvaluator(const Scene& scene, std::vector<Vec3> ues, std::vector<Vec3> gnb_sites, EvaluationSetup setup);

    Kpis evaluate(const Topology& topology) const;
    /// Same as evaluate() but also returns the SINR report.
    std::pair<Kpis, SinrReport> evaluate_full(const Topology& topology) const;

    const Scene& scene() const { return *scene_; }
    const std::vector<Vec3>& ues() const { return ues_; }
    const std::vector<Vec3>& gnb_sites() const { return gnb_sites_; }
    const EvaluationSetup& setup() const { return setup_; }

private:
    void fill_tx(PowerTable& table, int tx, const Vec3& position) const;

    const Scene* scene_;
    std::vector<Vec3> ues_;
    std::vector<Vec3> gnb_sites_;
    EvaluationSetup setup_;
    std::vector<double> offsets_;
    PowerTable gnb_powers_;  ///< rows per gNB site
};

/// One-shot helper wrapping NetworkEvaluator.
Kpis evaluate_topology(const Scene& scene, const Topology& topology, std::span<const Vec3> ues,
                       std::span<const Vec3> gnb_sites, const EvaluationSetup& setup);

}  // namespace titan
