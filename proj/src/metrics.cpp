#include "titan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace titan {

void ObjectiveWeights::validate() const {
    if (capacity < 0 || coverage < 0 || fairness < 0) throw std::invalid_argument("ObjectiveWeights must be >= 0");
}

std::vector<int> coverage_set(const SinrReport& report, double threshold_linear) {
    std::vector<int> covered;
    for (std::size_t u = 0; u < report.size(); ++u)
        if (report[u].serving && report[u].wideband >= threshold_linear) covered.push_back(static_cast<int>(u));
    return covered;
}

double shannon_capacity(double sinr, double subcarrier_bandwidth) {
    if (sinr < 0.0) throw std::invalid_argument("shannon_capacity: sinr must be >= 0");
    return subcarrier_bandwidth * std::log2(1.0 + sinr);
}

double sum_rate(const SinrReport& report, std::span<const int> covered, const RadioConfig& config) {
    double total = 0.0;
    for (int u : covered)
        for (double g : report.at(u).per_subcarrier) total += shannon_capacity(g, config.subcarrier_spacing);
    return total;
}

double jain_counts(std::span<const int> loads) {
    double sum = 0.0, sq = 0.0;
    for (int n : loads) {
        sum += n;
        sq += static_cast<double>(n) * n;
    }
    if (loads.empty() || sq == 0.0) return 0.0;
    return sum * sum / (static_cast<double>(loads.size()) * sq);
}

double jain_rates(std::span<const double> rates) {
    double sum = 0.0, sq = 0.0;
    for (double r : rates) {
        if (r < 0.0) throw std::invalid_argument("jain_rates: rates must be >= 0");
        sum += r;
        sq += r * r;
    }
    if (rates.empty() || sq == 0.0) return 0.0;
    return sum * sum / (static_cast<double>(rates.size()) * sq);
}

double objective(const Kpis& kpis, const ObjectiveWeights& weights) {
    const double capacity_mbps = kpis.sum_rate / 1e6;
    return std::pow(capacity_mbps, weights.capacity) * std::pow(kpis.coverage, weights.coverage) *
           std::pow(kpis.fairness_counts, weights.fairness);
}

Kpis compute_kpis(const SinrReport& report, int n_uavs, const RadioConfig& config, const ObjectiveWeights& weights,
                  std::span<const int> fairness_servers) {
    Kpis k;
    const std::size_t n_ue = report.size();
    k.covered_set = coverage_set(report, from_db(config.sinr_threshold_db));
    k.per_ue_rate.assign(n_ue, 0.0);
    k.serving.resize(n_ue);
    k.wideband_sinr.resize(n_ue);
    for (std::size_t u = 0; u < n_ue; ++u) {
        k.serving[u] = report[u].serving;
        k.wideband_sinr[u] = report[u].wideband;
    }
    std::vector<double> covered_rates;
    covered_rates.reserve(k.covered_set.size());
    for (int u : k.covered_set) {
        double rate = 0.0;
        for (double g : report[u].per_subcarrier) rate += shannon_capacity(g, config.subcarrier_spacing);
        k.per_ue_rate[u] = rate;
        k.sum_rate += rate;
        covered_rates.push_back(rate);
    }
    k.coverage = n_ue > 0 ? static_cast<double>(k.covered_set.size()) / static_cast<double>(n_ue) : 0.0;
    k.per_uav_load.assign(n_uavs, 0);
    std::vector<int> servers(fairness_servers.begin(), fairness_servers.end());
    if (servers.empty())
        for (int b = 0; b < n_uavs; ++b) servers.push_back(b);
    std::vector<int> loads(servers.size(), 0);
    for (int u : k.covered_set) {
        const int s = *report[u].serving;
        if (s < n_uavs) ++k.per_uav_load[s];
        for (std::size_t i = 0; i < servers.size(); ++i)
            if (servers[i] == s) ++loads[i];
    }
    k.fairness_counts = jain_counts(loads);
    k.fairness_rates = jain_rates(covered_rates);
    k.objective = objective(k, weights);
    return k;
}

// ---------------------------------------------------------------------------

NetworkEvaluator::NetworkEvaluator(const Scene& scene, std::vector<Vec3> ues, std::vector<Vec3> gnb_sites,
                                   EvaluationSetup setup)
    : scene_(&scene), ues_(std::move(ues)), gnb_sites_(std::move(gnb_sites)), setup_(std::move(setup)) {
    setup_.radio.validate();
    setup_.weights.validate();
    if (setup_.backend == ChannelBackend::Raytraced) setup_.trace.validate();
    setup_.trace.carrier_freq = setup_.radio.carrier_freq;
    offsets_ = setup_.radio.subcarrier_offsets();
    gnb_powers_ = PowerTable(static_cast<int>(gnb_sites_.size()), static_cast<int>(ues_.size()),
                             setup_.radio.num_subcarriers);
    for (std::size_t g = 0; g < gnb_sites_.size(); ++g) fill_tx(gnb_powers_, static_cast<int>(g), gnb_sites_[g]);
}

void NetworkEvaluator::fill_tx(PowerTable& table, int tx, const Vec3& position) const {
    const int n_ue = static_cast<int>(ues_.size());
    const RadioConfig& radio = setup_.radio;
    if (setup_.backend == ChannelBackend::Uma) {
        for (int u = 0; u < n_ue; ++u) {
            const double p = uma_expected_power(position, ues_[u], radio.tx_power_dbm, radio, setup_.uma);
            table.at(tx, u) = p;
            double* sc = table.subcarriers(tx, u);
            std::fill(sc, sc + radio.num_subcarriers, p / radio.num_subcarriers);
        }
        return;
    }
    const auto taps = trace_sbr(*scene_, position, ues_, setup_.trace);
    for (int u = 0; u < n_ue; ++u) {
        LinkState link{taps[u], tx, u, radio.tx_power_dbm};
        fill_link_power(table, tx, u, link, radio, offsets_);
    }
}

std::pair<Kpis, SinrReport> NetworkEvaluator::evaluate_full(const Topology& topology) const {
    const int n_uav = static_cast<int>(topology.uav_positions.size());
    const int n_gnb = static_cast<int>(gnb_sites_.size());
    const int n_ue = static_cast<int>(ues_.size());
    const int K = setup_.radio.num_subcarriers;
    PowerTable table(n_uav + n_gnb, n_ue, K);
    for (int b = 0; b < n_uav; ++b) fill_tx(table, b, topology.uav_positions[b]);
    std::vector<bool> active(n_uav + n_gnb, false);
    std::fill(active.begin(), active.begin() + n_uav, true);
    for (int g : topology.active_gnbs) {
        if (g < 0 || g >= n_gnb) throw std::out_of_range("topology references unknown gNB " + std::to_string(g));
        active[n_uav + g] = true;
    }
    for (int g = 0; g < n_gnb; ++g) {
        for (int u = 0; u < n_ue; ++u) {
            table.at(n_uav + g, u) = gnb_powers_.at(g, u);
            std::copy_n(gnb_powers_.subcarriers(g, u), K, table.subcarriers(n_uav + g, u));
        }
    }
    std::vector<int> groups;
    if (!setup_.radio.cross_tier_interference) {
        groups.assign(n_uav + n_gnb, 1);
        std::fill(groups.begin(), groups.begin() + n_uav, 0);
    }
    SinrReport report = compute_sinr(table, active, setup_.radio, groups);
    std::vector<int> servers;
    for (int b = 0; b < n_uav; ++b) servers.push_back(b);
    if (setup_.count_gnbs_in_fairness)
        for (int g : topology.active_gnbs) servers.push_back(n_uav + g);
    Kpis k = compute_kpis(report, n_uav, setup_.radio, setup_.weights, servers);
    return {std::move(k), std::move(report)};
}

Kpis NetworkEvaluator::evaluate(const Topology& topology) const { return evaluate_full(topology).first; }

Kpis evaluate_topology(const Scene& scene, const Topology& topology, std::span<const Vec3> ues,
                       std::span<const Vec3> gnb_sites, const EvaluationSetup& setup) {
    NetworkEvaluator ev(scene, {ues.begin(), ues.end()}, {gnb_sites.begin(), gnb_sites.end()}, setup);
    return ev.evaluate(topology);
}

}  // namespace titan
