#include "titan/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "titan/metrics.hpp"

namespace titan {

void SchedulerConfig::validate() const {
    if (n_slots < 1) throw std::invalid_argument("SchedulerConfig: n_slots must be >= 1");
    if (rb_subcarriers < 1) throw std::invalid_argument("SchedulerConfig: rb_subcarriers must be >= 1");
    if (!(pf_time_constant >= 1.0)) throw std::invalid_argument("SchedulerConfig: pf_time_constant must be >= 1");
    if (max_ues_per_tx_per_slot < 1) throw std::invalid_argument("SchedulerConfig: max_ues_per_tx_per_slot must be >= 1");
    if (!(slot_duration > 0.0) || !(epsilon > 0.0))
        throw std::invalid_argument("SchedulerConfig: slot_duration and epsilon must be > 0");
}

ScheduleResult run_pf(const std::vector<std::vector<double>>& sinr, std::span<const std::optional<int>> associations,
                      int n_tx, const SchedulerConfig& config, const RadioConfig& radio) {
    config.validate();
    const int n_ue = static_cast<int>(sinr.size());
    if (static_cast<int>(associations.size()) != n_ue)
        throw std::invalid_argument("run_pf: associations size must equal UE count");
    const int K = radio.num_subcarriers;
    const int n_rb = (K + config.rb_subcarriers - 1) / config.rb_subcarriers;

    // RB rates (bit/s) per UE; only associated UEs matter.
    std::vector<std::vector<double>> rb_rate(n_ue);
    std::vector<std::vector<int>> members(n_tx);
    for (int u = 0; u < n_ue; ++u) {
        const auto& a = associations[u];
        if (!a) continue;
        if (*a < 0 || *a >= n_tx) throw std::out_of_range("run_pf: association out of range");
        if (static_cast<int>(sinr[u].size()) != K) throw std::invalid_argument("run_pf: SINR vector size != K");
        members[*a].push_back(u);
        rb_rate[u].assign(n_rb, 0.0);
        for (int k = 0; k < K; ++k) rb_rate[u][k / config.rb_subcarriers] += shannon_capacity(sinr[u][k], radio.subcarrier_spacing);
    }

    ScheduleResult res;
    res.n_rb = n_rb;
    res.n_tx = n_tx;
    res.slot_duration = config.slot_duration;
    res.delivered_bits.assign(n_ue, 0.0);
    res.grid.assign(config.n_slots, std::vector<int>(static_cast<std::size_t>(n_tx) * n_rb, -1));
    const bool averaging = std::isfinite(config.pf_time_constant);
    const double alpha = averaging ? 1.0 / config.pf_time_constant : 0.0;
    std::vector<double> t_avg(n_ue, 0.0);
    std::vector<double> granted(n_ue, 0.0);

    for (int s = 0; s < config.n_slots; ++s) {
        std::fill(granted.begin(), granted.end(), 0.0);
        for (int b = 0; b < n_tx; ++b) {
            const auto& ues = members[b];
            if (ues.empty()) continue;
            std::vector<int> served;
            for (int r = 0; r < n_rb; ++r) {
                const bool capped = static_cast<int>(served.size()) >= config.max_ues_per_tx_per_slot;
                int best = -1;
                double best_metric = -1.0;
                for (int u : ues) {
                    if (capped && std::find(served.begin(), served.end(), u) == served.end()) continue;
                    const double m = rb_rate[u][r] / (t_avg[u] + config.epsilon);
                    if (m > best_metric) {
                        best_metric = m;
                        best = u;
                    }
                }
                if (best < 0 || rb_rate[best][r] <= 0.0) continue;
                res.grid[s][static_cast<std::size_t>(b) * n_rb + r] = best;
                if (std::find(served.begin(), served.end(), best) == served.end()) served.push_back(best);
                granted[best] += rb_rate[best][r];
            }
        }
        for (int u = 0; u < n_ue; ++u) {
            res.delivered_bits[u] += granted[u] * config.slot_duration;
            t_avg[u] = (1.0 - alpha) * t_avg[u] + alpha * granted[u];
        }
    }

    const double horizon = config.n_slots * config.slot_duration;
    res.avg_throughput.resize(n_ue);
    std::vector<double> associated_rates;
    for (int u = 0; u < n_ue; ++u) {
        res.avg_throughput[u] = res.delivered_bits[u] / horizon;
        res.sum_throughput += res.avg_throughput[u];
        if (associations[u]) associated_rates.push_back(res.avg_throughput[u]);
    }
    res.jain_rates = jain_rates(associated_rates);
    return res;
}

ScheduleResult run_pf(const SinrReport& report, std::span<const std::optional<int>> associations, int n_tx,
                      const SchedulerConfig& config, const RadioConfig& radio) {
    std::vector<std::vector<double>> sinr(report.size());
    for (std::size_t u = 0; u < report.size(); ++u) {
        sinr[u] = report[u].per_subcarrier;
        if (sinr[u].empty()) sinr[u].assign(radio.num_subcarriers, 0.0);
    }
    return run_pf(sinr, associations, n_tx, config, radio);
}

std::string ScheduleResult::to_csv() const {
    std::ostringstream out;
    out << "ue,delivered_bits,avg_throughput_bps\n";
    char buf[128];
    for (std::size_t u = 0; u < delivered_bits.size(); ++u) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", u, delivered_bits[u], avg_throughput[u]);
        out << buf;
    }
    return out.str();
}

std::string ScheduleResult::to_json() const {
    nlohmann::ordered_json j;
    j["n_rb"] = n_rb;
    j["n_tx"] = n_tx;
    j["n_slots"] = grid.size();
    j["slot_duration_s"] = slot_duration;
    j["sum_throughput_bps"] = sum_throughput;
    j["jain_rates"] = jain_rates;
    j["delivered_bits"] = delivered_bits;
    return j.dump(2);
}

}  // namespace titan
