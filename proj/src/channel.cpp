#include "titan/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace titan {

void RadioConfig::validate() const {
    if (!(carrier_freq > 0 && subcarrier_spacing > 0 && bandwidth > 0 && d2c_bandwidth > 0 && noise_temperature > 0))
        throw std::invalid_argument("RadioConfig: frequencies, bandwidths and temperature must be positive");
    if (num_subcarriers < 1) throw std::invalid_argument("RadioConfig: num_subcarriers must be >= 1");
    // Bandwidth must match K * spacing to within one resource block (12 subcarriers).
    if (std::abs(bandwidth - subcarrier_spacing * num_subcarriers) > 12.0 * subcarrier_spacing)
        throw std::invalid_argument("RadioConfig: bandwidth inconsistent with subcarrier grid");
    if (!std::isfinite(tx_power_dbm) || !std::isfinite(eirp_d2c_dbm) || !std::isfinite(sinr_threshold_db))
        throw std::invalid_argument("RadioConfig: powers must be finite");
}

std::vector<double> RadioConfig::subcarrier_offsets() const {
    std::vector<double> f(num_subcarriers);
    const double centre = 0.5 * (num_subcarriers - 1);
    for (int k = 0; k < num_subcarriers; ++k) f[k] = (k - centre) * subcarrier_spacing;
    return f;
}

double coherent_power(const LinkState& link, double tx_power_dbm) {
    if (link.taps.empty()) return 0.0;
    Complex sum{};
    for (const auto& tap : link.taps) sum += tap.amplitude;
    return dbm_to_watts(tx_power_dbm) * std::norm(sum);
}

std::vector<Complex> frequency_response(const LinkState& link, std::span<const double> freqs) {
    std::vector<Complex> h(freqs.size());
    for (const auto& tap : link.taps) {
        for (std::size_t k = 0; k < freqs.size(); ++k) {
            const double phase = -2.0 * kPi * std::fmod(freqs[k] * tap.delay, 1.0);
            h[k] += tap.amplitude * Complex(std::cos(phase), std::sin(phase));
        }
    }
    return h;
}

double noise_power(const RadioConfig& config, double bandwidth) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("noise_power: bandwidth must be > 0");
    return kBoltzmann * config.noise_temperature * bandwidth;
}

PowerTable::PowerTable(int tx, int ue, int k)
    : num_tx(tx),
      num_ue(ue),
      num_subcarriers(k),
      wideband(static_cast<std::size_t>(tx) * ue, 0.0),
      per_subcarrier(static_cast<std::size_t>(tx) * ue * k, 0.0) {}

void fill_link_power(PowerTable& table, int tx, int ue, const LinkState& link, const RadioConfig& config,
                     std::span<const double> offsets) {
    table.at(tx, ue) = coherent_power(link, link.tx_power_dbm);
    double* sc = table.subcarriers(tx, ue);
    if (link.taps.empty()) {
        std::fill(sc, sc + table.num_subcarriers, 0.0);
        return;
    }
    const double p_sc = dbm_to_watts(link.tx_power_dbm) / config.num_subcarriers;
    const auto h = frequency_response(link, offsets);
    for (int k = 0; k < table.num_subcarriers; ++k) sc[k] = p_sc * std::norm(h[k]);
}

SinrReport compute_sinr(const PowerTable& powers, const std::vector<bool>& active, const RadioConfig& config,
                        std::span<const int> groups) {
    if (static_cast<int>(active.size()) != powers.num_tx)
        throw std::invalid_argument("compute_sinr: active mask size must equal transmitter count");
    const int K = powers.num_subcarriers;
    const double n0 = noise_power(config, config.bandwidth);
    const double n0_sc = noise_power(config, config.subcarrier_spacing);
    auto same_group = [&](int a, int b) { return groups.empty() || groups[a] == groups[b]; };
    SinrReport report(powers.num_ue);
    for (int u = 0; u < powers.num_ue; ++u) {
        UeSinr& r = report[u];
        r.noise_watts = n0;
        r.per_subcarrier.assign(K, 0.0);
        int best = -1;
        double best_p = 0.0;
        for (int t = 0; t < powers.num_tx; ++t) {
            if (!active[t]) continue;
            if (powers.at(t, u) > best_p) {
                best_p = powers.at(t, u);
                best = t;
            }
        }
        if (best < 0) continue;
        r.serving = best;
        double interference = 0.0;
        for (int t = 0; t < powers.num_tx; ++t)
            if (active[t] && t != best && same_group(t, best)) interference += powers.at(t, u);
        r.wideband = best_p / (interference + n0);
        const double* s = powers.subcarriers(best, u);
        for (int k = 0; k < K; ++k) {
            double i_k = 0.0;
            for (int t = 0; t < powers.num_tx; ++t)
                if (active[t] && t != best && same_group(t, best)) i_k += powers.subcarriers(t, u)[k];
            r.per_subcarrier[k] = s[k] / (i_k + n0_sc);
        }
    }
    return report;
}

SinrReport compute_sinr(const std::vector<std::vector<LinkState>>& links, const std::vector<bool>& active,
                        const RadioConfig& config, std::span<const int> groups) {
    const int n_tx = static_cast<int>(links.size());
    const int n_ue = n_tx > 0 ? static_cast<int>(links[0].size()) : 0;
    PowerTable table(n_tx, n_ue, config.num_subcarriers);
    const auto offsets = config.subcarrier_offsets();
    for (int t = 0; t < n_tx; ++t) {
        if (static_cast<int>(links[t].size()) != n_ue) throw std::invalid_argument("compute_sinr: ragged link table");
        for (int u = 0; u < n_ue; ++u) fill_link_power(table, t, u, links[t][u], config, offsets);
    }
    return compute_sinr(table, active, config, groups);
}

double uma_los_probability(double d2d) {
    if (d2d <= 18.0) return 1.0;
    return 18.0 / d2d + std::exp(-d2d / 63.0) * (1.0 - 18.0 / d2d);
}

UmaLink uma_link_expectation(const Vec3& tx, const Vec3& ue, const RadioConfig& config) {
    const double d2d = std::hypot(tx.x - ue.x, tx.y - ue.y);
    const double d3d = distance(tx, ue);
    if (d3d <= 0.0) throw std::invalid_argument("uma_stochastic_link: d3D must be > 0");
    const double f_ghz = config.carrier_freq / 1e9;
    const double h_ut = ue.z;
    UmaLink link;
    link.p_los = uma_los_probability(d2d);
    link.pathloss_los_db = 28.0 + 22.0 * std::log10(d3d) + 20.0 * std::log10(f_ghz);
    const double nlos = 13.54 + 39.08 * std::log10(d3d) + 20.0 * std::log10(f_ghz) - 0.6 * (h_ut - 1.5);
    link.pathloss_nlos_db = std::max(link.pathloss_los_db, nlos);
    link.is_los = link.p_los >= 0.5;
    link.pathloss_db = link.is_los ? link.pathloss_los_db : link.pathloss_nlos_db;
    return link;
}

UmaLink uma_stochastic_link(const Vec3& tx, const Vec3& ue, const RadioConfig& config, Rng& rng) {
    UmaLink link = uma_link_expectation(tx, ue, config);
    link.is_los = rng.bernoulli(link.p_los);
    link.pathloss_db = link.is_los ? link.pathloss_los_db : link.pathloss_nlos_db;
    return link;
}

double uma_expected_power(const Vec3& tx, const Vec3& ue, double tx_power_dbm, const RadioConfig& config,
                          const UmaOptions& options) {
    const UmaLink link = uma_link_expectation(tx, ue, config);
    const double p_los = options.force_los ? 1.0 : link.p_los;
    const double p_tx = dbm_to_watts(tx_power_dbm);
    return p_los * p_tx * from_db(-link.pathloss_los_db) + (1.0 - p_los) * p_tx * from_db(-link.pathloss_nlos_db);
}

PowerTable uma_power_table(std::span<const Vec3> transmitters, std::span<const Vec3> ues, const RadioConfig& config,
                           const UmaOptions& options) {
    const int n_tx = static_cast<int>(transmitters.size());
    const int n_ue = static_cast<int>(ues.size());
    PowerTable table(n_tx, n_ue, config.num_subcarriers);
    for (int t = 0; t < n_tx; ++t) {
        for (int u = 0; u < n_ue; ++u) {
            const double p = uma_expected_power(transmitters[t], ues[u], config.tx_power_dbm, config, options);
            table.at(t, u) = p;
            double* sc = table.subcarriers(t, u);
            std::fill(sc, sc + config.num_subcarriers, p / config.num_subcarriers);
        }
    }
    return table;
}

std::vector<double> expected_sinr_uma(std::span<const Vec3> transmitters, std::span<const Vec3> ues,
                                      const RadioConfig& config, const UmaOptions& options) {
    if (transmitters.empty()) throw std::invalid_argument("expected_sinr_uma: topology must be nonempty");
    const auto table = uma_power_table(transmitters, ues, config, options);
    const auto report = compute_sinr(table, std::vector<bool>(transmitters.size(), true), config);
    std::vector<double> out;
    out.reserve(report.size());
    for (const auto& r : report) out.push_back(r.wideband);
    return out;
}

}  // namespace titan
