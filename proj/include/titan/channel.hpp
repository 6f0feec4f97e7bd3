#pragma once

#include <optional>
#include <span>
#include <vector>

#include "titan/geometry.hpp"
#include "titan/raytrace.hpp"
#include "titan/rng.hpp"

namespace titan {

/// Link-level radio parameters. Defaults follow the evaluated 5G NR setup:
/// 2 GHz carrier, 30 kHz spacing, 660 subcarriers in 20 MHz, 23 dBm TX, 290 K.
struct RadioConfig {
    double carrier_freq = 2e9;          ///< Hz
    double subcarrier_spacing = 30e3;   ///< Hz
    int num_subcarriers = 660;
    double bandwidth = 20e6;            ///< Hz
    double tx_power_dbm = 23.0;         ///< UAVs and gNBs
    double eirp_d2c_dbm = 85.0;
    double d2c_bandwidth = 5e6;         ///< Hz
    double noise_temperature = 290.0;   ///< K
    double sinr_threshold_db = 5.0;     ///< coverage threshold gamma_th
    /// When false, UAVs and gNBs use orthogonal resources and do not interfere.
    bool cross_tier_interference = true;

    void validate() const;
    /// Baseband subcarrier offsets, centred on the carrier (0 Hz at the centre).
    std::vector<double> subcarrier_offsets() const;
};

/// Channel impulse response of one transmitter-receiver pair.
struct LinkState {
    std::vector<PathTap> taps;  ///< sorted by delay
    int tx_id = 0;
    int rx_id = 0;
    double tx_power_dbm = 23.0;
};

/// Received power in watts: P_tx * |sum(alpha)|^2.
double coherent_power(const LinkState& link, double tx_power_dbm);

/// H(f_k) = sum_l alpha_l * exp(-j 2 pi f_k tau_l).
std::vector<Complex> frequency_response(const LinkState& link, std::span<const double> subcarrier_freqs);

/// Thermal noise k_B * T * B in watts.
double noise_power(const RadioConfig& config, double bandwidth);

struct UeSinr {
    std::optional<int> serving;              ///< tx index, none when no power is received
    double wideband = 0.0;                   ///< linear
    std::vector<double> per_subcarrier;      ///< linear, one per subcarrier
    double noise_watts = 0.0;                ///< wideband N0
};

using SinrReport = std::vector<UeSinr>;

/// Received powers of every (tx, ue) pair, wideband and per subcarrier, in W.
/// Per-subcarrier power is P_tx/K * |H(f_k)|^2 (TX power split over K subcarriers).
struct PowerTable {
    int num_tx = 0;
    int num_ue = 0;
    int num_subcarriers = 0;
    std::vector<double> wideband;       ///< [tx * num_ue + ue]
    std::vector<double> per_subcarrier; ///< [(tx * num_ue + ue) * K + k]

    PowerTable() = default;
    PowerTable(int tx, int ue, int k);
    double& at(int tx, int ue) { return wideband[static_cast<std::size_t>(tx) * num_ue + ue]; }
    double at(int tx, int ue) const { return wideband[static_cast<std::size_t>(tx) * num_ue + ue]; }
    double* subcarriers(int tx, int ue) {
        return per_subcarrier.data() + (static_cast<std::size_t>(tx) * num_ue + ue) * num_subcarriers;
    }
    const double* subcarriers(int tx, int ue) const {
        return per_subcarrier.data() + (static_cast<std::size_t>(tx) * num_ue + ue) * num_subcarriers;
    }
};

/// Fills the (tx, ue) entries of `table` from a traced link.
void fill_link_power(PowerTable& table, int tx, int ue, const LinkState& link, const RadioConfig& config,
                     std::span<const double> offsets);

/// SINR per UE. The serving transmitter is the active one with maximal
/// wideband power (ties: lowest index); all other active transmitters in the
/// same interference group interfere. `groups` may be empty (single group).
SinrReport compute_sinr(const PowerTable& powers, const std::vector<bool>& active, const RadioConfig& config,
                        std::span<const int> groups = {});

/// Convenience wrapper over traced links laid out as links[tx][ue].
SinrReport compute_sinr(const std::vector<std::vector<LinkState>>& links, const std::vector<bool>& active,
                        const RadioConfig& config, std::span<const int> groups = {});

struct UmaLink {
    double p_los = 1.0;
    double pathloss_los_db = 0.0;
    double pathloss_nlos_db = 0.0;
    double pathloss_db = 0.0;  ///< of the sampled state
    bool is_los = true;
};

/// TR 38.901 UMa LoS probability.
double uma_los_probability(double d2d);

/// TR 38.901 UMa pathloss (no shadow fading). Throws on d3D = 0.
UmaLink uma_stochastic_link(const Vec3& tx, const Vec3& ue, const RadioConfig& config, Rng& rng);
/// Deterministic part of the above (no LoS draw; is_los reports P_LoS >= 0.5).
UmaLink uma_link_expectation(const Vec3& tx, const Vec3& ue, const RadioConfig& config);

struct UmaOptions {
    bool force_los = false;  ///< P_LoS := 1 (test control)
};

/// Expected received power P_LoS*P_rx,LoS + (1-P_LoS)*P_rx,NLoS in watts.
double uma_expected_power(const Vec3& tx, const Vec3& ue, double tx_power_dbm, const RadioConfig& config,
                          const UmaOptions& options = {});

/// Flat (frequency-nonselective) power table from UMa expected powers.
PowerTable uma_power_table(std::span<const Vec3> transmitters, std::span<const Vec3> ues, const RadioConfig& config,
                           const UmaOptions& options = {});

/// Expected SINR per UE with all transmitters active.
std::vector<double> expected_sinr_uma(std::span<const Vec3> transmitters, std::span<const Vec3> ues,
                                      const RadioConfig& config, const UmaOptions& options = {});

}  // namespace titan
