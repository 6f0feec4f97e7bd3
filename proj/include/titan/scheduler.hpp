#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "titan/channel.hpp"

namespace titan {

struct SchedulerConfig {
    int n_slots = 100;
    int rb_subcarriers = 12;
    /// EWMA time constant in slots; infinity disables averaging (max-rate).
    double pf_time_constant = 100.0;
    int max_ues_per_tx_per_slot = 16;
    double slot_duration = 0.5e-3;  ///< s, 30 kHz numerology
    double epsilon = 1.0;           ///< bit/s added to the PF denominator

    void validate() const;
};

struct ScheduleResult {
    int n_rb = 0;
    int n_tx = 0;
    double slot_duration = 0.0;
    std::vector<double> delivered_bits;   ///< per UE
    std::vector<double> avg_throughput;   ///< per UE, bit/s over the horizon
    /// grid[slot][tx * n_rb + rb] = granted UE or -1.
    std::vector<std::vector<int>> grid;
    double jain_rates = 0.0;              ///< over associated UEs
    double sum_throughput = 0.0;          ///< bit/s

    std::string to_csv() const;   ///< ue,delivered_bits,avg_throughput_bps
    std::string to_json() const;  ///< summary
};

/// Slot-level proportional-fair scheduling. Per slot and transmitter, each
/// RB goes to the associated UE maximizing r_inst / (T_avg + eps); at most
/// max_ues_per_tx_per_slot distinct UEs are granted per transmitter per slot.
/// `per_subcarrier_sinr[u]` holds UE u's linear SINR on every subcarrier.
ScheduleResult run_pf(const std::vector<std::vector<double>>& per_subcarrier_sinr,
                      std::span<const std::optional<int>> associations, int n_tx, const SchedulerConfig& config,
                      const RadioConfig& radio);

/// Convenience overload using each report's per-subcarrier SINR.
ScheduleResult run_pf(const SinrReport& report, std::span<const std::optional<int>> associations, int n_tx,
                      const SchedulerConfig& config, const RadioConfig& radio);

}  // namespace titan
