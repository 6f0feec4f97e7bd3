#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "titan/rng.hpp"

namespace titan {

struct Dimension {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
};

/// Box-bounded continuous search space.
struct SearchSpace {
    std::vector<Dimension> dims;

    std::size_t size() const { return dims.size(); }
    void validate() const;
    bool contains(std::span<const double> x) const;
};

struct TrialRecord {
    int index = 0;
    std::vector<double> params;
    double value = 0.0;
    bool failed = false;
};

struct TpeConfig {
    int n_startup = 10;
    double gamma = 0.25;  ///< fraction of trials in the good set
    int n_candidates = 24;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Parzen density of one dimension: truncated-Gaussian kernels over the
/// observations plus one uniform prior kernel over [lower, upper].
class ParzenEstimator {
public:
    ParzenEstimator(std::vector<double> observations, double lower, double upper);

    double pdf(double x) const;
    double log_pdf(double x) const;
    double sample(Rng& rng) const;

    const std::vector<double>& mus() const { return mus_; }
    const std::vector<double>& sigmas() const { return sigmas_; }

private:
    double lower_, upper_;
    std::vector<double> mus_, sigmas_;
    std::vector<double> mass_;  ///< in-bounds probability of each kernel
};

/// Next point to evaluate given the trial history. Uniform until n_startup
/// finite trials exist or while all finite values are equal; otherwise the
/// best of n_candidates draws from l(x) under the ratio l(x)/g(x).
std::vector<double> suggest(std::span<const TrialRecord> history, const SearchSpace& space, const TpeConfig& config,
                            Rng& rng);

/// Objective for optimize(). Returning nullopt, a non-finite value or throwing
/// marks the trial failed.
using BlackBox = std::function<std::optional<double>(const std::vector<double>&)>;

struct OptimizeResult {
    std::vector<double> best_params;
    double best_value = 0.0;
    bool has_best = false;  ///< false when every trial failed
    std::vector<TrialRecord> history;
};

/// Sequential maximization of `f` for `budget` trials with the incumbent
/// (first strictly better value wins) reported as best.
OptimizeResult optimize(const BlackBox& f, const SearchSpace& space, int budget, const TpeConfig& config);

/// JSON array of {index, params: {name: value}, value, failed}.
std::string history_to_json(std::span<const TrialRecord> history, const SearchSpace& space);

}  // namespace titan
