#include "titan/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>
#include <json.hpp>

namespace titan {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double normal_quantile(double p) { return -kSqrt2 * boost::math::erfc_inv(2.0 * p); }

double uniform_in(const Dimension& d, Rng& rng) { return d.lower + (d.upper - d.lower) * rng.uniform(); }

}  // namespace

void SearchSpace::validate() const {
    if (dims.empty()) throw std::invalid_argument("SearchSpace: empty space");
    for (const auto& d : dims)
        if (!(d.lower < d.upper) || !std::isfinite(d.lower) || !std::isfinite(d.upper))
            throw std::invalid_argument("SearchSpace: dimension '" + d.name + "' needs lower < upper");
}

bool SearchSpace::contains(std::span<const double> x) const {
    if (x.size() != dims.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] >= dims[i].lower && x[i] <= dims[i].upper)) return false;
    return true;
}

void TpeConfig::validate() const {
    if (n_startup < 1) throw std::invalid_argument("TpeConfig: n_startup must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("TpeConfig: gamma must be in (0, 1)");
    if (n_candidates < 1) throw std::invalid_argument("TpeConfig: n_candidates must be >= 1");
}

ParzenEstimator::ParzenEstimator(std::vector<double> obs, double lower, double upper)
    : lower_(lower), upper_(upper) {
    std::sort(obs.begin(), obs.end());
    const double range = upper - lower;
    const std::size_t n = obs.size();
    const double floor_bw = n > 0 ? range / static_cast<double>(std::min<std::size_t>(100, n)) : range;
    mus_ = obs;
    sigmas_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = obs[i] - (i == 0 ? lower : obs[i - 1]);
        const double right = (i + 1 == n ? upper : obs[i + 1]) - obs[i];
        sigmas_[i] = std::clamp(std::max(left, right), floor_bw, range);
    }
    mass_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        mass_[i] = normal_cdf((upper - mus_[i]) / sigmas_[i]) - normal_cdf((lower - mus_[i]) / sigmas_[i]);
}

double ParzenEstimator::pdf(double x) const {
    if (x < lower_ || x > upper_) return 0.0;
    double sum = 1.0 / (upper_ - lower_);
    for (std::size_t i = 0; i < mus_.size(); ++i) {
        const double z = (x - mus_[i]) / sigmas_[i];
        sum += kInvSqrt2Pi * std::exp(-0.5 * z * z) / (sigmas_[i] * mass_[i]);
    }
    return sum / static_cast<double>(mus_.size() + 1);
}

double ParzenEstimator::log_pdf(double x) const { return std::log(pdf(x)); }

double ParzenEstimator::sample(Rng& rng) const {
    const std::size_t k = rng.below(mus_.size() + 1);
    if (k == mus_.size()) return lower_ + (upper_ - lower_) * rng.uniform();
    const double mu = mus_[k], sigma = sigmas_[k];
    const double a = normal_cdf((lower_ - mu) / sigma);
    const double b = normal_cdf((upper_ - mu) / sigma);
    const double p = a + (b - a) * rng.uniform();
    if (!(p > 0.0 && p < 1.0)) return std::clamp(mu, lower_, upper_);
    return std::clamp(mu + sigma * normal_quantile(p), lower_, upper_);
}

std::vector<double> suggest(std::span<const TrialRecord> history, const SearchSpace& space, const TpeConfig& config,
                            Rng& rng) {
    space.validate();
    config.validate();
    const std::size_t d = space.size();

    std::vector<const TrialRecord*> valid;
    for (const auto& t : history)
        if (!t.failed && std::isfinite(t.value)) valid.push_back(&t);

    auto uniform_point = [&] {
        std::vector<double> x(d);
        for (std::size_t j = 0; j < d; ++j) x[j] = uniform_in(space.dims[j], rng);
        return x;
    };
    if (valid.size() < static_cast<std::size_t>(config.n_startup)) return uniform_point();
    const bool all_equal = std::all_of(valid.begin(), valid.end(),
                                       [&](const TrialRecord* t) { return t->value == valid.front()->value; });
    if (all_equal) return uniform_point();

    // Maximization: the top ceil(gamma*n) values form the good set. Stable on
    // ties so the earlier trial ranks first.
    std::stable_sort(valid.begin(), valid.end(),
                     [](const TrialRecord* a, const TrialRecord* b) { return a->value > b->value; });
    const std::size_t n = valid.size();
    const std::size_t n_good =
        std::min(n, static_cast<std::size_t>(std::ceil(config.gamma * static_cast<double>(n))));

    std::vector<ParzenEstimator> good, bad;
    good.reserve(d);
    bad.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> g, b;
        for (std::size_t i = 0; i < n; ++i) (i < n_good ? g : b).push_back(valid[i]->params.at(j));
        good.emplace_back(std::move(g), space.dims[j].lower, space.dims[j].upper);
        bad.emplace_back(std::move(b), space.dims[j].lower, space.dims[j].upper);
    }

    std::vector<double> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < config.n_candidates; ++c) {
        std::vector<double> x(d);
        double score = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = good[j].sample(rng);
            score += good[j].log_pdf(x[j]) - bad[j].log_pdf(x[j]);
        }
        if (best.empty() || score > best_score) {
            best_score = score;
            best = std::move(x);
        }
    }
    return best;
}

OptimizeResult optimize(const BlackBox& f, const SearchSpace& space, int budget, const TpeConfig& config) {
    if (budget < 1) throw std::invalid_argument("optimize: budget must be >= 1");
    space.validate();
    config.validate();
    Rng rng(config.seed);
    OptimizeResult result;
    result.history.reserve(budget);
    for (int i = 0; i < budget; ++i) {
        TrialRecord trial;
        trial.index = i;
        trial.params = suggest(result.history, space, config, rng);
        try {
            const auto v = f(trial.params);
            if (v && std::isfinite(*v))
                trial.value = *v;
            else
                trial.failed = true;
        } catch (const std::exception&) {
            trial.failed = true;
        }
        if (!trial.failed && (!result.has_best || trial.value > result.best_value)) {
            result.has_best = true;
            result.best_value = trial.value;
            result.best_params = trial.params;
        }
        result.history.push_back(std::move(trial));
    }
    return result;
}

std::string history_to_json(std::span<const TrialRecord> history, const SearchSpace& space) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& t : history) {
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        for (std::size_t j = 0; j < t.params.size() && j < space.size(); ++j) params[space.dims[j].name] = t.params[j];
        nlohmann::ordered_json row;
        row["index"] = t.index;
        row["params"] = std::move(params);
        row["value"] = t.failed ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(t.value);
        row["failed"] = t.failed;
        arr.push_back(std::move(row));
    }
    return arr.dump();
}

}  // namespace titan
