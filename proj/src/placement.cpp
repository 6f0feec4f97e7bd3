#include "titan/placement.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace titan {

std::string method_name(Method m) {
    switch (m) {
        case Method::Titan: return "titan";
        case Method::Random: return "random";
        case Method::UmaBo: return "uma_bo";
        case Method::SumcapBo: return "sumcap_bo";
        case Method::D2c: return "d2c";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "titan") return Method::Titan;
    if (name == "random") return Method::Random;
    if (name == "uma_bo") return Method::UmaBo;
    if (name == "sumcap_bo") return Method::SumcapBo;
    if (name == "d2c") return Method::D2c;
    throw std::invalid_argument("unknown method: " + name);
}

void PlacementConfig::validate() const {
    if (!(rho_target > 0.0 && rho_target <= 1.0)) throw std::invalid_argument("PlacementConfig: rho_target must be in (0, 1]");
    if (n_iter < 1) throw std::invalid_argument("PlacementConfig: n_iter must be >= 1");
    if (max_uavs < 1) throw std::invalid_argument("PlacementConfig: max_uavs must be >= 1");
    if (fixed_count && *fixed_count < 1) throw std::invalid_argument("PlacementConfig: fixed_count must be >= 1");
    if (!(z_min < z_max)) throw std::invalid_argument("PlacementConfig: z_min must be < z_max");
    weights.validate();
    tpe.validate();
}

std::string trial_log_jsonl(const PlacementResult& result) {
    std::string out;
    for (const auto& t : result.trials) {
        nlohmann::ordered_json j;
        j["trial"] = t.trial;
        j["uav_count"] = t.uav_count;
        j["method"] = method_name(result.method);
        j["params"] = t.params;
        j["objective"] = t.failed ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(t.objective);
        j["weights"] = {result.weights.capacity, result.weights.coverage, result.weights.fairness};
        nlohmann::ordered_json k;
        k["sum_rate"] = t.kpis.sum_rate;
        k["coverage"] = t.kpis.coverage;
        k["fairness_counts"] = t.kpis.fairness_counts;
        k["fairness_rates"] = t.kpis.fairness_rates;
        k["objective"] = t.kpis.objective;
        j["kpis"] = std::move(k);
        out += j.dump();
        out += '\n';
    }
    return out;
}

SearchSpace placement_space(const Scene& scene, int n_uavs, double z_min, double z_max) {
    const Aabb& b = scene.bounds();
    if (!(b.lo.x < b.hi.x && b.lo.y < b.hi.y)) throw std::invalid_argument("placement_space: scene has no horizontal extent");
    SearchSpace space;
    for (int i = 0; i < n_uavs; ++i) {
        const std::string id = std::to_string(i);
        space.dims.push_back({"x" + id, b.lo.x, b.hi.x});
        space.dims.push_back({"y" + id, b.lo.y, b.hi.y});
        space.dims.push_back({"z" + id, z_min, z_max});
    }
    return space;
}

std::vector<Vec3> decode_positions(const std::vector<double>& p) {
    if (p.size() % 3 != 0) throw std::invalid_argument("decode_positions: size must be a multiple of 3");
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < p.size(); i += 3) out.push_back({p[i], p[i + 1], p[i + 2]});
    return out;
}

PlacementResult titan_optimize(const NetworkEvaluator& evaluator, const std::vector<int>& active_gnbs,
                               const PlacementConfig& config) {
    config.validate();
    PlacementResult res;
    res.method = config.method;
    res.weights = evaluator.setup().weights;
    res.topology.active_gnbs = active_gnbs;

    int count = config.fixed_count.value_or(1);
    const int last = config.fixed_count.value_or(config.max_uavs);
    double f_best = -std::numeric_limits<double>::infinity();
    bool have_best = false;
    int trial_no = 0;
    for (;;) {
        const SearchSpace space = placement_space(evaluator.scene(), count, config.z_min, config.z_max);
        TpeConfig tpe = config.tpe;
        tpe.seed = derive_seed(config.seed, "tpe/uavs=" + std::to_string(count));
        Rng rng(tpe.seed);
        std::vector<TrialRecord> history;
        history.reserve(config.n_iter);
        for (int i = 0; i < config.n_iter; ++i) {
            TrialRecord rec;
            rec.index = i;
            rec.params = suggest(history, space, tpe, rng);
            TrialLogEntry log;
            log.trial = trial_no++;
            log.uav_count = count;
            log.params = rec.params;
            Topology topo{decode_positions(rec.params), active_gnbs};
            try {
                log.kpis = evaluator.evaluate(topo);
                rec.value = log.kpis.objective;
                rec.failed = !std::isfinite(rec.value);
            } catch (const std::exception&) {
                rec.failed = true;
            }
            log.objective = rec.value;
            log.failed = rec.failed;
            if (!rec.failed && rec.value > f_best) {
                f_best = rec.value;
                have_best = true;
                res.topology = std::move(topo);
                res.kpis = log.kpis;
            }
            history.push_back(std::move(rec));
            res.trials.push_back(std::move(log));
        }
        const double coverage = have_best ? res.kpis.coverage : 0.0;
        if (coverage >= config.rho_target) break;
        if (count >= last) {
            res.target_unmet = true;
            break;
        }
        ++count;
    }
    return res;
}

Topology random_placement(const Scene& scene, int n_uavs, double z_min, double z_max, std::uint64_t seed) {
    if (n_uavs < 1) throw std::invalid_argument("random_placement: n_uavs must be >= 1");
    const Aabb& b = scene.bounds();
    Rng rng(seed);
    Topology t;
    for (int i = 0; i < n_uavs; ++i) {
        const double x = rng.uniform(b.lo.x, b.hi.x);
        const double y = rng.uniform(b.lo.y, b.hi.y);
        const double z = rng.uniform(z_min, z_max);
        t.uav_positions.push_back({x, y, z});
    }
    return t;
}

PlacementResult run_placement(const Scene& scene, const std::vector<Vec3>& ues, const std::vector<Vec3>& gnb_sites,
                              const std::vector<int>& active_gnbs, const EvaluationSetup& base,
                              const PlacementConfig& config) {
    config.validate();
    EvaluationSetup setup = base;
    setup.weights = config.weights;
    setup.backend = ChannelBackend::Raytraced;
    switch (config.method) {
        case Method::Titan: break;
        case Method::UmaBo: setup.backend = ChannelBackend::Uma; break;
        case Method::SumcapBo: setup.weights = {1.0, 0.0, 0.0}; break;
        case Method::Random: {
            const int n = config.fixed_count.value_or(config.max_uavs);
            NetworkEvaluator ev(scene, ues, gnb_sites, setup);
            PlacementResult res;
            res.method = Method::Random;
            res.weights = setup.weights;
            res.topology = random_placement(scene, n, config.z_min, config.z_max, derive_seed(config.seed, "random"));
            res.topology.active_gnbs = active_gnbs;
            res.kpis = ev.evaluate(res.topology);
            res.target_unmet = res.kpis.coverage < config.rho_target;
            TrialLogEntry log;
            log.uav_count = n;
            for (const auto& p : res.topology.uav_positions) log.params.insert(log.params.end(), {p.x, p.y, p.z});
            log.objective = res.kpis.objective;
            log.kpis = res.kpis;
            res.trials.push_back(std::move(log));
            return res;
        }
        case Method::D2c: throw std::invalid_argument("run_placement: d2c is not a placement method; use d2c_baseline");
    }
    NetworkEvaluator ev(scene, ues, gnb_sites, setup);
    return titan_optimize(ev, active_gnbs, config);
}

double d2c_snr(const RadioConfig& radio, double range) {
    if (!(range > 0.0)) throw std::invalid_argument("d2c_snr: range must be > 0");
    const double lambda = kSpeedOfLight / radio.carrier_freq;
    const double fspl_db = 20.0 * std::log10(4.0 * kPi * range / lambda);
    const double noise_dbm = watts_to_dbm(noise_power(radio, radio.d2c_bandwidth));
    return from_db(radio.eirp_d2c_dbm - fspl_db - noise_dbm);
}

Kpis d2c_baseline(const Scene& scene, const std::vector<Vec3>& ues, const std::vector<SatelliteLink>& satellites,
                  const RadioConfig& radio, const ObjectiveWeights& weights) {
    const std::size_t n_ue = ues.size();
    const double threshold = from_db(radio.sinr_threshold_db);
    Kpis k;
    k.per_ue_rate.assign(n_ue, 0.0);
    k.serving.assign(n_ue, std::nullopt);
    k.wideband_sinr.assign(n_ue, 0.0);
    const double top = std::max(scene.bounds().hi.z, scene.ground_z()) + 1.0;
    for (std::size_t u = 0; u < n_ue; ++u) {
        double best = -1.0;
        for (std::size_t s = 0; s < satellites.size(); ++s) {
            const Vec3 dir = normalized(satellites[s].direction);
            if (dir.z <= 0.0) continue;
            const double reach = std::max(1.0, (top - ues[u].z) / dir.z + 1.0);
            if (!los_clear(scene, ues[u], ues[u] + dir * reach)) continue;
            const double snr = d2c_snr(radio, satellites[s].range);
            if (snr > best) {
                best = snr;
                k.serving[u] = static_cast<int>(s);
            }
        }
        if (k.serving[u]) k.wideband_sinr[u] = best;
        if (k.serving[u] && best >= threshold) k.covered_set.push_back(static_cast<int>(u));
    }
    std::vector<int> load(satellites.size(), 0);
    for (int u : k.covered_set) ++load[*k.serving[u]];
    std::vector<double> rates;
    for (int u : k.covered_set) {
        const int s = *k.serving[u];
        const double rate = radio.d2c_bandwidth / load[s] * std::log2(1.0 + k.wideband_sinr[u]);
        k.per_ue_rate[u] = rate;
        k.sum_rate += rate;
        rates.push_back(rate);
    }
    k.coverage = n_ue > 0 ? static_cast<double>(k.covered_set.size()) / static_cast<double>(n_ue) : 0.0;
    k.fairness_counts = jain_counts(load);
    k.fairness_rates = jain_rates(rates);
    k.objective = objective(k, weights);
    return k;
}

}  // namespace titan
