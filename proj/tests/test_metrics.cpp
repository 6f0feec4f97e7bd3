#include <doctest.h>

#include <cmath>
#include <vector>

#include "titan/metrics.hpp"

using namespace titan;

namespace {

UeSinr flat(double gamma, int k, std::optional<int> serving = 0) {
    UeSinr u;
    u.serving = serving;
    u.wideband = gamma;
    u.per_subcarrier.assign(k, gamma);
    return u;
}

}  // namespace

TEST_CASE("coverage threshold is inclusive") {
    const double th = from_db(5.0);
    CHECK(coverage_set({flat(th, 1), flat(th, 1)}, th).size() == 2);
    CHECK(coverage_set({}, th).empty());
    const SinrReport mixed{flat(from_db(3), 1), flat(from_db(5), 1), flat(from_db(7), 1)};
    CHECK(coverage_set(mixed, th) == std::vector<int>{1, 2});
    // No serving transmitter: not covered even at a nominal SINR.
    CHECK(coverage_set({flat(100.0, 1, std::nullopt)}, th).empty());
}

TEST_CASE("Shannon capacity and sum rate") {
    CHECK(shannon_capacity(1.0, 30e3) == doctest::Approx(30e3));
    CHECK(shannon_capacity(0.0, 30e3) == 0.0);
    CHECK(shannon_capacity(3.0, 30e3) == doctest::Approx(60e3));

    RadioConfig r;
    const SinrReport one{flat(1.0, 660)};
    const std::vector<int> covered{0};
    CHECK(sum_rate(one, {}, r) == 0.0);
    CHECK(sum_rate(one, covered, r) == doctest::Approx(19.8e6));
    const SinrReport two{flat(1.0, 660), flat(1.0, 660)};
    const std::vector<int> both{0, 1};
    CHECK(sum_rate(two, both, r) == doctest::Approx(2 * 19.8e6));
}

TEST_CASE("Jain indices") {
    CHECK(jain_counts(std::vector<int>{10, 10, 10}) == doctest::Approx(1.0));
    CHECK(jain_counts(std::vector<int>{30, 0, 0}) == doctest::Approx(1.0 / 3));
    CHECK(jain_counts(std::vector<int>{3, 1}) == doctest::Approx(0.8));
    CHECK(jain_counts(std::vector<int>{0, 0}) == 0.0);
    CHECK(jain_rates(std::vector<double>{5, 5, 5, 5}) == doctest::Approx(1.0));
    CHECK(jain_rates(std::vector<double>{0, 0, 7}) == doctest::Approx(1.0 / 3));
    CHECK(jain_rates(std::vector<double>{2e6, 1e6, 1e6}) == doctest::Approx(16.0 / 18.0));
    CHECK_THROWS(jain_rates(std::vector<double>{-1.0}));

    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> n(1 + rng.below(6));
        int total = 0;
        for (auto& x : n) total += x = static_cast<int>(rng.below(20));
        if (total == 0) continue;
        const double j = jain_counts(n);
        CHECK(j >= 1.0 / n.size() - 1e-12);
        CHECK(j <= 1.0 + 1e-12);
        std::vector<int> scaled(n);
        for (auto& x : scaled) x *= 3;
        CHECK(jain_counts(scaled) == doctest::Approx(j));
    }
}

TEST_CASE("objective") {
    Kpis k;
    k.sum_rate = 2e6;
    k.coverage = 0.5;
    k.fairness_counts = 0.5;
    CHECK(objective(k, {1, 1, 1}) == doctest::Approx(0.5));
    k.coverage = 0.0;
    CHECK(objective(k, {1, 1, 1}) == 0.0);
    k.coverage = 0.0;
    CHECK(objective(k, {1, 0, 1}) == doctest::Approx(1.0));  // 0^0 = 1
    CHECK_THROWS(ObjectiveWeights{-1, 1, 1}.validate());
}

TEST_CASE("KPI stack") {
    SUBCASE("nothing to serve") {
        const Kpis k = compute_kpis({}, 0, RadioConfig{}, {});
        CHECK(k.coverage == 0.0);
        CHECK(k.sum_rate == 0.0);
        CHECK(k.fairness_counts == 0.0);
        CHECK(k.objective == 0.0);
    }
    SUBCASE("one UAV above a lone UE in an open scene") {
        SceneBuilder b;
        b.set_ground(0.0, std::nullopt, false);
        b.set_bounds({{0, 0, 0}, {100, 100, 10}});
        const Scene s = b.finish();
        EvaluationSetup setup;
        setup.trace.ray_count = 1000;
        const std::vector<Vec3> ue{{50, 50, 1.5}};
        const Kpis k = evaluate_topology(s, {{{50, 50, 100}}, {}}, ue, {}, setup);
        CHECK(k.coverage == 1.0);
        CHECK(k.fairness_counts == 1.0);
        CHECK(k.per_uav_load == std::vector<int>{1});
    }
    SUBCASE("fairness over UAVs only by default, optionally with gNBs") {
        SinrReport rep{flat(10, 2, 0), flat(10, 2, 0), flat(10, 2, 2)};
        RadioConfig r;
        r.num_subcarriers = 2;
        r.bandwidth = 60e3;
        const Kpis uav_only = compute_kpis(rep, 2, r, {});
        CHECK(uav_only.per_uav_load == std::vector<int>{2, 0});
        CHECK(uav_only.fairness_counts == doctest::Approx(0.5));
        const std::vector<int> servers{0, 1, 2};
        CHECK(compute_kpis(rep, 2, r, {}, servers).fairness_counts == doctest::Approx(9.0 / 15.0));
    }
}

TEST_CASE("evaluator: gNB removal and interference") {
    SceneBuilder b;
    b.set_ground(0.0, std::nullopt, false);
    b.set_bounds({{0, 0, 0}, {400, 400, 10}});
    const Scene s = b.finish();
    EvaluationSetup setup;
    setup.trace.ray_count = 1000;
    const std::vector<Vec3> ues{{50, 50, 1.5}, {350, 350, 1.5}};
    const std::vector<Vec3> gnbs{{60, 60, 25}, {340, 340, 25}};
    NetworkEvaluator ev(s, ues, gnbs, setup);
    const auto [both, rep_both] = ev.evaluate_full({{}, {0, 1}});
    const auto [one, rep_one] = ev.evaluate_full({{}, {0}});
    CHECK(rep_both[0].serving == 0);  // gNB 0 is transmitter index 0 with no UAVs
    CHECK(rep_one[1].serving == 0);
    CHECK(rep_one[0].wideband > rep_both[0].wideband);  // its interferer is gone
    setup.radio.cross_tier_interference = false;
    NetworkEvaluator ev2(s, ues, gnbs, setup);
    const auto [k2, r2] = ev2.evaluate_full({{{200, 200, 100}}, {0, 1}});
    const auto [k1, r1] = ev.evaluate_full({{{200, 200, 100}}, {0, 1}});
    CHECK(r2[0].wideband >= r1[0].wideband);
}

TEST_CASE("UMa backend with forced LoS tracks the ray tracer in free space") {
    SceneBuilder b;
    b.set_ground(0.0, std::nullopt, false);
    b.set_bounds({{0, 0, 0}, {400, 400, 10}});
    const Scene s = b.finish();
    EvaluationSetup traced;
    traced.trace.ray_count = 1000;
    EvaluationSetup uma = traced;
    uma.backend = ChannelBackend::Uma;
    uma.uma.force_los = true;
    for (double d = 100.0; d <= 150.0; d += 10.0) {
        const std::vector<Vec3> ue{{50 + d, 50, 1.5}};
        const Topology t{{{50, 50, 25}}, {}};
        const double a = to_db(evaluate_topology(s, t, ue, {}, traced).wideband_sinr[0]);
        const double c = to_db(evaluate_topology(s, t, ue, {}, uma).wideband_sinr[0]);
        CHECK(std::abs(a - c) < 0.5);
    }
}
