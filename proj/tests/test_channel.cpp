#include <doctest.h>

#include <cmath>

#include "titan/channel.hpp"
#include "titan/metrics.hpp"

using namespace titan;

namespace {

LinkState single_tap(double length, double extra_phase = 0.0) {
    LinkState l;
    PathTap t;
    t.amplitude = path_amplitude(length, {}, 2e9) * std::polar(1.0, extra_phase);
    t.delay = length / kSpeedOfLight;
    l.taps.push_back(t);
    return l;
}

RadioConfig tiny_radio() {
    RadioConfig r;
    r.num_subcarriers = 1;
    r.bandwidth = 30e3;
    return r;
}

}  // namespace

TEST_CASE("coherent power") {
    CHECK(coherent_power(LinkState{}, 23.0) == 0.0);
    const double p = coherent_power(single_tap(100.0), 23.0);
    CHECK(watts_to_dbm(p) == doctest::Approx(23.0 - 78.47).epsilon(1e-4));

    LinkState cancel = single_tap(100.0);
    PathTap opposite = cancel.taps[0];
    opposite.amplitude = -opposite.amplitude;
    cancel.taps.push_back(opposite);
    CHECK(coherent_power(cancel, 23.0) == doctest::Approx(0.0));
}

TEST_CASE("frequency response") {
    const double df = 30e3;
    const std::vector<double> f{0.0, df, 2 * df, 3 * df};
    const auto flat = frequency_response(single_tap(150.0), f);
    for (const auto& h : flat) CHECK(std::abs(h) == doctest::Approx(std::abs(flat[0])));

    LinkState two;
    PathTap a;
    a.amplitude = 1.0;
    a.delay = 1e-6;
    PathTap b = a;
    b.delay = a.delay + 1.0 / (2 * df);
    two.taps = {a, b};
    const auto h = frequency_response(two, f);
    CHECK(std::abs(h[0]) == doctest::Approx(2.0));
    CHECK(std::abs(h[1]) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::abs(h[2]) == doctest::Approx(2.0));
    CHECK(std::abs(h[3]) == doctest::Approx(0.0).epsilon(1e-9));

    for (const auto& z : frequency_response(LinkState{}, f)) CHECK(z == Complex(0.0, 0.0));

    // Zero offset equals the coherent sum.
    LinkState mixed = single_tap(120.0);
    mixed.taps.push_back(single_tap(180.0, 0.7).taps[0]);
    Complex sum = 0.0;
    for (const auto& t : mixed.taps) sum += t.amplitude;
    const double zero[1] = {0.0};
    CHECK(frequency_response(mixed, zero)[0] == sum);
}

TEST_CASE("thermal noise") {
    RadioConfig r;
    CHECK(noise_power(r, 20e6) == doctest::Approx(8.006e-14).epsilon(1e-3));
    CHECK(watts_to_dbm(noise_power(r, 20e6)) == doctest::Approx(-100.97).epsilon(1e-4));
    CHECK(watts_to_dbm(noise_power(r, 30e3)) == doctest::Approx(-129.2).epsilon(1e-3));
    CHECK(noise_power(r, 40e6) == doctest::Approx(2 * noise_power(r, 20e6)));
    CHECK_THROWS(noise_power(r, 0.0));
}

TEST_CASE("SINR") {
    SUBCASE("P = N0 gives 0 dB") {
        const RadioConfig r = tiny_radio();
        PowerTable t(1, 1, 1);
        t.at(0, 0) = noise_power(r, r.bandwidth);
        t.subcarriers(0, 0)[0] = noise_power(r, r.subcarrier_spacing);
        const auto rep = compute_sinr(t, {true}, r);
        CHECK(rep[0].wideband == doctest::Approx(1.0));
        CHECK(rep[0].per_subcarrier[0] == doctest::Approx(1.0));
    }
    SUBCASE("one interferer") {
        RadioConfig r;
        r.noise_temperature = 8.006e-14 / (kBoltzmann * r.bandwidth);
        PowerTable t(2, 1, r.num_subcarriers);
        t.at(0, 0) = 1e-12;
        t.at(1, 0) = 1e-13;
        const auto rep = compute_sinr(t, {true, true}, r);
        CHECK(rep[0].serving == 0);
        CHECK(rep[0].wideband == doctest::Approx(5.554).epsilon(1e-4));
        CHECK(to_db(rep[0].wideband) == doctest::Approx(7.45).epsilon(1e-3));
    }
    SUBCASE("only silent transmitters") {
        PowerTable t(2, 1, 1);
        t.at(0, 0) = 1e-12;
        const auto rep = compute_sinr(t, {false, true}, tiny_radio());
        CHECK_FALSE(rep[0].serving);
        CHECK(rep[0].wideband == 0.0);
    }
    SUBCASE("ties go to the lowest index; inactive transmitters do not interfere") {
        PowerTable t(3, 1, 1);
        t.at(0, 0) = t.at(1, 0) = 2e-12;
        t.at(2, 0) = 5e-12;
        const auto rep = compute_sinr(t, {true, true, false}, tiny_radio());
        CHECK(rep[0].serving == 0);
        CHECK(rep[0].wideband == doctest::Approx(2e-12 / (2e-12 + noise_power(tiny_radio(), 30e3))));
    }
    SUBCASE("interference groups") {
        PowerTable t(2, 1, 1);
        t.at(0, 0) = 2e-12;
        t.at(1, 0) = 1e-12;
        const int groups[2] = {0, 1};
        const auto rep = compute_sinr(t, {true, true}, tiny_radio(), groups);
        CHECK(rep[0].wideband == doctest::Approx(2e-12 / noise_power(tiny_radio(), 30e3)));
    }
}

TEST_CASE("UMa pathloss and LoS probability") {
    CHECK(uma_los_probability(18.0) == 1.0);
    CHECK(uma_los_probability(5.0) == 1.0);
    CHECK(uma_los_probability(1e5) < 1e-3);
    CHECK(uma_los_probability(100.0) == doctest::Approx(0.18 + std::exp(-100.0 / 63.0) * 0.82));

    RadioConfig r;
    const Vec3 ue{0, 0, 1.5};
    const Vec3 tx{std::sqrt(100.0 * 100.0 - 23.5 * 23.5), 0, 25.0};
    const auto link = uma_link_expectation(tx, ue, r);
    CHECK(link.pathloss_los_db == doctest::Approx(78.02).epsilon(1e-4));
    CHECK(link.pathloss_nlos_db >= link.pathloss_los_db);
    CHECK_THROWS(uma_link_expectation(ue, ue, r));
}

TEST_CASE("expected UMa SINR") {
    RadioConfig r;
    const Vec3 ue{0, 0, 1.5};
    const std::vector<Vec3> one{{100, 0, 40}};
    const std::vector<Vec3> ues{ue};
    const double n0 = noise_power(r, r.bandwidth);

    UmaOptions los;
    los.force_los = true;
    const double d = distance(one[0], ue);
    const double pl = 28.0 + 22.0 * std::log10(d) + 20.0 * std::log10(2.0);
    CHECK(expected_sinr_uma(one, ues, r, los)[0] == doctest::Approx(dbm_to_watts(23.0 - pl) / n0));

    // Two transmitters at 100 m and 200 m, assembled by hand.
    const std::vector<Vec3> two{{100, 0, 40}, {0, 200, 40}};
    auto expected_power = [&](const Vec3& tx) {
        const double d2 = std::hypot(tx.x, tx.y), d3 = distance(tx, ue);
        const double p = d2 <= 18 ? 1.0 : 18.0 / d2 + std::exp(-d2 / 63.0) * (1 - 18.0 / d2);
        const double l = 28.0 + 22.0 * std::log10(d3) + 20.0 * std::log10(2.0);
        const double n = std::max(l, 13.54 + 39.08 * std::log10(d3) + 20.0 * std::log10(2.0));
        return dbm_to_watts(23.0) * (p * std::pow(10.0, -l / 10) + (1 - p) * std::pow(10.0, -n / 10));
    };
    const double p0 = expected_power(two[0]), p1 = expected_power(two[1]);
    CHECK(expected_sinr_uma(two, ues, r)[0] == doctest::Approx(p0 / (p1 + n0)).epsilon(1e-12));
    CHECK_THROWS(expected_sinr_uma(std::vector<Vec3>{}, ues, r));
}

TEST_CASE("UMa stochastic link draws LoS at the configured rate") {
    RadioConfig r;
    Rng rng(5);
    const Vec3 tx{120, 0, 30}, ue{0, 0, 1.5};
    int los = 0;
    for (int i = 0; i < 20000; ++i) los += uma_stochastic_link(tx, ue, r, rng).is_los;
    CHECK(los / 20000.0 == doctest::Approx(uma_los_probability(120.0)).epsilon(0.05));
}

TEST_CASE("radio config validation") {
    RadioConfig r;
    CHECK_NOTHROW(r.validate());
    r.bandwidth = 40e6;
    CHECK_THROWS(r.validate());
    r = RadioConfig{};
    r.num_subcarriers = 0;
    CHECK_THROWS(r.validate());
}
