#include <doctest.h>

#include <cmath>

#include "titan/satellite.hpp"

using namespace titan;

namespace {

const char* kIss1 = "1 25544U 98067A   08264.51782528 -.00002182  00000-0 -11606-4 0  2927";
const char* kIss2 = "2 25544  51.6416 247.4627 0006703 130.5360 325.0288 15.72125391563537";

std::string with_checksum(std::string line68) {
    return line68 + std::to_string(tle_checksum(line68));
}

TleRecord circular(double incl, double raan, double mean_anomaly, double alt_km) {
    const double mu = 398600.4418, a = 6378.137 + alt_km;
    TleRecord r;
    r.epoch_year = 2024;
    r.epoch_day = 150.25;
    r.inclination = incl;
    r.raan = raan;
    r.mean_anomaly = mean_anomaly;
    r.mean_motion = std::sqrt(mu / (a * a * a)) * 86400.0 / (2 * kPi);
    return r;
}

}  // namespace

TEST_CASE("TLE checksum and parsing") {
    CHECK(tle_checksum(kIss1) == 7);
    CHECK(tle_checksum(kIss2) == 7);
    const auto r = parse_tle(kIss1, kIss2, "ISS");
    CHECK(r.catalog_number == 25544);
    CHECK(r.intl_designator == "98067A");
    CHECK(r.epoch_year == 2008);
    CHECK(r.epoch_day == doctest::Approx(264.51782528));
    CHECK(r.mean_motion_dot == doctest::Approx(-0.00002182));
    CHECK(r.bstar == doctest::Approx(-0.11606e-4));
    CHECK(r.inclination == doctest::Approx(51.6416));
    CHECK(r.eccentricity == doctest::Approx(0.0006703));
    CHECK(r.mean_motion == doctest::Approx(15.72125391));
    CHECK(r.revolution_number == 56353);

    std::string bad = kIss2;
    bad.back() = '8';
    CHECK_THROWS_AS(parse_tle(kIss1, bad), TleError);
    CHECK_THROWS_AS(parse_tle(kIss2, kIss1), TleError);
    CHECK_THROWS_AS(parse_tle("1 25544U", kIss2), TleError);
}

TEST_CASE("all-zero element lines parse to zero elements") {
    const std::string l1 = with_checksum("1 00000U 00000A   00001.00000000  .00000000  00000-0  00000-0 0    0");
    const std::string l2 = with_checksum("2 00000   0.0000   0.0000 0000000   0.0000   0.0000  0.00000000    0");
    const auto r = parse_tle(l1, l2);
    CHECK(r.inclination == 0.0);
    CHECK(r.eccentricity == 0.0);
    CHECK(r.mean_motion == 0.0);
    CHECK(r.epoch_year == 2000);
}

TEST_CASE("implied-decimal eccentricity") {
    const std::string l2 = with_checksum("2 00001  10.0000  20.0000 0001000  30.0000  40.0000 15.00000000    1");
    const std::string l1 = with_checksum("1 00001U 24001A   24001.00000000  .00000000  00000-0  00000-0 0    1");
    CHECK(parse_tle(l1, l2).eccentricity == doctest::Approx(0.0001));
}

TEST_CASE("render/parse round trip") {
    const auto iss = parse_tle(kIss1, kIss2, "ISS");
    const auto [l1, l2] = render_tle(iss);
    CHECK(l1 == kIss1);
    CHECK(l2 == kIss2);
    TleRecord r = circular(97.6, 12.5, 300.25, 550);
    r.catalog_number = 43210;
    r.intl_designator = "18099BC";
    r.bstar = 3.1e-5;
    r.mean_motion_dot = 1.2e-6;
    r.element_number = 12;
    r.revolution_number = 4321;
    const auto [a, b] = render_tle(r);
    CHECK(a.size() == 69);
    CHECK(b.size() == 69);
    const auto back = parse_tle(a, b);
    CHECK(render_tle(back) == std::pair{a, b});
}

TEST_CASE("TLE files with and without name lines") {
    const std::string text = std::string("ISS (ZARYA)\n") + kIss1 + "\n" + kIss2 + "\n" + kIss1 + "\n" + kIss2 + "\n";
    const auto recs = parse_tle_file(text);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].name == "ISS (ZARYA)");
    CHECK(recs[1].name.empty());
}

TEST_CASE("Kepler solver") {
    CHECK(solve_kepler(1.234, 0.0) == 1.234);
    for (double e : {0.1, 0.5, 0.9, 0.99})
        for (double m : {0.01, 1.0, 3.0, 5.5}) {
            const double E = solve_kepler(m, e);
            CHECK(E - e * std::sin(E) == doctest::Approx(m).epsilon(1e-10));
        }
}

TEST_CASE("circular orbits") {
    const TleRecord r = circular(0.0, 0.0, 0.0, 600);
    const double period_days = 1.0 / r.mean_motion;
    const Vec3 p0 = propagate(r, r.epoch_jd());
    const Vec3 p1 = propagate(r, r.epoch_jd() + period_days);
    CHECK(distance(p0, p1) < 1.0);

    const TleRecord polar = circular(90.0, 40.0, 10.0, 550);
    const double a = 6378.137 + 550;
    for (int i = 0; i <= 100; ++i)
        CHECK(std::abs(norm(propagate(polar, polar.epoch_jd() + i * 0.01)) - a) < 0.1);

    CHECK_THROWS_AS(propagate(polar, polar.epoch_jd() + 8.0), std::out_of_range);
}

TEST_CASE("elevation geometry") {
    // Sidereal angle zero: the inertial and Earth-fixed frames coincide.
    double jd = 2451545.0;
    for (int i = 0; i < 60; ++i) jd -= gmst(jd) / (2 * kPi * 1.00273790935);
    CHECK(std::abs(std::remainder(gmst(jd), 2 * kPi)) < 1e-7);

    const Observer equator{0.0, 0.0, 0.0};
    CHECK(elevation(equator, {6378.137 + 600, 0, 0}, jd) == doctest::Approx(90.0).epsilon(1e-3));
    CHECK(elevation(equator, {-(6378.137 + 600), 0, 0}, jd) < 0.0);

    const Observer sf{37.77, -122.42, 0.0};
    const Vec3 up = geodetic_to_ecef({37.77, -122.42, 600e3});
    const Vec3 enu = ecef_to_enu(sf, up);
    CHECK(enu.z == doctest::Approx(600.0).epsilon(1e-6));
    CHECK(std::abs(enu.x) < 1e-6);
    CHECK_THROWS(Observer{95.0, 0.0, 0.0}.validate());
}

TEST_CASE("visibility series") {
    const Observer sf{37.77, -122.42, 0.0};
    const auto empty = visibility_series({}, sf, 2460000.5, 3600, 60, {60, 70, 80});
    for (const auto& row : empty.counts)
        for (int c : row) CHECK(c == 0);

    std::vector<TleRecord> set;
    for (int i = 0; i < 24; ++i) set.push_back(circular(53.0, 15.0 * i, 37.0 * i, 550));
    const auto s = visibility_series(set, sf, set[0].epoch_jd(), 86400, 120, {60, 70, 80});
    REQUIRE(s.counts.size() == 3);
    CHECK(s.times.size() == 721);
    for (std::size_t t = 0; t < s.times.size(); ++t) {
        CHECK(s.counts[0][t] >= s.counts[1][t]);
        CHECK(s.counts[1][t] >= s.counts[2][t]);
    }
    CHECK(s.counts_csv().substr(0, 33) == "t_s,count_60,count_70,count_80\n0,");
}

TEST_CASE("geostationary-like satellite keeps a constant count") {
    // Mean motion of one sidereal day and zero inclination: fixed above a longitude.
    TleRecord geo;
    geo.epoch_year = 2024;
    geo.epoch_day = 10.0;
    geo.mean_motion = 1.00273790935;
    const double jd = geo.epoch_jd();
    const double lon = -std::remainder(gmst(jd), 2 * kPi) * 180.0 / kPi;
    const Observer obs{0.0, lon, 0.0};
    const auto s = visibility_series({geo}, obs, jd, 86400, 600, {30, 60, 80});
    for (std::size_t t = 0; t < s.times.size(); ++t)
        for (int k = 0; k < 3; ++k) CHECK(s.counts[k][t] == 1);
}

TEST_CASE("default constellation") {
    const auto sats = default_satellites(6, 60.0, 600e3);
    REQUIRE(sats.size() == 6);
    for (const auto& s : sats) {
        CHECK(norm(s.direction) == doctest::Approx(1.0));
        CHECK(std::asin(s.direction.z) * 180 / kPi >= 60.0);
        CHECK(s.range == 600e3);
    }
}
