#include "titan/satellite.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace titan {

namespace {

constexpr double kMuEarth = 398600.4418;  // km^3/s^2
constexpr double kWgs84A = 6378.137;      // km
constexpr double kWgs84F = 1.0 / 298.257223563;
constexpr double kDeg = kPi / 180.0;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

// 1-based inclusive column range.
std::string_view cols(std::string_view line, int first, int last) { return line.substr(first - 1, last - first + 1); }

double parse_real(std::string_view field, const char* what) {
    const std::string s(trim(field));
    if (s.empty()) throw TleError(std::string("empty field: ") + what);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw TleError(std::string("malformed field ") + what + ": '" + s + "'");
    return v;
}

int parse_int(std::string_view field, const char* what) {
    const auto s = trim(field);
    if (s.empty()) return 0;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw TleError(std::string("malformed field ") + what + ": '" + std::string(s) + "'");
    return v;
}

// Implied-decimal exponent form " 12345-3" = 0.12345e-3.
double parse_exp_field(std::string_view field, const char* what) {
    const auto s = trim(field);
    if (s.empty()) return 0.0;
    std::size_t i = 0;
    std::string sign;
    if (s[0] == '-' || s[0] == '+') {
        if (s[0] == '-') sign = "-";
        i = 1;
    }
    const auto body = s.substr(i);
    if (body.size() < 3) throw TleError(std::string("malformed implied-decimal field ") + what);
    const auto mant = body.substr(0, body.size() - 2);
    const auto exp = body.substr(body.size() - 2);
    for (char c : mant)
        if (c < '0' || c > '9') throw TleError(std::string("malformed implied-decimal field ") + what);
    if ((exp[0] != '-' && exp[0] != '+') || exp[1] < '0' || exp[1] > '9')
        throw TleError(std::string("malformed implied-decimal field ") + what);
    const std::string text = sign + "0." + std::string(mant) + "e" + std::string(exp);
    return std::strtod(text.c_str(), nullptr);
}

std::string render_exp_field(double v) {
    if (v == 0.0) return " 00000-0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4e", std::abs(v));  // d.dddde+XX
    const std::string s(buf);
    const std::string mant = s.substr(0, 1) + s.substr(2, 4);
    const int exp = std::stoi(s.substr(7)) + 1;
    if (exp < -9 || exp > 9) throw TleError("value out of range for implied-decimal field");
    std::snprintf(buf, sizeof buf, "%c%s%c%d", v < 0 ? '-' : ' ', mant.c_str(), exp < 0 ? '-' : '+', std::abs(exp));
    return buf;
}

std::string render_ndot(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8f", std::abs(v));  // 0.dddddddd
    std::string s(buf);
    if (s[0] != '0') throw TleError("mean_motion_dot out of range");
    return (v < 0 ? "-" : " ") + s.substr(1);
}

std::string with_checksum(std::string line) {
    line.resize(68, ' ');
    return line + static_cast<char>('0' + tle_checksum(line));
}

void check_line(std::string_view line, char number) {
    if (line.size() != 69) throw TleError(std::string("line ") + number + " must have 69 columns");
    if (line[0] != number) throw TleError(std::string("line ") + number + " has wrong line number");
    if (line[68] < '0' || line[68] > '9' || tle_checksum(line) != line[68] - '0')
        throw TleError(std::string("checksum mismatch on line ") + number);
}

}  // namespace

int tle_checksum(std::string_view line) {
    int sum = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(68, line.size()); ++i) {
        const char c = line[i];
        if (c >= '0' && c <= '9') sum += c - '0';
        else if (c == '-') sum += 1;
    }
    return sum % 10;
}

double TleRecord::epoch_jd() const { return julian_date(epoch_year, 1, 1) + epoch_day - 1.0; }

TleRecord parse_tle(std::string_view line1, std::string_view line2, std::string_view name) {
    while (!line1.empty() && (line1.back() == '\r' || line1.back() == '\n')) line1.remove_suffix(1);
    while (!line2.empty() && (line2.back() == '\r' || line2.back() == '\n')) line2.remove_suffix(1);
    check_line(line1, '1');
    check_line(line2, '2');
    TleRecord r;
    r.name = std::string(trim(name));
    r.catalog_number = parse_int(cols(line1, 3, 7), "catalog number");
    r.classification = line1[7];
    r.intl_designator = std::string(trim(cols(line1, 10, 17)));
    const int yy = parse_int(cols(line1, 19, 20), "epoch year");
    r.epoch_year = yy < 57 ? 2000 + yy : 1900 + yy;
    r.epoch_day = parse_real(cols(line1, 21, 32), "epoch day");
    r.mean_motion_dot = parse_real(cols(line1, 34, 43), "mean motion dot");
    r.mean_motion_ddot = parse_exp_field(cols(line1, 45, 52), "mean motion ddot");
    r.bstar = parse_exp_field(cols(line1, 54, 61), "bstar");
    r.ephemeris_type = parse_int(cols(line1, 63, 63), "ephemeris type");
    r.element_number = parse_int(cols(line1, 65, 68), "element number");

    if (parse_int(cols(line2, 3, 7), "catalog number") != r.catalog_number)
        throw TleError("catalog numbers of line 1 and 2 differ");
    r.inclination = parse_real(cols(line2, 9, 16), "inclination");
    r.raan = parse_real(cols(line2, 18, 25), "raan");
    const auto ecc = trim(cols(line2, 27, 33));
    if (ecc.size() != 7) throw TleError("malformed implied-decimal field eccentricity");
    for (char c : ecc)
        if (c < '0' || c > '9') throw TleError("malformed implied-decimal field eccentricity");
    r.eccentricity = std::strtod(("0." + std::string(ecc)).c_str(), nullptr);
    r.arg_perigee = parse_real(cols(line2, 35, 42), "argument of perigee");
    r.mean_anomaly = parse_real(cols(line2, 44, 51), "mean anomaly");
    r.mean_motion = parse_real(cols(line2, 53, 63), "mean motion");
    r.revolution_number = parse_int(cols(line2, 64, 68), "revolution number");
    return r;
}

std::pair<std::string, std::string> render_tle(const TleRecord& r) {
    if (!(r.eccentricity >= 0.0 && r.eccentricity < 1.0)) throw TleError("eccentricity must be in [0, 1)");
    char buf[96];
    std::snprintf(buf, sizeof buf, "1 %05d%c %-8.8s %02d%012.8f %s %s %s %1d %4d", r.catalog_number, r.classification,
                  r.intl_designator.c_str(), r.epoch_year % 100, r.epoch_day, render_ndot(r.mean_motion_dot).c_str(),
                  render_exp_field(r.mean_motion_ddot).c_str(), render_exp_field(r.bstar).c_str(), r.ephemeris_type,
                  r.element_number);
    std::string l1 = with_checksum(buf);
    const long ecc = std::lround(r.eccentricity * 1e7);
    std::snprintf(buf, sizeof buf, "2 %05d %8.4f %8.4f %07ld %8.4f %8.4f %11.8f%5d", r.catalog_number, r.inclination,
                  r.raan, ecc, r.arg_perigee, r.mean_anomaly, r.mean_motion, r.revolution_number);
    std::string l2 = with_checksum(buf);
    return {std::move(l1), std::move(l2)};
}

std::vector<TleRecord> parse_tle_file(std::string_view text) {
    std::vector<std::string> lines;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) lines.push_back(line);
    }
    std::vector<TleRecord> out;
    std::size_t i = 0;
    while (i < lines.size()) {
        if (lines[i][0] == '1' && i + 1 < lines.size() && lines[i + 1][0] == '2' && lines[i].size() == 69) {
            out.push_back(parse_tle(lines[i], lines[i + 1]));
            i += 2;
        } else if (i + 2 < lines.size() && lines[i + 1][0] == '1' && lines[i + 2][0] == '2') {
            out.push_back(parse_tle(lines[i + 1], lines[i + 2], lines[i]));
            i += 3;
        } else {
            throw TleError("unexpected line " + std::to_string(i + 1) + " in TLE text");
        }
    }
    return out;
}

std::vector<TleRecord> load_tle_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TleError("cannot open TLE file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_tle_file(ss.str());
}

double julian_date(int year, int month, int day, int hour, int minute, double second) {
    // Days from civil (proleptic Gregorian), relative to 1970-01-01.
    const int y = year - (month <= 2 ? 1 : 0);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = y - era * 400;
    const int mp = (month + 9) % 12;
    const int doy = (153 * mp + 2) / 5 + day - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    const long days = static_cast<long>(era) * 146097 + doe - 719468;
    return 2440587.5 + static_cast<double>(days) + (hour + (minute + second / 60.0) / 60.0) / 24.0;
}

double gmst(double jd) {
    const double d = jd - 2451545.0;
    const double t = d / 36525.0;
    double deg = 280.46061837 + 360.98564736629 * d + 0.000387933 * t * t - t * t * t / 38710000.0;
    deg = std::fmod(deg, 360.0);
    if (deg < 0) deg += 360.0;
    return deg * kDeg;
}

double solve_kepler(double m, double e) {
    if (!(e >= 0.0 && e < 1.0)) throw TleError("eccentricity must be in [0, 1)");
    double E = e < 0.8 ? m : kPi;
    for (int it = 0; it < 100; ++it) {
        const double f = E - e * std::sin(E) - m;
        const double step = f / (1.0 - e * std::cos(E));
        E -= step;
        if (std::abs(step) < 1e-10) return E;
    }
    throw TleError("Kepler iteration did not converge");
}

Vec3 propagate(const TleRecord& tle, double jd) {
    const double dt_days = jd - tle.epoch_jd();
    if (std::abs(dt_days) > 7.0) throw std::out_of_range("propagate: time more than 7 days from epoch");
    if (!(tle.mean_motion > 0.0)) throw TleError("mean motion must be > 0");
    const double n = tle.mean_motion * 2.0 * kPi / 86400.0;  // rad/s
    const double a = std::cbrt(kMuEarth / (n * n));
    const double e = tle.eccentricity;
    double m = std::fmod(tle.mean_anomaly * kDeg + n * dt_days * 86400.0, 2.0 * kPi);
    if (m < 0) m += 2.0 * kPi;
    const double E = solve_kepler(m, e);
    const double xp = a * (std::cos(E) - e);
    const double yp = a * std::sqrt(1.0 - e * e) * std::sin(E);

    const double w = tle.arg_perigee * kDeg, i = tle.inclination * kDeg, o = tle.raan * kDeg;
    const double cw = std::cos(w), sw = std::sin(w), ci = std::cos(i), si = std::sin(i), co = std::cos(o),
                 so = std::sin(o);
    return {(co * cw - so * sw * ci) * xp + (-co * sw - so * cw * ci) * yp,
            (so * cw + co * sw * ci) * xp + (-so * sw + co * cw * ci) * yp, (sw * si) * xp + (cw * si) * yp};
}

void Observer::validate() const {
    if (!(std::abs(latitude) <= 90.0) || !(std::abs(longitude) <= 180.0))
        throw std::invalid_argument("Observer: latitude must be in [-90, 90] and longitude in [-180, 180]");
}

Vec3 geodetic_to_ecef(const Observer& ob) {
    const double lat = ob.latitude * kDeg, lon = ob.longitude * kDeg, h = ob.altitude / 1000.0;
    const double e2 = kWgs84F * (2.0 - kWgs84F);
    const double sl = std::sin(lat);
    const double N = kWgs84A / std::sqrt(1.0 - e2 * sl * sl);
    return {(N + h) * std::cos(lat) * std::cos(lon), (N + h) * std::cos(lat) * std::sin(lon), (N * (1.0 - e2) + h) * sl};
}

Vec3 ecef_to_enu(const Observer& ob, const Vec3& p) {
    const Vec3 d = p - geodetic_to_ecef(ob);
    const double lat = ob.latitude * kDeg, lon = ob.longitude * kDeg;
    const double sl = std::sin(lat), cl = std::cos(lat), so = std::sin(lon), co = std::cos(lon);
    return {-so * d.x + co * d.y, -sl * co * d.x - sl * so * d.y + cl * d.z, cl * co * d.x + cl * so * d.y + sl * d.z};
}

Vec3 eci_to_ecef(const Vec3& r, double jd) {
    const double th = gmst(jd);
    const double c = std::cos(th), s = std::sin(th);
    return {c * r.x + s * r.y, -s * r.x + c * r.y, r.z};
}

double elevation(const Observer& observer, const Vec3& sat_eci, double jd) {
    const Vec3 enu = ecef_to_enu(observer, eci_to_ecef(sat_eci, jd));
    return std::asin(std::clamp(enu.z / norm(enu), -1.0, 1.0)) / kDeg;
}

VisibilitySeries visibility_series(const std::vector<TleRecord>& tles, const Observer& observer, double start_jd,
                                   double window_s, double step_s, const std::vector<double>& thresholds) {
    if (!(step_s > 0.0)) throw std::invalid_argument("visibility_series: step must be > 0");
    if (!(window_s >= 0.0)) throw std::invalid_argument("visibility_series: window must be >= 0");
    observer.validate();
    VisibilitySeries vs;
    vs.thresholds = thresholds;
    const long steps = static_cast<long>(std::floor(window_s / step_s + 1e-9)) + 1;
    vs.counts.assign(thresholds.size(), std::vector<int>(steps, 0));
    vs.histogram.assign(static_cast<std::size_t>(std::ceil(90.0 / vs.histogram_bin)), 0);
    for (long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * step_s;
        vs.times.push_back(t);
        const double jd = start_jd + t / 86400.0;
        for (const auto& tle : tles) {
            const double el = elevation(observer, propagate(tle, jd), jd);
            for (std::size_t j = 0; j < thresholds.size(); ++j)
                if (el >= thresholds[j]) ++vs.counts[j][k];
            if (el >= 0.0) {
                const auto bin = std::min(vs.histogram.size() - 1, static_cast<std::size_t>(el / vs.histogram_bin));
                ++vs.histogram[bin];
            }
        }
    }
    for (const auto& c : vs.counts) {
        double sum = 0.0;
        int lo = c.empty() ? 0 : c[0], hi = lo;
        for (int v : c) {
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        vs.mean.push_back(c.empty() ? 0.0 : sum / static_cast<double>(c.size()));
        vs.min.push_back(lo);
        vs.max.push_back(hi);
    }
    return vs;
}

std::string VisibilitySeries::counts_csv() const {
    std::ostringstream out;
    out << "t_s";
    char buf[64];
    for (double th : thresholds) {
        std::snprintf(buf, sizeof buf, ",count_%g", th);
        out << buf;
    }
    out << '\n';
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%g", times[k]);
        out << buf;
        for (const auto& c : counts) out << ',' << c[k];
        out << '\n';
    }
    return out.str();
}

std::string VisibilitySeries::histogram_csv() const {
    std::ostringstream out;
    out << "elevation_lo_deg,elevation_hi_deg,samples\n";
    char buf[96];
    for (std::size_t b = 0; b < histogram.size(); ++b) {
        std::snprintf(buf, sizeof buf, "%g,%g,%ld\n", b * histogram_bin, std::min(90.0, (b + 1) * histogram_bin),
                      histogram[b]);
        out << buf;
    }
    return out.str();
}

std::vector<SatelliteLink> satellites_in_view(const std::vector<TleRecord>& tles, const Observer& observer, double jd,
                                              double min_elevation_deg) {
    std::vector<SatelliteLink> out;
    for (const auto& tle : tles) {
        const Vec3 enu = ecef_to_enu(observer, eci_to_ecef(propagate(tle, jd), jd));
        const double range = norm(enu);
        const double el = std::asin(std::clamp(enu.z / range, -1.0, 1.0)) / kDeg;
        if (el >= min_elevation_deg) out.push_back({enu / range, range * 1000.0});
    }
    return out;
}

std::vector<SatelliteLink> default_satellites(int count, double min_elevation_deg, double range) {
    std::vector<SatelliteLink> out;
    const double span = 85.0 - min_elevation_deg;
    for (int i = 0; i < count; ++i) {
        const double el = (min_elevation_deg + span * (i + 0.5) / count) * kDeg;
        const double az = 2.0 * kPi * i / count;
        out.push_back({{std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el)}, range});
    }
    return out;
}

}  // namespace titan
