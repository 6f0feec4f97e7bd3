#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "titan/geometry.hpp"

namespace titan {

class TleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mean orbital elements of one two-line element set. Angles in degrees.
struct TleRecord {
    std::string name;
    int catalog_number = 0;
    char classification = 'U';
    std::string intl_designator;  ///< columns 10-17, trailing blanks trimmed
    int epoch_year = 2000;        ///< four digits
    double epoch_day = 1.0;       ///< fractional day of year, 1-based
    double mean_motion_dot = 0.0;
    double mean_motion_ddot = 0.0;
    double bstar = 0.0;
    int ephemeris_type = 0;
    int element_number = 0;
    double inclination = 0.0;
    double raan = 0.0;
    double eccentricity = 0.0;
    double arg_perigee = 0.0;
    double mean_anomaly = 0.0;
    double mean_motion = 0.0;  ///< rev/day
    int revolution_number = 0;

    /// Epoch as a Julian date (UTC).
    double epoch_jd() const;
    bool operator==(const TleRecord&) const = default;
};

/// Modulo-10 checksum of the first 68 columns (digits add their value, '-' adds 1).
int tle_checksum(std::string_view line);

/// Parses one element set. Throws TleError on a bad layout, checksum or field.
TleRecord parse_tle(std::string_view line1, std::string_view line2, std::string_view name = {});

/// Renders both lines (69 columns each, checksums appended).
std::pair<std::string, std::string> render_tle(const TleRecord& record);

/// Reads 2-line or 3-line (name + 2 lines) sets from text.
std::vector<TleRecord> parse_tle_file(std::string_view text);
std::vector<TleRecord> load_tle_file(const std::string& path);

/// Julian date of a UTC calendar instant.
double julian_date(int year, int month, int day, int hour = 0, int minute = 0, double second = 0.0);

/// Greenwich mean sidereal time in radians, [0, 2*pi).
double gmst(double jd);

/// Two-body position in the inertial frame (km). Throws std::out_of_range when
/// |jd - epoch| exceeds 7 days and TleError if Kepler's equation fails to converge.
Vec3 propagate(const TleRecord& tle, double jd);

/// Solves M = E - e*sin(E) by Newton iteration to 1e-10 rad.
double solve_kepler(double mean_anomaly, double eccentricity);

struct Observer {
    double latitude = 0.0;   ///< deg
    double longitude = 0.0;  ///< deg
    double altitude = 0.0;   ///< m

    void validate() const;
};

/// WGS84 geodetic to Earth-fixed cartesian (km).
Vec3 geodetic_to_ecef(const Observer& observer);

/// Topocentric east/north/up offset (km) of an Earth-fixed point.
Vec3 ecef_to_enu(const Observer& observer, const Vec3& ecef);

/// Inertial to Earth-fixed by the GMST rotation.
Vec3 eci_to_ecef(const Vec3& eci, double jd);

/// Elevation angle (deg) of an inertial position seen by `observer` at `jd`.
double elevation(const Observer& observer, const Vec3& sat_eci, double jd);

struct VisibilitySeries {
    std::vector<double> thresholds;           ///< deg
    std::vector<double> times;                ///< s since start
    std::vector<std::vector<int>> counts;     ///< [threshold][step]
    std::vector<double> mean, min, max;       ///< per threshold
    double histogram_bin = 5.0;               ///< deg
    std::vector<long> histogram;              ///< elevation samples >= 0 deg, bins of histogram_bin

    std::string counts_csv() const;
    std::string histogram_csv() const;
};

/// Visible-satellite counts per threshold over [start, start + window].
VisibilitySeries visibility_series(const std::vector<TleRecord>& tles, const Observer& observer, double start_jd,
                                   double window_s, double step_s, const std::vector<double>& thresholds);

/// Direction and slant range of one satellite from a ground point, in the
/// scene frame (x east, y north, z up).
struct SatelliteLink {
    Vec3 direction;   ///< unit
    double range = 600e3;  ///< m
};

/// Satellites at or above `min_elevation_deg` at `jd`.
std::vector<SatelliteLink> satellites_in_view(const std::vector<TleRecord>& tles, const Observer& observer, double jd,
                                              double min_elevation_deg);

/// Fixed constellation used when no TLE set is supplied: `count` satellites
/// spread in azimuth with elevations in [min_elevation_deg, 85], at `range`.
std::vector<SatelliteLink> default_satellites(int count = 6, double min_elevation_deg = 60.0, double range = 600e3);

}  // namespace titan
