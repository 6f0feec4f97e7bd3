#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "titan/geometry.hpp"
#include "titan/scene.hpp"

namespace titan {

using Complex = std::complex<double>;

enum class Polarization { TE, TM };

/// Fresnel reflection coefficient for a plane wave incident at `incidence_angle`
/// (radians from the surface normal) on a half-space of `material`, using the
/// complex permittivity eps_r - j*sigma/(omega*eps0). Perfect reflectors give -1.
Complex fresnel_reflection(const Material& material, double incidence_angle, Polarization pol, double freq);

/// Complex tap gain (unit TX power): lambda/(4*pi*d) * prod(Gamma) * exp(-j*2*pi*d/lambda).
Complex path_amplitude(double total_length, std::span<const Complex> reflections, double freq);

struct Interaction {
    std::int32_t triangle;  ///< kGroundTriangle for ground bounces
    Vec3 point;

    bool operator==(const Interaction&) const = default;
};

/// One multipath component of a channel impulse response.
struct PathTap {
    Complex amplitude;
    double delay = 0.0;  ///< s
    std::vector<Interaction> interactions;

    int depth() const { return static_cast<int>(interactions.size()); }
    bool is_los() const { return interactions.empty(); }
    double length() const { return delay * kSpeedOfLight; }
    /// Ordered triangle ids of the interactions; empty for LoS.
    std::vector<std::int32_t> signature() const;
    /// "LOS" or ids joined by '-', with "G" for the ground.
    std::string signature_string() const;
};

struct TraceConfig {
    int max_depth = 3;
    long ray_count = 200000;
    double capture_radius_scale = 1.0;
    double carrier_freq = 2e9;  ///< Hz
    double fidelity = 1.0;      ///< fraction of ray_count actually launched
    int threads = 1;

    long effective_rays() const;
    void validate() const;
};

/// Unit launch direction `i` of a prefix-stable spherical lattice: the first n
/// directions are well spread for every n, so lower ray counts launch a prefix
/// of the higher-count set.
Vec3 launch_direction(long i);

/// Exact specular path through the given facet sequence (image method), or
/// nullopt when the geometry is invalid or any segment is occluded.
std::optional<PathTap> solve_specular_path(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                           std::span<const std::int32_t> facets, double freq);

/// Exhaustive image-method enumeration of LoS and every specular sequence up
/// to max_depth (<= 3). Deterministic; taps sorted by delay then signature.
std::vector<PathTap> trace_image(const Scene& scene, const Vec3& tx, const Vec3& rx, int max_depth, double freq);

/// Shooting-and-bouncing rays from `tx` to every receiver. LoS and the single
/// ground bounce are computed analytically; other paths are discovered by
/// capture spheres and then replaced by their exact specular geometry.
std::vector<std::vector<PathTap>> trace_sbr(const Scene& scene, const Vec3& tx, std::span<const Vec3> receivers,
                                            const TraceConfig& config);

/// True iff no surface intersects the open segment (a, b).
bool los_clear(const Scene& scene, const Vec3& a, const Vec3& b);

}  // namespace titan
