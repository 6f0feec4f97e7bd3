#include "titan/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "titan/parallel.hpp"

namespace titan {

namespace {

constexpr double kPlastic = 1.32471795724474602596;  // generalized golden ratio for 2-D lattices

double frac(double x) { return x - std::floor(x); }

/// Triangle of `facet` containing `p` (lowest id on shared edges), or nullopt.
std::optional<std::int32_t> containing_triangle(const Scene& scene, std::int32_t facet, const Vec3& p) {
    if (facet == kGroundFacet) return kGroundTriangle;
    for (auto tri_id : scene.facets()[facet].triangles) {
        const Triangle& tri = scene.triangles()[tri_id];
        const Vec3 e0 = tri.v[1] - tri.v[0];
        const Vec3 e1 = tri.v[2] - tri.v[0];
        const Vec3 w = p - tri.v[0];
        const double d00 = dot(e0, e0), d01 = dot(e0, e1), d11 = dot(e1, e1);
        const double d20 = dot(w, e0), d21 = dot(w, e1);
        const double denom = d00 * d11 - d01 * d01;
        if (denom <= 0.0) continue;
        const double v = (d11 * d20 - d01 * d21) / denom;
        const double u = (d00 * d21 - d01 * d20) / denom;
        constexpr double tol = -1e-9;
        if (v >= tol && u >= tol && u + v <= 1.0 - tol) return static_cast<std::int32_t>(tri_id);
    }
    return std::nullopt;
}

bool reflective(const Scene& scene, std::int32_t facet) {
    return facet != kGroundFacet || (scene.has_ground() && scene.ground_material().has_value());
}

struct TapOrder {
    bool operator()(const PathTap& a, const PathTap& b) const {
        if (a.delay != b.delay) return a.delay < b.delay;
        return a.signature() < b.signature();
    }
};

void enumerate(const Scene& scene, const Vec3& tx, const Vec3& rx, int max_depth, double freq,
               std::vector<std::int32_t>& seq, const std::vector<std::int32_t>& candidates, std::vector<PathTap>& out) {
    if (!seq.empty()) {
        if (auto tap = solve_specular_path(scene, tx, rx, seq, freq)) out.push_back(std::move(*tap));
    }
    if (static_cast<int>(seq.size()) == max_depth) return;
    for (auto f : candidates) {
        if (!seq.empty() && seq.back() == f) continue;
        seq.push_back(f);
        enumerate(scene, tx, rx, max_depth, freq, seq, candidates, out);
        seq.pop_back();
    }
}

}  // namespace

Complex fresnel_reflection(const Material& material, double incidence_angle, Polarization pol, double freq) {
    if (!(incidence_angle >= 0.0 && incidence_angle < kPi / 2 + 1e-12))
        throw std::invalid_argument("fresnel_reflection: incidence angle must lie in [0, pi/2)");
    if (material.perfect_reflector) return {-1.0, 0.0};
    const double omega = 2.0 * kPi * freq;
    const Complex eps(material.rel_permittivity, -material.conductivity / (omega * kVacuumPermittivity));
    const double c = std::cos(incidence_angle);
    const double s = std::sin(incidence_angle);
    const Complex root = std::sqrt(eps - s * s);
    if (pol == Polarization::TE) return (c - root) / (c + root);
    return (eps * c - root) / (eps * c + root);
}

Complex path_amplitude(double total_length, std::span<const Complex> reflections, double freq) {
    if (!(total_length > 0.0)) throw std::invalid_argument("path_amplitude: total length must be > 0");
    const double lambda = kSpeedOfLight / freq;
    Complex gain(lambda / (4.0 * kPi * total_length), 0.0);
    for (const auto& g : reflections) gain *= g;
    const double phase = -2.0 * kPi * std::fmod(total_length / lambda, 1.0);
    return gain * Complex(std::cos(phase), std::sin(phase));
}

std::vector<std::int32_t> PathTap::signature() const {
    std::vector<std::int32_t> sig;
    sig.reserve(interactions.size());
    for (const auto& i : interactions) sig.push_back(i.triangle);
    return sig;
}

std::string PathTap::signature_string() const {
    if (interactions.empty()) return "LOS";
    std::string s;
    for (std::size_t i = 0; i < interactions.size(); ++i) {
        if (i) s += '-';
        s += interactions[i].triangle == kGroundTriangle ? std::string("G") : std::to_string(interactions[i].triangle);
    }
    return s;
}

long TraceConfig::effective_rays() const { return std::lround(static_cast<double>(ray_count) * fidelity); }

void TraceConfig::validate() const {
    if (max_depth < 0) throw std::invalid_argument("TraceConfig: max_depth must be >= 0");
    if (ray_count < 1) throw std::invalid_argument("TraceConfig: ray_count must be >= 1");
    if (!(fidelity > 0.0 && fidelity <= 1.0)) throw std::invalid_argument("TraceConfig: fidelity must be in (0, 1]");
    if (!(capture_radius_scale > 0.0)) throw std::invalid_argument("TraceConfig: capture_radius_scale must be > 0");
    if (!(carrier_freq > 0.0)) throw std::invalid_argument("TraceConfig: carrier_freq must be > 0");
    if (effective_rays() < 1) throw std::invalid_argument("TraceConfig: effective ray count rounds to zero");
}

Vec3 launch_direction(long i) {
    const double u = frac(0.5 + static_cast<double>(i) / kPlastic);
    const double v = frac(0.5 + static_cast<double>(i) / (kPlastic * kPlastic));
    const double z = 1.0 - 2.0 * u;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * kPi * v;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

bool los_clear(const Scene& scene, const Vec3& a, const Vec3& b) {
    if (a == b) throw std::invalid_argument("los_clear: endpoints must differ");
    return !scene.segment_blocked(a, b);
}

std::optional<PathTap> solve_specular_path(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                           std::span<const std::int32_t> facets, double freq) {
    const std::size_t k = facets.size();
    std::vector<Vec3> images(k + 1);
    images[0] = tx;
    for (std::size_t i = 0; i < k; ++i) {
        if (!reflective(scene, facets[i])) return std::nullopt;
        const auto [n, off] = scene.plane_of(facets[i]);
        if (std::abs(dot(n, images[i]) - off) < 1e-9) return std::nullopt;
        images[i + 1] = mirror(images[i], n, off);
    }
    // Back-trace reflection points from the receiver.
    std::vector<Vec3> points(k + 2);
    std::vector<std::int32_t> tris(k);
    points[0] = tx;
    points[k + 1] = rx;
    Vec3 target = rx;
    for (std::size_t i = k; i-- > 0;) {
        const auto [n, off] = scene.plane_of(facets[i]);
        const Vec3 d = target - images[i + 1];
        const double denom = dot(n, d);
        if (denom == 0.0) return std::nullopt;
        const double s = (off - dot(n, images[i + 1])) / denom;
        if (!(s > 1e-12 && s < 1.0 - 1e-12)) return std::nullopt;
        Vec3 p = images[i + 1] + d * s;
        auto tri = containing_triangle(scene, facets[i], p);
        if (!tri) return std::nullopt;
        if (facets[i] == kGroundFacet) p.z = scene.ground_z();
        points[i + 1] = p;
        tris[i] = *tri;
        target = p;
    }
    double length = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const double seg = distance(points[i], points[i + 1]);
        if (seg <= 2.0 * kRayEpsilon) return std::nullopt;
        length += seg;
    }
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        if (scene.segment_blocked(points[i], points[i + 1])) return std::nullopt;

    std::vector<Complex> gammas;
    gammas.reserve(k);
    PathTap tap;
    tap.interactions.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto [n, off] = scene.plane_of(facets[i]);
        const Vec3 incoming = normalized(points[i + 1] - points[i]);
        const double cos_theta = std::clamp(std::abs(dot(incoming, n)), 0.0, 1.0);
        double theta = std::acos(cos_theta);
        theta = std::min(theta, kPi / 2 - 1e-12);
        // TE on vertical surfaces, TM on horizontal ones.
        const Polarization pol = std::abs(n.z) < 0.5 ? Polarization::TE : Polarization::TM;
        gammas.push_back(fresnel_reflection(scene.material_of_facet(facets[i]), theta, pol, freq));
        tap.interactions.push_back({tris[i], points[i + 1]});
    }
    tap.amplitude = path_amplitude(length, gammas, freq);
    tap.delay = length / kSpeedOfLight;
    return tap;
}

std::vector<PathTap> trace_image(const Scene& scene, const Vec3& tx, const Vec3& rx, int max_depth, double freq) {
    if (max_depth < 0 || max_depth > 3) throw std::invalid_argument("trace_image: max_depth must be in [0, 3]");
    if (tx == rx) throw std::invalid_argument("trace_image: tx and rx must differ");
    std::vector<PathTap> out;
    if (los_clear(scene, tx, rx)) {
        const double d = distance(tx, rx);
        out.push_back({path_amplitude(d, {}, freq), d / kSpeedOfLight, {}});
    }
    std::vector<std::int32_t> candidates;
    if (reflective(scene, kGroundFacet)) candidates.push_back(kGroundFacet);
    for (std::size_t f = 0; f < scene.facets().size(); ++f)
        if (!scene.facets()[f].triangles.empty()) candidates.push_back(static_cast<std::int32_t>(f));
    std::vector<std::int32_t> seq;
    enumerate(scene, tx, rx, max_depth, freq, seq, candidates, out);
    std::sort(out.begin(), out.end(), TapOrder{});
    return out;
}

std::vector<std::vector<PathTap>> trace_sbr(const Scene& scene, const Vec3& tx, std::span<const Vec3> receivers,
                                            const TraceConfig& config) {
    config.validate();
    const std::size_t n_rx = receivers.size();
    std::vector<std::vector<PathTap>> result(n_rx);
    const double freq = config.carrier_freq;

    // Analytic dominant taps.
    const bool ground_bounce = config.max_depth >= 1 && reflective(scene, kGroundFacet);
    const std::int32_t ground_seq[] = {kGroundFacet};
    for (std::size_t r = 0; r < n_rx; ++r) {
        if (receivers[r] == tx) continue;
        if (los_clear(scene, tx, receivers[r])) {
            const double d = distance(tx, receivers[r]);
            result[r].push_back({path_amplitude(d, {}, freq), d / kSpeedOfLight, {}});
        }
        if (ground_bounce) {
            if (auto tap = solve_specular_path(scene, tx, receivers[r], ground_seq, freq)) result[r].push_back(*tap);
        }
    }
    if (config.max_depth == 0 || n_rx == 0) {
        for (auto& taps : result) std::sort(taps.begin(), taps.end(), TapOrder{});
        return result;
    }

    // Launch rays; collect (facet sequence, receiver) candidates from capture spheres.
    using Candidate = std::pair<std::vector<std::int32_t>, std::uint32_t>;
    const long n_rays = config.effective_rays();
    const double capture_k = std::sqrt(4.0 * kPi / static_cast<double>(n_rays)) * config.capture_radius_scale;
    const int workers = std::max(1, config.threads);
    const long chunk = std::max<long>(1, (n_rays + workers * 4 - 1) / (workers * 4));
    const std::size_t n_chunks = static_cast<std::size_t>((n_rays + chunk - 1) / chunk);
    std::vector<std::set<Candidate>> found(n_chunks);
    parallel_for(n_chunks, workers, [&](std::size_t c) {
        auto& local = found[c];
        std::vector<std::int32_t> seq;
        const long end = std::min(n_rays, static_cast<long>(c + 1) * chunk);
        for (long ray = static_cast<long>(c) * chunk; ray < end; ++ray) {
            Vec3 origin = tx;
            Vec3 dir = launch_direction(ray);
            double unfolded = 0.0;
            seq.clear();
            for (int bounce = 0; bounce <= config.max_depth; ++bounce) {
                const auto hit = scene.intersect(origin, dir, std::numeric_limits<double>::infinity());
                const double seg = hit ? hit->t : std::numeric_limits<double>::infinity();
                if (bounce > 0 && !(seq.size() == 1 && seq[0] == kGroundFacet)) {
                    for (std::size_t r = 0; r < n_rx; ++r) {
                        const Vec3 w = receivers[r] - origin;
                        const double t = std::clamp(dot(w, dir), 0.0, seg);
                        const Vec3 off = w - dir * t;
                        const double radius = (unfolded + t) * capture_k;
                        if (dot(off, off) <= radius * radius) local.emplace(seq, static_cast<std::uint32_t>(r));
                    }
                }
                if (!hit || bounce == config.max_depth) break;
                const std::int32_t facet = scene.facet_of(hit->triangle);
                if (!reflective(scene, facet)) break;
                seq.push_back(facet);
                unfolded += hit->t;
                origin = hit->point;
                dir = normalized(reflect(dir, hit->normal));
            }
        }
    });
    std::set<Candidate> merged;
    for (auto& s : found) merged.insert(s.begin(), s.end());

    // Geometric correction: replace each candidate by its exact specular path.
    std::vector<Candidate> ordered(merged.begin(), merged.end());
    std::vector<std::optional<PathTap>> solved(ordered.size());
    parallel_for(ordered.size(), workers, [&](std::size_t i) {
        const auto& [seq, r] = ordered[i];
        if (receivers[r] == tx) return;
        solved[i] = solve_specular_path(scene, tx, receivers[r], seq, freq);
    });
    std::vector<std::set<std::vector<std::int32_t>>> seen(n_rx);
    for (std::size_t r = 0; r < n_rx; ++r)
        for (const auto& tap : result[r]) seen[r].insert(tap.signature());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (!solved[i]) continue;
        const auto r = ordered[i].second;
        if (seen[r].insert(solved[i]->signature()).second) result[r].push_back(std::move(*solved[i]));
    }
    for (auto& taps : result) std::sort(taps.begin(), taps.end(), TapOrder{});
    return result;
}

}  // namespace titan
