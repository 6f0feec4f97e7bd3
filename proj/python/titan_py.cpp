#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "titan/harness.hpp"
#include "titan/version.hpp"

namespace py = pybind11;
using namespace titan;

namespace {

Vec3 vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
std::array<double, 3> arr(const Vec3& v) { return {v.x, v.y, v.z}; }

ScenarioConfig config_from(const std::string& json_text) {
    return scenario_from_json(nlohmann::json::parse(json_text));
}

py::dict tap_dict(const PathTap& t) {
    py::dict d;
    d["amplitude"] = t.amplitude;
    d["delay"] = t.delay;
    d["depth"] = t.depth();
    d["signature"] = t.signature_string();
    return d;
}

py::dict kpi_dict(const Kpis& k) {
    py::dict d;
    d["sum_rate"] = k.sum_rate;
    d["coverage"] = k.coverage;
    d["fairness_counts"] = k.fairness_counts;
    d["fairness_rates"] = k.fairness_rates;
    d["objective"] = k.objective;
    d["covered"] = k.covered_set;
    d["per_uav_load"] = k.per_uav_load;
    return d;
}

}  // namespace

PYBIND11_MODULE(_titan, m) {
    m.doc() = "UAV placement over a ray-traced urban channel";
    m.attr("__version__") = kVersion;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<TleError>(m, "TleError", PyExc_ValueError);

    py::class_<Scene>(m, "Scene")
        .def_property_readonly("triangle_count", [](const Scene& s) { return s.triangles().size(); })
        .def_property_readonly("bounds", [](const Scene& s) {
            return py::make_tuple(arr(s.bounds().lo), arr(s.bounds().hi));
        })
        .def("is_outdoor", [](const Scene& s, double x, double y) { return s.is_outdoor({x, y}); })
        .def("los_clear", [](const Scene& s, std::array<double, 3> a, std::array<double, 3> b) {
            return los_clear(s, vec(a), vec(b));
        });

    m.def(
        "manhattan",
        [](int bx, int by, double block_w, double street_w, std::uint64_t seed) {
            ManhattanParams p;
            p.blocks_x = bx;
            p.blocks_y = by;
            p.block_w = block_w;
            p.street_w = street_w;
            p.seed = seed;
            return generate_manhattan(p);
        },
        py::arg("blocks_x") = 4, py::arg("blocks_y") = 4, py::arg("block_w") = 40.0, py::arg("street_w") = 20.0,
        py::arg("seed") = 1);
    m.def(
        "load_scene",
        [](const std::string& obj, const std::string& materials, bool strict) {
            return load_scene(obj, materials, strict);
        },
        py::arg("obj"), py::arg("materials"), py::arg("strict") = false);

    m.def(
        "trace",
        [](const Scene& s, std::array<double, 3> tx, std::array<double, 3> rx, int depth, long rays,
           const std::string& method, double freq) {
            std::vector<PathTap> taps;
            if (method == "image") {
                taps = trace_image(s, vec(tx), vec(rx), depth, freq);
            } else if (method == "sbr") {
                TraceConfig c;
                c.max_depth = depth;
                c.ray_count = rays;
                c.carrier_freq = freq;
                const Vec3 r = vec(rx);
                taps = trace_sbr(s, vec(tx), std::span<const Vec3>(&r, 1), c)[0];
            } else {
                throw py::value_error("method must be sbr or image");
            }
            py::list out;
            for (const auto& t : taps) out.append(tap_dict(t));
            return out;
        },
        py::arg("scene"), py::arg("tx"), py::arg("rx"), py::arg("depth") = 3, py::arg("rays") = 200000,
        py::arg("method") = "sbr", py::arg("freq") = 2e9);

    m.def(
        "evaluate",
        [](const Scene& s, const std::vector<std::array<double, 3>>& uavs,
           const std::vector<std::array<double, 3>>& ues, long rays, int depth) {
            EvaluationSetup setup;
            setup.trace.ray_count = rays;
            setup.trace.max_depth = depth;
            std::vector<Vec3> u, p;
            for (const auto& x : ues) u.push_back(vec(x));
            for (const auto& x : uavs) p.push_back(vec(x));
            return kpi_dict(evaluate_topology(s, {p, {}}, u, {}, setup));
        },
        py::arg("scene"), py::arg("uavs"), py::arg("ues"), py::arg("rays") = 200000, py::arg("depth") = 3);

    m.def("jain_counts", [](const std::vector<int>& n) { return jain_counts(n); });
    m.def("jain_rates", [](const std::vector<double>& r) { return jain_rates(r); });
    m.def("shannon_capacity", &shannon_capacity, py::arg("sinr"), py::arg("bandwidth"));

    m.def(
        "tpe_minimize",
        [](const std::function<double(const std::vector<double>&)>& f,
           const std::vector<std::pair<double, double>>& bounds, int budget, std::uint64_t seed) {
            SearchSpace space;
            for (std::size_t i = 0; i < bounds.size(); ++i)
                space.dims.push_back({"x" + std::to_string(i), bounds[i].first, bounds[i].second});
            TpeConfig cfg;
            cfg.seed = seed;
            const BlackBox neg = [&](const std::vector<double>& x) -> std::optional<double> { return -f(x); };
            const auto r = optimize(neg, space, budget, cfg);
            return py::make_tuple(r.best_params, -r.best_value);
        },
        py::arg("f"), py::arg("bounds"), py::arg("budget"), py::arg("seed") = 0);

    m.def("parse_tle_text", [](const std::string& text) {
        py::list out;
        for (const auto& r : parse_tle_file(text)) {
            const auto [l1, l2] = render_tle(r);
            py::dict d;
            d["name"] = r.name;
            d["catalog_number"] = r.catalog_number;
            d["inclination"] = r.inclination;
            d["eccentricity"] = r.eccentricity;
            d["mean_motion"] = r.mean_motion;
            d["epoch_jd"] = r.epoch_jd();
            d["lines"] = py::make_tuple(l1, l2);
            out.append(d);
        }
        return out;
    });
    m.def(
        "visibility",
        [](const std::string& tle_text, double lat, double lon, double window, double step,
           const std::vector<double>& thresholds) {
            const auto tles = parse_tle_file(tle_text);
            if (tles.empty()) throw py::value_error("no element sets");
            const auto s = visibility_series(tles, {lat, lon, 0.0}, tles[0].epoch_jd(), window, step, thresholds);
            py::dict d;
            d["times"] = s.times;
            d["counts"] = s.counts;
            d["thresholds"] = s.thresholds;
            return d;
        },
        py::arg("tle_text"), py::arg("lat") = 37.77, py::arg("lon") = -122.42, py::arg("window") = 86400.0,
        py::arg("step") = 60.0, py::arg("thresholds") = std::vector<double>{60, 70, 80});

    m.def("config_json", [](const std::string& path) { return scenario_to_json(load_scenario_config(path)).dump(); });
    m.def("config_hash", [](const std::string& json_text) { return config_hash(config_from(json_text)); });
    m.def(
        "optimize_json",
        [](const std::string& json_text) {
            const ScenarioConfig c = config_from(json_text);
            OptimizeOutput o;
            {
                py::gil_scoped_release release;
                o = run_optimize(c);
            }
            py::dict d = kpi_dict(o.final.kpis);
            std::vector<std::array<double, 3>> pos;
            for (const auto& p : o.placement.topology.uav_positions) pos.push_back(arr(p));
            d["uav_positions"] = pos;
            d["target_unmet"] = o.placement.target_unmet;
            return d;
        },
        py::arg("config_json"));
    m.def(
        "run_scenarios_json",
        [](const std::string& json_text, const std::string& out_dir, const std::string& format) {
            const ScenarioConfig c = config_from(json_text);
            std::vector<std::string> files;
            {
                py::gil_scoped_release release;
                files = write_outputs(run_scenarios(c), c, out_dir, format);
            }
            return files;
        },
        py::arg("config_json"), py::arg("out_dir"), py::arg("format") = "csv");
}
