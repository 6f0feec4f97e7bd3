#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "titan/tpe.hpp"

using namespace titan;

namespace {

const SearchSpace kUnit{{{"x", 0.0, 1.0}}};

std::vector<TrialRecord> clustered_history() {
    // Good values near 0.3, bad values near 0.8.
    std::vector<TrialRecord> h;
    const double good[] = {0.28, 0.3, 0.32, 0.31};
    const double bad[] = {0.75, 0.78, 0.8, 0.82, 0.85, 0.79, 0.81, 0.77, 0.83, 0.76, 0.84, 0.8};
    int i = 0;
    for (double x : good) h.push_back({i++, {x}, 1.0, false});
    for (double x : bad) h.push_back({i++, {x}, -1.0, false});
    return h;
}

}  // namespace

TEST_CASE("search space validation") {
    CHECK_THROWS(SearchSpace{}.validate());
    CHECK_THROWS(SearchSpace{{{"x", 1.0, 1.0}}}.validate());
    CHECK(kUnit.contains(std::vector<double>{0.5}));
    CHECK_FALSE(kUnit.contains(std::vector<double>{1.5}));
    TpeConfig c;
    c.gamma = 0.0;
    CHECK_THROWS(c.validate());
}

TEST_CASE("startup and degenerate histories sample uniformly") {
    TpeConfig cfg;
    Rng a(9), b(9);
    const auto x = suggest({}, kUnit, cfg, a);
    REQUIRE(x.size() == 1);
    CHECK(x[0] == b.uniform(0.0, 1.0));

    std::vector<TrialRecord> flat;
    for (int i = 0; i < 20; ++i) flat.push_back({i, {i / 20.0}, 3.0, false});
    Rng c(4), d(4);
    CHECK(suggest(flat, kUnit, cfg, c)[0] == d.uniform(0.0, 1.0));
}

TEST_CASE("density ratio prefers the good cluster") {
    const auto h = clustered_history();
    TpeConfig cfg;
    int nearer = 0;
    for (int s = 0; s < 100; ++s) {
        Rng rng(split_seed(55, s));
        const double x = suggest(h, kUnit, cfg, rng)[0];
        nearer += std::abs(x - 0.3) < std::abs(x - 0.8);
    }
    CHECK(nearer >= 95);
}

TEST_CASE("suggestions stay inside bounds") {
    const SearchSpace box{{{"a", -3.0, -1.0}, {"b", 10.0, 10.5}}};
    TpeConfig cfg;
    cfg.n_startup = 3;
    const BlackBox f = [](const std::vector<double>& x) -> std::optional<double> { return x[0] - x[1]; };
    const auto r = optimize(f, box, 60, cfg);
    for (const auto& t : r.history) CHECK(box.contains(t.params));
}

TEST_CASE("Parzen estimator integrates to one over the bounds") {
    const std::vector<double> obs{0.1, 0.15, 0.6, 0.9};
    ParzenEstimator p(obs, 0.0, 1.0);
    double integral = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) integral += p.pdf((i + 0.5) / n) / n;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double x = p.sample(rng);
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
}

TEST_CASE("optimize on a 1-D parabola") {
    const BlackBox f = [](const std::vector<double>& x) -> std::optional<double> {
        return -(x[0] - 0.3) * (x[0] - 0.3);
    };
    TpeConfig cfg;
    cfg.seed = 21;
    const auto r = optimize(f, kUnit, 150, cfg);
    REQUIRE(r.has_best);
    CHECK(std::abs(r.best_params[0] - 0.3) < 0.05);
    CHECK(r.history.size() == 150);

    const auto one = optimize(f, kUnit, 1, cfg);
    CHECK(one.best_params == one.history[0].params);
    CHECK_THROWS(optimize(f, kUnit, 0, cfg));
}

TEST_CASE("2-D sphere beats random search") {
    const SearchSpace sq{{{"x", 0.0, 1.0}, {"y", 0.0, 1.0}}};
    const BlackBox f = [](const std::vector<double>& x) -> std::optional<double> {
        return -((x[0] - 0.7) * (x[0] - 0.7) + (x[1] - 0.2) * (x[1] - 0.2));
    };
    std::vector<double> tpe, rnd;
    for (int s = 0; s < 20; ++s) {
        TpeConfig cfg;
        cfg.seed = split_seed(3, s);
        tpe.push_back(optimize(f, sq, 150, cfg).best_value);
        Rng rng(cfg.seed);
        double best = -1e9;
        for (int i = 0; i < 150; ++i) best = std::max(best, *f({rng.uniform(), rng.uniform()}));
        rnd.push_back(best);
    }
    std::sort(tpe.begin(), tpe.end());
    std::sort(rnd.begin(), rnd.end());
    CHECK(tpe[9] + tpe[10] > rnd[9] + rnd[10]);
}

TEST_CASE("failed trials are recorded and skipped") {
    int calls = 0;
    const BlackBox f = [&](const std::vector<double>& x) -> std::optional<double> {
        ++calls;
        if (calls % 3 == 0) throw std::runtime_error("boom");
        if (calls % 3 == 1) return std::nullopt;
        return x[0];
    };
    TpeConfig cfg;
    const auto r = optimize(f, kUnit, 30, cfg);
    int failed = 0;
    for (const auto& t : r.history) failed += t.failed;
    CHECK(failed == 20);
    CHECK(r.has_best);

    const BlackBox nan = [](const std::vector<double>&) -> std::optional<double> { return std::nan(""); };
    CHECK_FALSE(optimize(nan, kUnit, 5, cfg).has_best);
}

TEST_CASE("same seed, same history") {
    const BlackBox f = [](const std::vector<double>& x) -> std::optional<double> { return std::sin(7 * x[0]); };
    TpeConfig cfg;
    cfg.seed = 8;
    const auto a = optimize(f, kUnit, 40, cfg);
    const auto b = optimize(f, kUnit, 40, cfg);
    CHECK(history_to_json(a.history, kUnit) == history_to_json(b.history, kUnit));
}
