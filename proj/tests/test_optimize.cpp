#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cislunar/csv.hpp"
#include "cislunar/errors.hpp"
#include "cislunar/optimize.hpp"
#include "support.hpp"

using namespace cislunar;

namespace {

DesignSpace categorical_space(int dims, int choices) {
    DesignSpace s;
    for (int i = 0; i < dims; ++i) s.dims.push_back(Dimension::categorical(choices, "c" + std::to_string(i)));
    return s;
}

/// Each dimension has one right answer worth 1; the rest are graded below it.
double separable_reward(const Point& p) {
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const int target = static_cast<int>((3 * i + 1) % 10);
        r += p[i] == target ? 1.0 : 0.1 * std::abs(std::sin(p[i] + i));
    }
    return r;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

TEST_SUITE("optimize") {

TEST_CASE("random suggestions") {
    SUBCASE("single-choice dimension") {
        const auto s = categorical_space(1, 1);
        Rng rng(1);
        for (int i = 0; i < 20; ++i) CHECK(random_suggest(s, rng)[0] == 0.0);
    }
    SUBCASE("categories are uniform within three binomial sigmas") {
        const auto s = categorical_space(1, 5);
        Rng rng(7);
        std::vector<int> counts(5, 0);
        const int n = 10000;
        for (int i = 0; i < n; ++i) ++counts[static_cast<int>(random_suggest(s, rng)[0])];
        const double p = 0.2, sd = std::sqrt(n * p * (1 - p));
        for (int k : counts) CHECK(std::abs(k - n * p) <= 3 * sd);
    }
    SUBCASE("fixed seed gives a fixed sequence and points stay in bounds") {
        DesignSpace s = categorical_space(2, 4);
        s.dims.push_back(Dimension::integer(1, 10));
        s.dims.push_back(Dimension::continuous(-1.0, 2.0));
        Rng a(99), b(99);
        for (int i = 0; i < 50; ++i) {
            const auto pa = random_suggest(s, a);
            CHECK(pa == random_suggest(s, b));
            CHECK(s.contains(pa));
        }
    }
}

TEST_CASE("TPE suggestions") {
    const auto space = categorical_space(1, 6);
    OptimizerConfig cfg;
    SUBCASE("empty history behaves like random search") {
        Rng a(5), b(5);
        for (int i = 0; i < 10; ++i) CHECK(tpe_suggest(space, {}, cfg, a) == random_suggest(space, b));
    }
    SUBCASE("a category that is always best dominates the density ratio") {
        std::vector<Trial> history;
        for (int rep = 0; rep < 10; ++rep)
            for (int k = 0; k < 6; ++k) history.push_back({{double(k)}, k == 4 ? 10.0 : 0.0, true});
        int hits = 0;
        for (int seed = 0; seed < 100; ++seed) {
            Rng rng(seed);
            if (tpe_suggest(space, history, cfg, rng)[0] == 4.0) ++hits;
        }
        CHECK(hits >= 95);
    }
    SUBCASE("suggestions stay inside mixed spaces") {
        DesignSpace mixed = categorical_space(2, 3);
        mixed.dims.push_back(Dimension::integer(1, 10));
        mixed.dims.push_back(Dimension::continuous(0.0, 1.0));
        const auto r = optimize(mixed, [](const Point& p) { return p[2] - std::abs(p[3] - 0.3); },
                                OptimizerConfig{80, 0, 0.25, 24, 20, 3}, Algorithm::tpe);
        for (const auto& t : r.history) CHECK(mixed.contains(t.point));
    }
}

TEST_CASE("TPE beats random search on the separable categorical benchmark") {
    const auto space = categorical_space(8, 10);
    std::vector<double> tpe, rnd;
    for (int seed = 0; seed < 20; ++seed) {
        OptimizerConfig cfg{200, 0, 0.25, 24, 20, static_cast<std::uint64_t>(seed)};
        tpe.push_back(optimize(space, separable_reward, cfg, Algorithm::tpe).best.reward);
        rnd.push_back(optimize(space, separable_reward, cfg, Algorithm::random).best.reward);
    }
    CHECK(median(tpe) >= median(rnd));
}

TEST_CASE("optimize loop contracts") {
    const auto space = categorical_space(3, 4);
    SUBCASE("constant objective stops after patience past warmup") {
        OptimizerConfig cfg{1000, 15, 0.25, 24, 20, 1};
        const auto r = optimize(space, [](const Point&) { return 1.0; }, cfg, Algorithm::tpe);
        CHECK(r.history.size() == 15 + 20);
        CHECK(r.early_stopped);
        CHECK(r.best.reward == 1.0);
    }
    SUBCASE("one evaluation") {
        int calls = 0;
        const auto r = optimize(space, [&](const Point&) { return double(++calls); },
                                OptimizerConfig{1, 5, 0.25, 24, 20, 0}, Algorithm::tpe);
        CHECK(calls == 1);
        CHECK(r.history.size() == 1);
        CHECK(r.best_index == 0);
    }
    SUBCASE("identical seeds give identical histories") {
        OptimizerConfig cfg{60, 0, 0.25, 24, 20, 42};
        const auto a = optimize(space, separable_reward, cfg, Algorithm::tpe);
        const auto b = optimize(space, separable_reward, cfg, Algorithm::tpe);
        REQUIRE(a.history.size() == b.history.size());
        for (std::size_t i = 0; i < a.history.size(); ++i) {
            CHECK(a.history[i].point == b.history[i].point);
            CHECK(a.history[i].reward == b.history[i].reward);
        }
    }
    SUBCASE("failing objectives are recorded and the loop continues") {
        int calls = 0;
        const auto r = optimize(space,
                                [&](const Point& p) {
                                    if (++calls % 3 == 0) throw std::runtime_error("boom");
                                    return p[0];
                                },
                                OptimizerConfig{30, 0, 0.25, 24, 20, 0}, Algorithm::tpe);
        CHECK(r.history.size() == 30);
        int failed = 0;
        for (const auto& t : r.history)
            if (!t.ok) {
                ++failed;
                CHECK(std::isnan(t.reward));
            }
        CHECK(failed == 10);
        CHECK(r.best.ok);
    }
    SUBCASE("best-so-far reward never decreases") {
        const auto r = optimize(space, separable_reward, OptimizerConfig{80, 0, 0.25, 24, 20, 9}, Algorithm::tpe);
        double best = -1e300;
        for (int i = 0; i <= r.best_index; ++i)
            if (r.history[i].ok) best = std::max(best, r.history[i].reward);
        CHECK(best == r.best.reward);
    }
}

TEST_CASE("history CSV") {
    const auto space = categorical_space(2, 3);
    const auto r = optimize(space, [](const Point& p) { return p[0] + p[1]; },
                            OptimizerConfig{10, 0, 0.25, 24, 20, 0}, Algorithm::random);
    const auto dir = testing::scratch_dir("history");
    write_history_csv(space, r.history, dir / "h.csv");
    const auto t = csv::read(dir / "h.csv", true);
    CHECK(t.header == std::vector<std::string>{"trial", "reward", "c0", "c1"});
    REQUIRE(t.rows.size() == 10);
    CHECK(csv::parse_double(t.rows[3][1]) == r.history[3].reward);
}

TEST_CASE("configuration validation and parsing") {
    CHECK_THROWS_AS((OptimizerConfig{0, 0, 0.25, 24, 20, 0}.validate()), ConfigError);
    CHECK_THROWS_AS((OptimizerConfig{10, 0, 1.5, 24, 20, 0}.validate()), ConfigError);
    CHECK(parse_algorithm("tpe") == Algorithm::tpe);
    CHECK(parse_algorithm("random") == Algorithm::random);
    CHECK_THROWS_AS(parse_algorithm("atpe"), ConfigError);
}

} // TEST_SUITE
