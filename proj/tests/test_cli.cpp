#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cislunar/csv.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(CISLUNAR_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Small pipeline shared by the CLI cases: library, then task 1.
struct Pipeline {
    fs::path dir = testing::scratch_dir("cli");
    fs::path config = dir / "cfg.yaml";

    Pipeline() {
        std::ofstream f(config);
        f << "library:\n  seed_file: \"" << (testing::source_dir() / "data" / "seeds.csv").string() << "\"\n"
          << "  families:\n"
          << "    l1_halo_north: {dx: 0.001, count: 3}\n    l1_halo_south: {dx: 0.001, count: 3}\n"
          << "    l2_halo_north: {dx: -0.005, count: 3}\n    l2_halo_south: {dx: -0.005, count: 3}\n"
          << "    dro: {dx: -0.01, count: 3}\n    res31: {dx: 0.01, count: 2}\n"
          << "  default_count: 1\n"
          << "task1:\n  library: \"" << (dir / "lib" / "library.csv").string() << "\"\n"
          << "  max_library_orbits: 12\n  n_targets: 20\n  horizon_days: 1\n  step_hours: 2\n"
          << "  jacobi: {min: 3.0, max: 3.2, count: 4}\n"
          << "  optimizer: {max_evals: 30, early_stop_patience: 0}\n"
          << "task2:\n  architecture: \"" << (dir / "t1").string() << "\"\n"
          << "  max_observers: 3\n  horizon_days: 0.125\n"
          << "  optimizer: {max_evals: 20, early_stop_patience: 0}\n";
    }
};

Pipeline& pipeline() {
    static Pipeline p;
    static const bool ready = [] {
        const int a = run("library -c " + p.config.string() + " -o " + (p.dir / "lib").string());
        const int b = run("task1 -c " + p.config.string() + " --algo random --algo tpe -o " + (p.dir / "t1").string());
        return a == 0 && b == 0;
    }();
    REQUIRE(ready);
    return p;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("library output is reproducible and counts what was achieved") {
    auto& p = pipeline();
    REQUIRE(run("library -c " + p.config.string() + " -o " + (p.dir / "lib2").string()) == 0);
    CHECK(slurp(p.dir / "lib" / "library.csv") == slurp(p.dir / "lib2" / "library.csv"));
    const auto t = cislunar::csv::read(p.dir / "lib" / "library.csv", true);
    std::size_t achieved = 0;
    std::istringstream log(slurp(p.dir / "lib" / "library_log.txt"));
    for (std::string line; std::getline(log, line);) {
        const auto colon = line.find(": ");
        const auto slash = line.find('/');
        if (slash != std::string::npos && line.find("failed") == std::string::npos)
            achieved += std::stoul(line.substr(colon + 2, slash - colon - 2));
    }
    CHECK(t.rows.size() == achieved);
    CHECK(fs::exists(p.dir / "lib" / "manifest.json"));
}

TEST_CASE("empty seed file gives an empty library") {
    auto& p = pipeline();
    { std::ofstream(p.dir / "empty.csv") << "# nothing\n"; }
    REQUIRE(run("library --seeds " + (p.dir / "empty.csv").string() + " -o " + (p.dir / "lib_empty").string()) == 0);
    CHECK(cislunar::csv::read(p.dir / "lib_empty" / "library.csv", true).rows.empty());
}

TEST_CASE("task 1 writes one history per algorithm and a consistent summary") {
    auto& p = pipeline();
    const auto summary = cislunar::csv::read(p.dir / "t1" / "summary.csv", true);
    REQUIRE(summary.rows.size() == 2);
    for (const auto& row : summary.rows) {
        const auto hist = cislunar::csv::read(p.dir / "t1" / ("history_" + row[0] + ".csv"), true);
        double best = -1e300;
        for (const auto& h : hist.rows) {
            const double v = cislunar::csv::parse_double(h[1]);
            if (v == v) best = std::max(best, v);
        }
        CHECK(cislunar::csv::parse_double(row[1]) == best);
    }
    const auto manifest = nlohmann::json::parse(slurp(p.dir / "t1" / "manifest.json"));
    CHECK(manifest["command"] == "task1");
    CHECK(manifest.contains("config"));
    CHECK(manifest["seeds"].contains("optimizer"));
}

TEST_CASE("task 2 produces metrics per target, sweeps, and repeats exactly") {
    auto& p = pipeline();
    REQUIRE(run("task2 -c " + p.config.string() + " --nt 3 -o " + (p.dir / "t2a").string()) == 0);
    REQUIRE(run("task2 -c " + p.config.string() + " --nt 3 -o " + (p.dir / "t2b").string()) == 0);
    const auto m = nlohmann::json::parse(slurp(p.dir / "t2a" / "metrics.json"));
    CHECK(m["targets"].size() == 3);
    CHECK(slurp(p.dir / "t2a" / "metrics.json") == slurp(p.dir / "t2b" / "metrics.json"));
    CHECK(fs::exists(p.dir / "t2a" / "traces" / "target_2.csv"));

    REQUIRE(run("task2 -c " + p.config.string() + " --nt 3 --tst 30m,1h,2h -o " + (p.dir / "sweep").string()) == 0);
    for (const char* sub : {"tst_30m", "tst_1h", "tst_2h"}) CHECK(fs::exists(p.dir / "sweep" / sub / "metrics.json"));
    REQUIRE(run("report " + (p.dir / "sweep").string()) == 0);
    CHECK(fs::exists(p.dir / "sweep" / "coverage.csv"));
}

TEST_CASE("configuration errors exit with status 1") {
    auto& p = pipeline();
    { std::ofstream(p.dir / "bad.yaml") << "system:\n  bogus: 1\n"; }
    CHECK(run("task1 -c " + (p.dir / "bad.yaml").string()) == 1);
    CHECK(run("task2 -c " + p.config.string() + " --tst 7q") == 1);
    CHECK(run("task2 -c " + p.config.string() + " --nt 2") == 1);
    CHECK(run("nonsense") == 1);
    CHECK(run("report " + (p.dir / "nowhere").string()) == 1);
}

} // TEST_SUITE
