// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <filesystem>
#include <memory>
#include <random>
#include <vector>

#include "cislunar/architecture.hpp"
#include "cislunar/orbits.hpp"

namespace {

using namespace cislunar;

// One bundled L2 halo orbit carrying ten satellites over a 30-day hourly grid.
struct CoverageFixture {
    OrbitLibrary lib;
    std::unique_ptr<CostEvaluator> eval;
    std::vector<std::vector<Vec3>> satellites;

    CoverageFixture() {
        const SystemConstants c;
        const auto dir = std::filesystem::path(CISLUNAR_SOURCE_DIR) / "data" / "seeds.csv";
        for (const auto& s : read_seed_file(dir)) {
            if (s.family != "l2_halo_north") continue;
            lib.orbits.push_back(correct_periodic(s.state(), c, s.period_guess, s.family));
            break;
        }
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1.2, 1.2);
        std::vector<Vec3> targets(100);
        for (auto& t : targets) t = Vec3(u(rng), u(rng), 0.2 * u(rng));
        CostSettings s;
        s.grid.horizon_days = 30.0;
        eval = std::make_unique<CostEvaluator>(lib, targets, s, c);
        satellites = eval->satellite_positions(0, 10);
    }

    CoverageInputs inputs() const {
        CoverageInputs in;
        in.satellites = &satellites;
        in.targets = &eval->targets();
        in.sun = &eval->sun_positions();
        in.policy = eval->settings().policy;
        in.sphere = eval->settings().sphere;
        in.radiometry = eval->settings().radiometry;
        in.constants = eval->constants();
        return in;
    }
};

const CoverageFixture& coverage_fixture() {
    static const CoverageFixture f;
    return f;
}

void BM_CoverageSerial(benchmark::State& st) {
    const auto in = coverage_fixture().inputs();
    for (auto _ : st) benchmark::DoNotOptimize(coverage_serial(in));
}

void BM_CoverageParallel(benchmark::State& st) {
    const auto in = coverage_fixture().inputs();
    for (auto _ : st) benchmark::DoNotOptimize(coverage_parallel(in));
}

std::vector<Vec3> cloud(std::size_t n) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<Vec3> p(n);
    for (auto& v : p) v = Vec3(g(rng), g(rng), g(rng));
    return p;
}

void BM_KMeans(benchmark::State& st, Exec exec) {
    const auto points = cloud(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(kmeans(points, 100, 7, 50, 1e-10, exec));
}

} // namespace

BENCHMARK(BM_CoverageSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoverageParallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_KMeans, serial, cislunar::Exec::serial)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_KMeans, parallel, cislunar::Exec::parallel)->Arg(5000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
