#include "support.hpp"

#include <Eigen/QR>
#include <map>
#include <mutex>

#include "cislunar/errors.hpp"

namespace testing {

using namespace cislunar;

PeriodicOrbit seed_orbit(const std::string& family, const SystemConstants& c) {
    for (const auto& s : read_seed_file(source_dir() / "data" / "seeds.csv"))
        if (s.family == family) return correct_periodic(s.state(), c, s.period_guess, family);
    throw Error("no bundled seed for " + family);
}

const OrbitLibrary& small_library() {
    static OrbitLibrary lib;
    static std::once_flag once;
    std::call_once(once, [] {
        const std::map<std::string, std::pair<double, int>> plan{
            {"l1_halo_north", {0.001, 4}}, {"l2_halo_north", {-0.005, 4}},
            {"l2_halo_south", {-0.005, 3}}, {"dro", {-0.01, 3}},
            {"l1_lyapunov", {-0.01, 3}},    {"res31", {0.01, 2}}};
        std::vector<SeedPlan> seeds;
        for (const auto& s : read_seed_file(source_dir() / "data" / "seeds.csv")) {
            const auto it = plan.find(s.family);
            if (it != plan.end()) seeds.push_back({s, it->second.first, it->second.second});
        }
        lib = build_library(seeds, SystemConstants{}).library;
    });
    return lib;
}

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double lo, double hi) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    Eigen::VectorXd ev(n);
    for (int i = 0; i < n; ++i) ev(i) = u(rng);
    const Eigen::MatrixXd m = q * ev.asDiagonal() * q.transpose();
    return 0.5 * (m + m.transpose());
}

} // namespace testing
