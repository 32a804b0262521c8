#pragma once

#include <filesystem>
#include <random>

#include "cislunar/orbits.hpp"

namespace testing {

inline std::filesystem::path source_dir() { return CISLUNAR_SOURCE_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("cislunar_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// First bundled seed of `family`, corrected.
cislunar::PeriodicOrbit seed_orbit(const std::string& family,
                                   const cislunar::SystemConstants& c = {});

/// Corrected seeds plus continuation for a handful of families; cached.
const cislunar::OrbitLibrary& small_library();

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double lo = 0.5, double hi = 2.0);

} // namespace testing
