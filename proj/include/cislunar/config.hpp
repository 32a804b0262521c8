#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cislunar/architecture.hpp"
#include "cislunar/cr3bp.hpp"
#include "cislunar/optimize.hpp"
#include "cislunar/photometry.hpp"
#include "cislunar/tasking.hpp"

namespace cislunar {

struct FamilyContinuation {
    double dx = 0.005;
    int count = 10;
};

struct LibraryConfig {
    std::string seed_file = "data/seeds.csv";
    FamilyContinuation defaults;
    std::map<std::string, FamilyContinuation> families;
    double corrector_tol = 1e-10;
    double integration_tol = 1e-12;

    FamilyContinuation for_family(const std::string& name) const;
};

struct Task1Config {
    std::string library = "library.csv";
    /// 0 keeps every library orbit; otherwise an evenly strided subset.
    int max_library_orbits = 0;
    double jc_min = 2.91;
    double jc_max = 5.49;
    int jc_count = 64;
    int rays_azimuth = 12;
    int rays_polar = 6;
    int n_targets = 100;
    std::uint64_t kmeans_seed = 7;
    double horizon_days = 30.0;
    double step_hours = 1.0;
    double sphere_radius_m = 1.0;
    double sphere_diffuse = 0.3;
    OptimizerConfig optimizer;
    std::vector<std::string> algorithms{"tpe", "random"};
    bool minimize = false;
};

struct Task2Config {
    /// Task 1 results directory holding result.json.
    std::string architecture = "results/task1";
    std::string architecture_algorithm = "tpe";
    /// 0 keeps every observer of the architecture.
    int max_observers = 0;
    int n_targets = 3;
    std::vector<std::string> target_families{"l1_halo_north", "l1_halo_south", "l2_halo_north",
                                             "l2_halo_south", "dro", "res31"};
    std::uint64_t target_seed = 11;
    double tasking_interval_min = 60.0;
    double step_s = 60.0;
    double horizon_days = 1.0;
    double mag_sigma = 0.1;
    double ra_sigma_arcsec = 3.0;
    double dec_sigma_arcsec = 3.0;
    InitialConditions initial;
    Material material;
    double target_radius_m = 1.0;
    int mesh_subdivisions = 0;
    std::array<double, 4> process_noise{1e-8, 1e-6, 0.0, 0.0};
    OptimizerConfig optimizer{200, 50, 0.25, 24, 20, 0};
    std::uint64_t seed = 1;
    double metrics_from_fraction = 0.0;

    Task2Settings settings(const VisibilityPolicy& policy, double sun_theta0_rad) const;
};

struct Config {
    SystemConstants system;
    VisibilityPolicy policy;
    RadiometryConstants radiometry;
    double sun_theta0_deg = 0.0;
    double propagation_tol = 1e-10;
    LibraryConfig library;
    Task1Config task1;
    Task2Config task2;

    void validate() const;
    /// Equivalence of the serialized documents.
    bool operator==(const Config& o) const;
};

/// Parses YAML text. Unknown keys and bad values raise ConfigError naming the
/// key and source line. Relative paths are kept as written.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

/// Full document with every key present.
std::string dump_config(const Config& c);

} // namespace cislunar
