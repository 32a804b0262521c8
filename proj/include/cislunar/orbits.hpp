#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cislunar/cr3bp.hpp"

namespace cislunar {

/// A symmetric periodic orbit seeded at a perpendicular x-axis crossing.
struct PeriodicOrbit {
    std::string family;
    CrState ic;
    double period = 0.0;
    double stability_index = 1.0;
    double jc = 0.0;
};

struct CorrectorOptions {
    int max_iterations = 50;
    double tolerance = 1e-10;       ///< on |(vx, vz)| at the half-period crossing
    double integration_tol = 1e-12;
    double max_newton_step = 0.05;  ///< cap on the update norm (nondim)
};

/// Single-shooting differential correction from a perpendicular-crossing
/// seed (y = 0, vx = vz = 0). Three-dimensional seeds fix x0 and adjust
/// (z0, vy0); planar seeds fix x0 and adjust vy0. When `period_guess` > 0
/// the y = 0 crossing nearest period_guess/2 is treated as the half period,
/// otherwise the first crossing is used.
PeriodicOrbit correct_periodic(const CrState& seed, const SystemConstants& c,
                               double period_guess = 0.0, const std::string& family = {},
                               const CorrectorOptions& opt = {});

struct FamilyResult {
    std::vector<PeriodicOrbit> orbits;
    bool terminated = false; ///< corrector failed before `count` members
    std::string reason;
};

/// Natural-parameter continuation in x0 with spacing dx, subdividing the
/// step internally when the corrector fails.
FamilyResult continue_family(const PeriodicOrbit& first, double dx, int count,
                             const SystemConstants& c, const CorrectorOptions& opt = {});

struct Stability {
    Mat6 monodromy;
    Eigen::Matrix<std::complex<double>, 6, 1> eigenvalues;
    double stability_index = 1.0;
};

/// Monodromy matrix and the index 0.5|eta| + 0.5/|eta| of its largest-modulus
/// eigenvalue.
Stability monodromy_stability(const PeriodicOrbit& orbit, const SystemConstants& c,
                              double tol = 1e-12);

/// |propagate(ic, T) - ic|.
double closure_error(const PeriodicOrbit& orbit, const SystemConstants& c, double tol = 1e-12);

/// k/n for k = 0..n-1.
std::vector<double> phase_fractions(int n);

/// States at phases kT/n along the orbit; element 0 is the initial condition.
std::vector<CrState> place_satellites(const PeriodicOrbit& orbit, int n, const SystemConstants& c,
                                      double tol = 1e-10);

struct OrbitLibrary {
    std::vector<PeriodicOrbit> orbits;
    std::string provenance;

    std::size_t size() const { return orbits.size(); }
    const PeriodicOrbit& operator[](std::size_t i) const { return orbits.at(i); }
};

struct FamilySeed {
    std::string family;
    double x0 = 0.0;
    double z0 = 0.0;
    double vy0 = 0.0;
    double period_guess = 0.0;

    CrState state() const { return CrState(x0, 0.0, z0, 0.0, vy0, 0.0); }
};

/// Reads `family,x0,z0,vy0,period_guess` rows; '#' starts a comment line.
std::vector<FamilySeed> read_seed_file(const std::filesystem::path& path);

struct SeedPlan {
    FamilySeed seed;
    double dx = 0.005;
    int count = 1;
};

struct LibraryBuild {
    OrbitLibrary library;
    std::vector<std::string> log; ///< one line per seed: achieved count or failure
};

/// Corrects and continues every seed in order. A failing seed is logged and
/// skipped; a family that stops early keeps the members it reached.
LibraryBuild build_library(const std::vector<SeedPlan>& plan, const SystemConstants& c,
                           const CorrectorOptions& opt = {});

void write_library_csv(const OrbitLibrary& lib, const std::filesystem::path& path);
OrbitLibrary read_library_csv(const std::filesystem::path& path);

} // namespace cislunar
