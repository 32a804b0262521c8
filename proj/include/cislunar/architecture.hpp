#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "cislunar/cr3bp.hpp"
#include "cislunar/optimize.hpp"
#include "cislunar/orbits.hpp"
#include "cislunar/photometry.hpp"

namespace cislunar {

enum class Exec { serial, parallel };

// ---- static targets ---------------------------------------------------------

struct RaySampling {
    int azimuth = 12;
    int polar = 6;
};

/// Unit ray directions on an equiangular azimuth x polar grid; polar angles
/// are cell centers so the poles are not duplicated.
std::vector<Vec3> equiangular_directions(const RaySampling& s);

/// Zero-velocity-surface hits for every ray, per Jacobi constant, pooled.
/// Constants with no hits are reported in `skipped`.
struct SurfaceSamples {
    std::vector<Vec3> points;
    std::vector<double> jc_of_point;
    std::vector<double> skipped;
};

SurfaceSamples sample_zero_velocity_surfaces(const std::vector<double>& jc_list,
                                             const RaySampling& s, const SystemConstants& c);

struct KMeansResult {
    std::vector<Vec3> centroids;
    std::vector<int> labels;
    int iterations = 0;
    bool converged = false;
};

/// Lloyd iterations from a k-means++ start. Empty clusters keep their
/// previous centroid.
KMeansResult kmeans(const std::vector<Vec3>& points, int k, std::uint64_t seed,
                    int max_iterations = 50, double tol = 1e-10, Exec exec = Exec::parallel);

struct StaticTargetSet {
    std::vector<Vec3> points;
    std::vector<double> jc_sources;
    std::vector<double> skipped_jc;
    std::size_t raw_samples = 0;
};

StaticTargetSet generate_static_targets(const std::vector<double>& jc_list, const RaySampling& s,
                                        int k, std::uint64_t seed, const SystemConstants& c);

/// n uniform steps on [lo, hi], endpoints included.
std::vector<double> linspace(double lo, double hi, int n);

// ---- cost --------------------------------------------------------------------

inline constexpr int kArchitectureSlots = 10;
inline constexpr int kMaxSatellitesPerOrbit = 10;

struct Architecture {
    std::vector<int> orbit;  ///< library indices
    std::vector<int> count;  ///< satellites per orbit, [1, 10]

    void validate(std::size_t library_size) const;
    int total_satellites() const;
    bool unique() const;
};

struct ObservationGrid {
    double horizon_days = 30.0;
    double step_hours = 1.0;

    int n_steps() const; ///< horizon / step + 1
    std::vector<double> times(const SystemConstants& c) const; ///< nondimensional
    void validate() const;
};

struct CostBreakdown {
    std::array<double, 6> lambda{};
    double j = 0.0;
    bool failed = false; ///< a propagation failure forced J = 0
    std::string error;
};

/// Visibility totals of one orbit carrying n satellites, over the whole grid.
struct OrbitCoverage {
    std::vector<int> per_target; ///< sum over time and satellites, per target
    long total = 0;              ///< sum of per_target
    double distance_sum = 0.0;   ///< Earth + Moon distances over time and satellites
};

/// Satellite positions [satellite][grid step] plus the shared per-step Sun.
struct CoverageInputs {
    const std::vector<std::vector<Vec3>>* satellites = nullptr;
    const std::vector<Vec3>* targets = nullptr;
    const std::vector<Vec3>* sun = nullptr;
    VisibilityPolicy policy;
    SphereTarget sphere;
    RadiometryConstants radiometry;
    SystemConstants constants;
};

/// Reference loop and its OpenMP counterpart (parallel over targets). Both
/// produce bit-identical results.
OrbitCoverage coverage_serial(const CoverageInputs& in);
OrbitCoverage coverage_parallel(const CoverageInputs& in);

struct CostSettings {
    ObservationGrid grid;
    VisibilityPolicy policy;
    SphereTarget sphere;
    RadiometryConstants radiometry;
    double sun_theta0 = 0.0;
    double propagation_tol = 1e-10;
    Exec exec = Exec::parallel;
};

/// Evaluates the composite cost. Per-(orbit, count) coverage is memoized;
/// evaluation is a pure function of its inputs.
class CostEvaluator {
public:
    CostEvaluator(const OrbitLibrary& lib, std::vector<Vec3> targets, CostSettings s,
                  SystemConstants c = {});

    CostBreakdown evaluate(const Architecture& a) const;

    /// Satellite positions [satellite][grid step] for an orbit carrying n.
    std::vector<std::vector<Vec3>> satellite_positions(int orbit, int n) const;

    const std::vector<Vec3>& sun_positions() const { return sun_; }
    const std::vector<Vec3>& targets() const { return targets_; }
    const CostSettings& settings() const { return settings_; }
    const OrbitLibrary& library() const { return lib_; }
    const SystemConstants& constants() const { return c_; }

private:
    const OrbitCoverage& coverage(int orbit, int n) const;

    const OrbitLibrary& lib_;
    std::vector<Vec3> targets_;
    CostSettings settings_;
    SystemConstants c_;
    std::vector<double> times_;
    std::vector<Vec3> sun_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<int, int>, OrbitCoverage> cache_;
};

/// Evenly strided indices into a library of n orbits; all of them when
/// max_count is 0 or at least n.
std::vector<int> strided_subset(std::size_t n, int max_count);

/// The orbits at `indices`, in order.
OrbitLibrary library_subset(const OrbitLibrary& lib, const std::vector<int>& indices);

/// Genome layout: 10 categorical orbit slots then 10 integer counts.
DesignSpace architecture_space(std::size_t library_size);
Architecture decode_architecture(const Point& p);
Point encode_architecture(const Architecture& a);

struct ArchitectureResult {
    Architecture best;
    CostBreakdown cost;
    OptimizeResult run;
};

/// Maximizes J (or minimizes it when `minimize`).
ArchitectureResult optimize_architecture(const CostEvaluator& eval, const OptimizerConfig& cfg,
                                         Algorithm algo, bool minimize = false);

} // namespace cislunar
