#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cislunar/architecture.hpp"
#include "cislunar/estimation.hpp"
#include "cislunar/optimize.hpp"
#include "cislunar/orbits.hpp"
#include "cislunar/photometry.hpp"

namespace cislunar {

using Vec6d = Eigen::Matrix<double, 6, 1>;
using Mat6d = Eigen::Matrix<double, 6, 6>;

/// Initial uncertainty and attitude state, in the units of the settings file.
struct InitialConditions {
    double position_var_m2 = 0.1 * 100000.0 * 100000.0;
    double velocity_var_m2s2 = 0.1 * 0.1 * 0.1;
    double attitude_var_deg2 = 25.0;
    double omega_var_deg2hr2 = 2.4 * 2.4;
    Vec3 target_omega_deg_hr{-44.723808, -6.6573, -8.514216};
    Vec3 target_inertia{1047.2, 1047.2, 1047.2};
    Vec3 observer_omega_deg_hr{0.0, 0.0, 1.0};
    Vec3 observer_inertia{4000.0, 4000.0, 4000.0};
};

struct Task2Settings {
    double step_s = 60.0;
    double horizon_days = 1.0;
    double tasking_interval_s = 3600.0;
    /// Measurement noise variances: mag^2, rad^2, rad^2.
    Vec3 r_diag{0.01, std::pow(3.0 / 206264.80624709636, 2), std::pow(3.0 / 206264.80624709636, 2)};
    VisibilityPolicy policy;
    InitialConditions init;
    Material material;
    double target_radius_m = 1.0;
    int mesh_subdivisions = 0;
    /// Process noise per step, nondimensional squared: [att, omega, r, v].
    std::array<double, 4> process_noise{1e-8, 1e-6, 0.0, 0.0};
    OptimizerConfig tasking_opt{200, 50, 0.25, 24, 20, 0};
    double sun_theta0 = 0.0;
    double propagation_tol = 1e-10;
    std::uint64_t seed = 1;
    bool measurement_noise = true;

    void validate() const;
    int n_steps() const;          ///< number of estimation steps after t = 0
    int steps_per_tasking() const; ///< estimation steps between assignments
};

/// Observer platform: orbit index in the library and its phase fraction.
struct ObserverSpec {
    int orbit = 0;
    double phase = 0.0;
};

/// Expands an architecture into per-satellite observers (slot order, then phase).
std::vector<ObserverSpec> expand_observers(const Architecture& a);

/// Target family member drawn for Task 2.
struct TargetSpec {
    int orbit = 0;
    double phase = 0.0; ///< fraction of the period from the y = 0 crossing
};

/// Seeded shuffle of library members whose family is listed; the first n
/// entries for one seed are a prefix of the first n + m.
std::vector<TargetSpec> choose_targets(const OrbitLibrary& lib,
                                       const std::vector<std::string>& families, int n,
                                       std::uint64_t seed);

/// Truth ephemerides sampled on the estimation grid.
struct BodyTrack {
    std::vector<CrState> state;
    std::vector<Quaternion> q;
    std::vector<Vec3> omega; ///< nondimensional rad per time unit
};

struct TruthState {
    std::vector<double> t; ///< nondimensional, t[0] = 0
    std::vector<Vec3> sun;
    std::vector<BodyTrack> targets;
    std::vector<BodyTrack> observers;
    std::vector<CrState> target_mean_ic; ///< filter initial means
};

/// Unit conversions of the initial covariance and rates to filter units.
struct FilterUnits {
    Mat12 p0 = Mat12::Zero();
    Vec3 target_omega;   ///< nondimensional
    Vec3 observer_omega; ///< nondimensional
};

FilterUnits filter_units(const Task2Settings& s, const SystemConstants& c);

TruthState simulate_truth(const OrbitLibrary& lib, const std::vector<TargetSpec>& targets,
                          const std::vector<ObserverSpec>& observers, const Task2Settings& s,
                          const SystemConstants& c, std::mt19937_64& rng);

enum class MeasurementStatus { valid, dark, brightness, fov, exclusion };

const char* to_string(MeasurementStatus s);

struct SimulatedMeasurement {
    MeasurementStatus status = MeasurementStatus::dark;
    Measurement m;
};

/// Noisy (mag, ra, dec) of a target with validity gating. Expected angles for
/// the field-of-view gate come from `estimated_position`.
SimulatedMeasurement simulate_measurement(const ObserverView& obs, const CrState& target,
                                          const Quaternion& target_att, const Vec3& estimated_position,
                                          const FacetMesh& mesh, const Vec3& r_diag,
                                          const VisibilityPolicy& policy, const SystemConstants& c,
                                          std::mt19937_64* rng, const RadiometryConstants& rad = {});

/// P - K C^T - (K C^T)^T + K W K^T, symmetrized.
Mat6d joseph_posterior(const Mat6d& p, const Eigen::MatrixXd& k, const Eigen::MatrixXd& cross,
                       const Eigen::MatrixXd& w);

/// log10 det of a symmetric positive definite matrix; nullopt if not SPD.
std::optional<double> log10_det(const Eigen::MatrixXd& m);

/// Information gain (nats) of observing one target from one observer, using
/// an equal-area sphere and the position-velocity marginal. Zero when the
/// predicted target is not visible or the posterior is not SPD.
double pair_information(const Vec6d& mean, const Mat6d& cov, const ObserverView& obs,
                        const SphereTarget& sphere, const Vec3& r_diag,
                        const VisibilityPolicy& policy, const SystemConstants& c,
                        const RadiometryConstants& rad = {});

/// gain[observer][target] for every candidate pair.
using GainMatrix = std::vector<std::vector<double>>;

/// Joint information of an assignment: the sum of pair gains.
double joint_mutual_information(const std::vector<int>& assignment, const GainMatrix& gain);

struct TaskingAssignment {
    double t = 0.0;
    std::vector<int> target_of; ///< per observer
    double mi = 0.0;
};

/// Top-n_obs weights (descending, ties to the lower index) paired with
/// observers in index order.
std::vector<int> decode_assignment(const Point& weights, int n_observers);

TaskingAssignment assign_sensors(const GainMatrix& gain, double t, const OptimizerConfig& cfg);

/// Per-component accumulator of errors against filter sigmas.
class ErrorMetrics {
public:
    void add(const Vec12& err, const Mat12& cov);
    /// Joint normalized error of a block (dimension-normalized).
    void add_block(const Eigen::VectorXd& err, const Eigen::MatrixXd& cov, int block);

    int samples() const { return n_; }
    std::array<double, 12> anees() const;
    std::array<double, 12> rmse() const;
    std::array<double, 12> sigma3_fraction() const;
    /// Block ANEES: mean of e^T P^-1 e / dim; block 0 rotational, 1 translational.
    double block_anees(int block) const;

private:
    int n_ = 0;
    std::array<double, 12> nees_{}, sq_{}, in3_{};
    std::array<double, 2> block_sum_{};
    std::array<int, 2> block_n_{};
};

struct TargetTrace {
    std::vector<double> t_s;
    std::vector<Vec12> err;   ///< physical units: grp, deg/hr, km, m/s
    std::vector<Vec12> sigma; ///< same units
    std::vector<int> observed; ///< observer index or -1
};

struct TargetMetrics {
    std::array<double, 12> anees{};
    std::array<double, 12> rmse{};
    std::array<double, 12> sigma3{};
    double anees_translational = 0.0;
    double anees_rotational = 0.0;
    int updates = 0;
    bool diverged = false;
    std::string error;
};

struct Task2Result {
    std::vector<TargetSpec> targets;
    std::vector<ObserverSpec> observers;
    std::vector<TaskingAssignment> assignments;
    std::vector<TargetMetrics> metrics;
    std::vector<TargetTrace> traces;
    double mean_sigma3_translational = 0.0;
    double mean_sigma3_rotational = 0.0;
    int predicts = 0;
    int updates = 0;
};

struct Task2Options {
    double metrics_from_fraction = 0.0; ///< metrics over t >= fraction * horizon
    bool keep_traces = true;
};

Task2Result run_task2(const OrbitLibrary& lib, const std::vector<TargetSpec>& targets,
                      const std::vector<ObserverSpec>& observers, const Task2Settings& s,
                      const SystemConstants& c = {}, const Task2Options& opt = {});

/// Trace CSV with errors and 1-sigma columns.
void write_trace_csv(const TargetTrace& tr, const std::filesystem::path& path);

/// Physical-unit scale factors for [grp, omega, r, v] components.
Vec12 physical_scale(const SystemConstants& c);

} // namespace cislunar
