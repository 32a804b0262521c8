#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "cislunar/integrator.hpp"

namespace cislunar {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Earth-Moon nondimensionalization. Lengths in units of l_star, time in
/// units of t_star (inverse lunar mean motion).
struct SystemConstants {
    double mu = 0.01215;
    double l_star_km = 384400.0;
    double t_star_s = 375190.0;

    void validate() const;

    double km_to_nd(double km) const { return km / l_star_km; }
    double nd_to_km(double nd) const { return nd * l_star_km; }
    double nd_to_m(double nd) const { return nd * l_star_km * 1000.0; }
    double seconds_to_nd(double s) const { return s / t_star_s; }
    double days_to_nd(double d) const { return d * 86400.0 / t_star_s; }
    double nd_to_seconds(double t) const { return t * t_star_s; }
    /// Nondimensional velocity unit in m/s.
    double velocity_unit_mps() const { return l_star_km * 1000.0 / t_star_s; }

    Vec3 earth_position() const { return {-mu, 0.0, 0.0}; }
    Vec3 moon_position() const { return {1.0 - mu, 0.0, 0.0}; }
};

/// Barycentric rotating-frame state [x y z vx vy vz], nondimensional.
struct CrState {
    Vec6 x = Vec6::Zero();

    CrState() = default;
    explicit CrState(const Vec6& v) : x(v) {}
    CrState(double px, double py, double pz, double vx, double vy, double vz) {
        x << px, py, pz, vx, vy, vz;
    }

    Vec3 position() const { return x.head<3>(); }
    Vec3 velocity() const { return x.tail<3>(); }
    bool finite() const { return x.allFinite(); }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<CrState> states;
};

/// State with its 6x6 state transition matrix from the initial epoch.
struct StmState {
    CrState state;
    Mat6 phi = Mat6::Identity();
};

double pseudo_potential(const Vec3& r, const SystemConstants& c);
Vec3 potential_gradient(const Vec3& r, const SystemConstants& c);
Mat3 potential_hessian(const Vec3& r, const SystemConstants& c);

/// Time derivative of the state under the rotating-frame equations of motion.
/// Throws SingularityError within 1e-12 of either primary.
Vec6 eom(const CrState& s, const SystemConstants& c);

/// d(eom)/d(state).
Mat6 eom_jacobian(const CrState& s, const SystemConstants& c);

/// JC = 2U - v^2.
double jacobi_constant(const CrState& s, const SystemConstants& c);

IntegratorOptions integrator_options(double tol);

/// State after integrating from t = 0 to t = dt (dt may be negative).
CrState propagate_to(const CrState& s, double dt, const SystemConstants& c, double tol = 1e-10);

/// Samples the trajectory from t0 to tf at `times` (monotone, within the
/// span). With no sample times the result holds the endpoints only.
Trajectory propagate(const CrState& s, double t0, double tf, const SystemConstants& c,
                     double tol = 1e-10, std::span<const double> times = {});

/// Integrates state plus variational equations from t0 to tf.
StmState propagate_with_stm(const CrState& s, double t0, double tf, const SystemConstants& c,
                            double tol = 1e-10);

/// L1..L5 positions, index 0 = L1.
std::array<Vec3, 5> libration_points(const SystemConstants& c);

struct ZvsSearch {
    double rho_min = 0.2;
    double rho_max = 2.0;
    double stride = 0.01;
};

/// Smallest barycentric distance beyond rho_min along `direction` where
/// 2U = jc, or nullopt if no crossing occurs before rho_max.
std::optional<double> zvs_radius(const Vec3& direction, double jc, const SystemConstants& c,
                                 const ZvsSearch& search = {});

} // namespace cislunar
