#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cislunar/cr3bp.hpp"
#include "cislunar/errors.hpp"
#include "cislunar/photometry.hpp"

namespace cislunar {

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

/// Unit quaternion, scalar last, Hamilton product. Maps body vectors into
/// the inertial frame: v_I = q v_B q*.
struct Quaternion {
    Vec3 vec = Vec3::Zero();
    double w = 1.0;

    Quaternion() = default;
    Quaternion(const Vec3& v, double s) : vec(v), w(s) {}
    Quaternion(double x, double y, double z, double s) : vec(x, y, z), w(s) {}

    static Quaternion identity() { return {}; }
    /// Rotation of `angle` radians about unit `axis`.
    static Quaternion from_axis_angle(const Vec3& axis, double angle);

    double norm() const { return std::sqrt(vec.squaredNorm() + w * w); }
    Quaternion normalized() const;
    Quaternion inverse() const { return {-vec, w}; }
    Quaternion operator-() const { return {-vec, -w}; }
    Mat3 to_matrix() const;
    bool finite() const { return vec.allFinite() && std::isfinite(w); }
};

Quaternion quat_mul(const Quaternion& a, const Quaternion& b);
inline Quaternion operator*(const Quaternion& a, const Quaternion& b) { return quat_mul(a, b); }

/// Generalized Rodrigues parameters for attitude errors.
struct GrpParams {
    double a = 0.5;
    double f = 3.0; ///< 2(a + 1)

    static GrpParams with_a(double a) { return {a, 2.0 * (a + 1.0)}; }
};

Quaternion grp_to_quat(const Vec3& p, const GrpParams& g = {});
/// Picks the sign of dq with nonnegative scalar part (dq and -dq are the same
/// rotation) and refuses a + w <= 1e-6 after that choice.
Vec3 quat_to_grp(const Quaternion& dq, const GrpParams& g = {});

/// Rotation about +z by `angle` radians.
Mat3 rot_z(double angle);

/// Body-to-rotating-frame matrix at nondimensional time t past the epoch at
/// which the rotating and inertial axes coincide.
Mat3 body_to_rotating(const Quaternion& q, double t);

struct RigidBody {
    Vec3 inertia = Vec3::Ones(); ///< principal moments, kg m^2

    void validate() const;
    bool spherical() const;
};

/// Torque-free attitude propagation over dt (nondimensional time, omega in
/// rad per time unit). Returns the new quaternion and body rate.
std::pair<Quaternion, Vec3> propagate_attitude(const Quaternion& q, const Vec3& omega, double dt,
                                               const RigidBody& body, double tol = 1e-12);

struct UtConfig {
    double alpha = 0.5;
    double beta = 2.0;
    double kappa = -9.0; ///< 3 - n
    int n = 12;

    double lambda() const { return alpha * alpha * (n + kappa) - n; }
    void validate() const;
};

struct UtWeights {
    double mean0 = 0.0;
    double cov0 = 0.0;
    double rest = 0.0;
};

UtWeights ut_weights(const UtConfig& cfg);

/// 2n + 1 points: the mean, then mean + columns of L, then mean - columns,
/// with L L^T = (n + lambda) P.
template <int N>
std::vector<Eigen::Matrix<double, N, 1>> sigma_points(const Eigen::Matrix<double, N, 1>& mean,
                                                      const Eigen::Matrix<double, N, N>& cov,
                                                      const UtConfig& cfg);

/// Weighted mean and covariance of a point set.
template <int N>
std::pair<Eigen::Matrix<double, N, 1>, Eigen::Matrix<double, N, N>>
unscented_moments(const std::vector<Eigen::Matrix<double, N, 1>>& pts, const UtConfig& cfg);

/// Sensor geometry needed to predict a measurement of one target.
struct ObserverView {
    Vec3 position;    ///< rotating frame, nondimensional
    Quaternion att;   ///< body to inertial
    double t = 0.0;   ///< nondimensional time since epoch
    Vec3 sun;         ///< rotating frame, nondimensional
};

using Vec3m = Eigen::Vector3d; ///< (mag, ra, dec)

struct Measurement {
    Vec3m y = Vec3m::Zero();
    Vec3m r_diag = Vec3m::Ones(); ///< noise variances
    int observer = -1;
    double t = 0.0;
};

/// (ra, dec) of a unit vector; ra in (-pi, pi], dec in [-pi/2, pi/2].
std::pair<double, double> angles_from_unit(const Vec3& u);
Vec3 unit_from_angles(double ra, double dec);

/// Wraps an angle difference into (-pi, pi].
double wrap_angle(double a);

/// Predicted (mag, ra, dec). Magnitude is nullopt-equivalent NaN when dark.
Vec3m measurement_model(const Vec3& target_pos, const Quaternion& target_att,
                        const ObserverView& obs, const FacetMesh& mesh, const SystemConstants& c,
                        const RadiometryConstants& rad = {});

/// Line-of-sight unit vector from observer to target in the observer body frame.
Vec3 line_of_sight_body(const Vec3& target_pos, const ObserverView& obs);

/// Filter state. `mean` is ordered [attitude error, omega, r, v]; the
/// attitude-error block is zero between cycles and `q` carries the attitude.
struct BeliefState {
    Vec12 mean = Vec12::Zero();
    Quaternion q;
    Mat12 cov = Mat12::Identity();
    double t = 0.0; ///< nondimensional time since epoch

    Vec3 omega() const { return mean.segment<3>(3); }
    Vec3 position() const { return mean.segment<3>(6); }
    Vec3 velocity() const { return mean.segment<3>(9); }
    CrState translational() const { return CrState(mean.tail<6>()); }
};

struct FilterOptions {
    UtConfig ut;
    GrpParams grp;
    RigidBody body;
    Mat12 process_noise = Mat12::Zero();
    double propagation_tol = 1e-10;
};

/// Time update to belief.t + dt. Throws IntegrationError / SingularityError
/// from the propagator, Error on an unusable covariance.
BeliefState predict(const BeliefState& b, double dt, const SystemConstants& c,
                    const FilterOptions& opt);

struct UpdateResult {
    BeliefState posterior;
    bool applied = false;
    bool angles_only = false;
    Vec3m innovation = Vec3m::Zero();
};

/// Measurement update. Falls back to angles only when any sigma point is dark
/// and leaves the belief untouched when the innovation covariance is singular.
UpdateResult update(const BeliefState& prior, const Measurement& m, const ObserverView& obs,
                    const FacetMesh& mesh, const SystemConstants& c, const FilterOptions& opt,
                    const RadiometryConstants& rad = {});

/// P - Pxy K^T - K Pxy^T + K Pvv K^T, symmetrized.
Eigen::MatrixXd expanded_joseph(const Eigen::MatrixXd& p, const Eigen::MatrixXd& pxy,
                                const Eigen::MatrixXd& k, const Eigen::MatrixXd& pvv);

template <typename M> M symmetrized(const M& m) { return 0.5 * (m + m.transpose()); }

/// Error GRP taking `estimate` to `truth`: truth = dq(p) * estimate.
Vec3 attitude_error(const Quaternion& truth, const Quaternion& estimate, const GrpParams& g = {});

template <int N>
std::vector<Eigen::Matrix<double, N, 1>> sigma_points(const Eigen::Matrix<double, N, 1>& mean,
                                                      const Eigen::Matrix<double, N, N>& cov,
                                                      const UtConfig& cfg) {
    using Mat = Eigen::Matrix<double, N, N>;
    if (cfg.n != N) throw PreconditionError("sigma_points: UtConfig.n does not match state size");
    const double scale = cfg.n + cfg.lambda();
    Mat s = scale * symmetrized(cov);
    std::vector<Eigen::Matrix<double, N, 1>> pts(2 * N + 1, mean);
    if (s.isZero(0.0)) return pts;
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) {
        s.diagonal().array() += 1e-12 * s.trace() / N;
        llt.compute(s);
        if (llt.info() != Eigen::Success)
            throw Error("sigma_points: covariance is not positive definite");
    }
    const Mat l = llt.matrixL();
    for (int i = 0; i < N; ++i) {
        pts[1 + i] += l.col(i);
        pts[1 + N + i] -= l.col(i);
    }
    return pts;
}

template <int N>
std::pair<Eigen::Matrix<double, N, 1>, Eigen::Matrix<double, N, N>>
unscented_moments(const std::vector<Eigen::Matrix<double, N, 1>>& pts, const UtConfig& cfg) {
    const auto w = ut_weights(cfg);
    Eigen::Matrix<double, N, 1> mean = w.mean0 * pts[0];
    for (std::size_t i = 1; i < pts.size(); ++i) mean += w.rest * pts[i];
    Eigen::Matrix<double, N, N> cov = w.cov0 * (pts[0] - mean) * (pts[0] - mean).transpose();
    for (std::size_t i = 1; i < pts.size(); ++i)
        cov += w.rest * (pts[i] - mean) * (pts[i] - mean).transpose();
    return {mean, symmetrized(cov)};
}

} // namespace cislunar
