#include "cislunar/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "cislunar/integrator.hpp"

namespace cislunar {

namespace {

constexpr double kPi = std::numbers::pi;

using Vec7 = Eigen::Matrix<double, 7, 1>;

Quaternion exp_rotation(const Vec3& omega, double dt) {
    const double rate = omega.norm();
    if (rate * std::abs(dt) < 1e-300) return {};
    return Quaternion::from_axis_angle(omega / rate, rate * dt);
}

} // namespace

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
    const double h = 0.5 * angle;
    return {axis.normalized() * std::sin(h), std::cos(h)};
}

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw PreconditionError("quaternion: zero norm");
    return {vec / n, w / n};
}

Mat3 Quaternion::to_matrix() const {
    const double x = vec.x(), y = vec.y(), z = vec.z();
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
        2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
        2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
    return r;
}

Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
    return {a.w * b.vec + b.w * a.vec + a.vec.cross(b.vec), a.w * b.w - a.vec.dot(b.vec)};
}

Quaternion grp_to_quat(const Vec3& p, const GrpParams& g) {
    const double p2 = p.squaredNorm();
    const double f2 = g.f * g.f;
    const double w = (-g.a * p2 + g.f * std::sqrt(f2 + (1.0 - g.a * g.a) * p2)) / (f2 + p2);
    return {(g.a + w) / g.f * p, w};
}

Vec3 quat_to_grp(const Quaternion& dq, const GrpParams& g) {
    const Quaternion q = dq.w < 0.0 ? -dq : dq;
    const double den = g.a + q.w;
    if (den <= 1e-6) throw SingularityError("quat_to_grp: rotation at the parameter singularity");
    return g.f / den * q.vec;
}

Mat3 rot_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return r;
}

Mat3 body_to_rotating(const Quaternion& q, double t) { return rot_z(-t) * q.to_matrix(); }

void RigidBody::validate() const {
    if (!(inertia.minCoeff() > 0.0)) throw ConfigError("inertia moments must be positive");
}

bool RigidBody::spherical() const {
    return inertia.x() == inertia.y() && inertia.y() == inertia.z();
}

std::pair<Quaternion, Vec3> propagate_attitude(const Quaternion& q, const Vec3& omega, double dt,
                                               const RigidBody& body, double tol) {
    if (dt == 0.0) return {q, omega};
    // Torque-free symmetric body: omega is constant, the rotation is closed form.
    if (body.spherical()) return {(q * exp_rotation(omega, dt)).normalized(), omega};

    const Vec3 inertia = body.inertia;
    auto rhs = [&inertia](double, const Vec7& y) {
        const Quaternion qq(y.head<3>(), y(3));
        const Vec3 w = y.tail<3>();
        const Quaternion dq = qq * Quaternion(w, 0.0);
        Vec7 d;
        d.head<3>() = 0.5 * dq.vec;
        d(3) = 0.5 * dq.w;
        const Vec3 h = inertia.cwiseProduct(w);
        d.tail<3>() = -w.cross(h).cwiseQuotient(inertia);
        return d;
    };
    Vec7 y0;
    y0 << q.vec, q.w, omega;
    Vec7 yf = y0;
    IntegratorOptions o;
    o.rtol = o.atol = tol;
    integrate<7>(rhs, 0.0, y0, dt, o, [&](const DenseStep<7>& st) {
        yf = st.y_new;
        return true;
    });
    return {Quaternion(yf.head<3>(), yf(3)).normalized(), yf.tail<3>()};
}

void UtConfig::validate() const {
    if (n < 1) throw ConfigError("unscented transform dimension must be positive");
    if (!(alpha > 0.0)) throw ConfigError("unscented alpha must be positive");
    if (!(n + lambda() > 0.0)) throw ConfigError("unscented n + lambda must be positive");
}

UtWeights ut_weights(const UtConfig& cfg) {
    cfg.validate();
    const double lam = cfg.lambda();
    const double s = cfg.n + lam;
    return {lam / s, lam / s + (1.0 - cfg.alpha * cfg.alpha + cfg.beta), 1.0 / (2.0 * s)};
}

std::pair<double, double> angles_from_unit(const Vec3& u) {
    const double ra = (u.x() == 0.0 && u.y() == 0.0) ? 0.0 : std::atan2(u.y(), u.x());
    const double dec = std::asin(std::clamp(u.z(), -1.0, 1.0));
    return {ra == -kPi ? kPi : ra, dec};
}

Vec3 unit_from_angles(double ra, double dec) {
    return {std::cos(dec) * std::cos(ra), std::cos(dec) * std::sin(ra), std::sin(dec)};
}

double wrap_angle(double a) {
    double r = std::remainder(a, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

Vec3 line_of_sight_body(const Vec3& target_pos, const ObserverView& obs) {
    const Vec3 d = target_pos - obs.position;
    const double n = d.norm();
    if (!(n > 0.0)) throw PreconditionError("line of sight: observer coincides with target");
    return body_to_rotating(obs.att, obs.t).transpose() * (d / n);
}

Vec3m measurement_model(const Vec3& target_pos, const Quaternion& target_att,
                        const ObserverView& obs, const FacetMesh& mesh, const SystemConstants& c,
                        const RadiometryConstants& rad) {
    const auto [ra, dec] = angles_from_unit(line_of_sight_body(target_pos, obs));
    const auto mag = facet_magnitude(mesh, body_to_rotating(target_att, obs.t), target_pos,
                                     obs.position, obs.sun, c, rad);
    return {mag ? *mag : std::nan(""), ra, dec};
}

Vec3 attitude_error(const Quaternion& truth, const Quaternion& estimate, const GrpParams& g) {
    return quat_to_grp(truth * estimate.inverse(), g);
}

BeliefState predict(const BeliefState& b, double dt, const SystemConstants& c,
                    const FilterOptions& opt) {
    if (!(dt > 0.0)) throw PreconditionError("predict: dt must be positive");
    if (!b.mean.head<3>().isZero(0.0)) throw PreconditionError("predict: attitude error not reset");

    const auto pts = sigma_points<12>(b.mean, b.cov, opt.ut);
    const std::size_t np = pts.size();
    std::vector<Quaternion> q_prop(np);
    std::vector<Vec12> out(np);
    for (std::size_t i = 0; i < np; ++i) {
        const Vec12& x = pts[i];
        const Quaternion qi = i == 0 ? b.q : grp_to_quat(x.head<3>(), opt.grp) * b.q;
        auto [qn, wn] = propagate_attitude(qi, x.segment<3>(3), dt, opt.body);
        q_prop[i] = qn;
        out[i].segment<3>(3) = wn;
        out[i].tail<6>() = propagate_to(CrState(x.tail<6>()), dt, c, opt.propagation_tol).x;
    }
    const Quaternion q0_inv = q_prop[0].inverse();
    out[0].head<3>().setZero();
    for (std::size_t i = 1; i < np; ++i) out[i].head<3>() = quat_to_grp(q_prop[i] * q0_inv, opt.grp);

    auto [mean, cov] = unscented_moments<12>(out, opt.ut);
    BeliefState a;
    a.cov = symmetrized(Mat12(cov + opt.process_noise));
    // Fold the mean attitude error into the reference so the reset holds.
    a.q = (grp_to_quat(mean.head<3>(), opt.grp) * q_prop[0]).normalized();
    mean.head<3>().setZero();
    a.mean = mean;
    a.t = b.t + dt;
    return a;
}

Eigen::MatrixXd expanded_joseph(const Eigen::MatrixXd& p, const Eigen::MatrixXd& pxy,
                                const Eigen::MatrixXd& k, const Eigen::MatrixXd& pvv) {
    const Eigen::MatrixXd out = p - pxy * k.transpose() - k * pxy.transpose() + k * pvv * k.transpose();
    return symmetrized(out);
}

UpdateResult update(const BeliefState& prior, const Measurement& m, const ObserverView& obs,
                    const FacetMesh& mesh, const SystemConstants& c, const FilterOptions& opt,
                    const RadiometryConstants& rad) {
    UpdateResult res;
    res.posterior = prior;
    if (!prior.mean.head<3>().isZero(0.0)) throw PreconditionError("update: attitude error not reset");

    const auto pts = sigma_points<12>(prior.mean, prior.cov, opt.ut);
    const std::size_t np = pts.size();
    std::vector<Vec3m> gam(np);
    bool dark = !std::isfinite(m.y(0));
    for (std::size_t i = 0; i < np; ++i) {
        const Quaternion qi = i == 0 ? prior.q : grp_to_quat(pts[i].head<3>(), opt.grp) * prior.q;
        gam[i] = measurement_model(pts[i].segment<3>(6), qi, obs, mesh, c, rad);
        if (!std::isfinite(gam[i](0))) dark = true;
    }

    // Row selection: magnitude participates only if every point is lit.
    const int first = dark ? 1 : 0;
    const int dim = 3 - first;
    auto diff = [&](const Vec3m& a, const Vec3m& ref) {
        Eigen::VectorXd d(dim);
        for (int r = first; r < 3; ++r) d(r - first) = a(r) - ref(r);
        d(1 - first) = wrap_angle(d(1 - first));
        return d;
    };

    const auto w = ut_weights(opt.ut);
    Eigen::VectorXd yhat_off = Eigen::VectorXd::Zero(dim); // relative to point 0
    for (std::size_t i = 1; i < np; ++i) yhat_off += w.rest * diff(gam[i], gam[0]);
    Eigen::MatrixXd pyy = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd pxy = Eigen::MatrixXd::Zero(12, dim);
    for (std::size_t i = 0; i < np; ++i) {
        const double wc = i == 0 ? w.cov0 : w.rest;
        const Eigen::VectorXd dy = diff(gam[i], gam[0]) - yhat_off;
        pyy += wc * dy * dy.transpose();
        pxy += wc * (pts[i] - prior.mean) * dy.transpose();
    }
    Eigen::MatrixXd pvv = pyy;
    for (int r = first; r < 3; ++r) pvv(r - first, r - first) += m.r_diag(r);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(pvv);
    if (!lu.isInvertible()) return res;
    const Eigen::MatrixXd k = pxy * lu.inverse();
    const Eigen::VectorXd nu = diff(m.y, gam[0]) - yhat_off;

    Vec12 mean = prior.mean + k * nu;
    res.posterior.cov = expanded_joseph(prior.cov, pxy, k, pvv);
    res.posterior.q = (grp_to_quat(mean.head<3>(), opt.grp) * prior.q).normalized();
    mean.head<3>().setZero();
    res.posterior.mean = mean;
    res.applied = true;
    res.angles_only = dark;
    res.innovation.setZero();
    for (int r = first; r < 3; ++r) res.innovation(r) = nu(r - first);
    return res;
}

} // namespace cislunar
