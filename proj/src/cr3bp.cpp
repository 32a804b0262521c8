#include "cislunar/cr3bp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cislunar/errors.hpp"

namespace cislunar {

namespace {

constexpr double kSingularRadius = 1e-12;

struct PrimaryDistances {
    double d; // to Earth
    double r; // to Moon
};

PrimaryDistances distances(const Vec3& p, const SystemConstants& c) {
    const double yz = p.y() * p.y() + p.z() * p.z();
    const double d = std::sqrt(yz + (p.x() + c.mu) * (p.x() + c.mu));
    const double r = std::sqrt(yz + (p.x() - 1.0 + c.mu) * (p.x() - 1.0 + c.mu));
    if (!(d > kSingularRadius) || !(r > kSingularRadius))
        throw SingularityError("cr3bp: state coincides with a primary (d=" + std::to_string(d) +
                               ", r=" + std::to_string(r) + ")");
    return {d, r};
}

// Collinear equilibrium condition dU/dx on the x-axis.
double collinear_residual(double x, const SystemConstants& c) {
    const double m = c.mu;
    const double dx = x + m;
    const double rx = x - 1.0 + m;
    return x - (1.0 - m) * dx / std::pow(std::abs(dx), 3) - m * rx / std::pow(std::abs(rx), 3);
}

double bisect(double lo, double hi, const SystemConstants& c) {
    double flo = collinear_residual(lo, c);
    const double fhi = collinear_residual(hi, c);
    if (flo * fhi > 0.0) throw ConvergenceError("libration_points: root not bracketed");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = collinear_residual(mid, c);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

void SystemConstants::validate() const {
    if (!(mu > 0.0 && mu < 0.5)) throw ConfigError("mu must lie in (0, 0.5)");
    if (!(l_star_km > 0.0) || !(t_star_s > 0.0))
        throw ConfigError("characteristic length and time must be positive");
}

double pseudo_potential(const Vec3& p, const SystemConstants& c) {
    const auto [d, r] = distances(p, c);
    return 0.5 * (p.x() * p.x() + p.y() * p.y()) + (1.0 - c.mu) / d + c.mu / r;
}

Vec3 potential_gradient(const Vec3& p, const SystemConstants& c) {
    const auto [d, r] = distances(p, c);
    const double m = c.mu;
    const double d3 = d * d * d;
    const double r3 = r * r * r;
    const double k = (1.0 - m) / d3 + m / r3;
    return {p.x() - (1.0 - m) * (p.x() + m) / d3 - m * (p.x() - 1.0 + m) / r3,
            p.y() - k * p.y(), -k * p.z()};
}

Mat3 potential_hessian(const Vec3& p, const SystemConstants& c) {
    const auto [d, r] = distances(p, c);
    const double m = c.mu;
    const double d3 = d * d * d, r3 = r * r * r;
    const double d5 = d3 * d * d, r5 = r3 * r * r;
    const double xe = p.x() + m, xm = p.x() - 1.0 + m;
    const double y = p.y(), z = p.z();
    const double k = (1.0 - m) / d3 + m / r3;
    const double a = 3.0 * (1.0 - m) / d5;
    const double b = 3.0 * m / r5;

    Mat3 h;
    h(0, 0) = 1.0 - k + a * xe * xe + b * xm * xm;
    h(1, 1) = 1.0 - k + (a + b) * y * y;
    h(2, 2) = -k + (a + b) * z * z;
    h(0, 1) = h(1, 0) = a * xe * y + b * xm * y;
    h(0, 2) = h(2, 0) = a * xe * z + b * xm * z;
    h(1, 2) = h(2, 1) = (a + b) * y * z;
    return h;
}

Vec6 eom(const CrState& s, const SystemConstants& c) {
    const Vec3 g = potential_gradient(s.position(), c);
    Vec6 dx;
    dx.head<3>() = s.velocity();
    dx(3) = g.x() + 2.0 * s.x(4);
    dx(4) = g.y() - 2.0 * s.x(3);
    dx(5) = g.z();
    return dx;
}

Mat6 eom_jacobian(const CrState& s, const SystemConstants& c) {
    Mat6 a = Mat6::Zero();
    a.block<3, 3>(0, 3).setIdentity();
    a.block<3, 3>(3, 0) = potential_hessian(s.position(), c);
    a(3, 4) = 2.0;
    a(4, 3) = -2.0;
    return a;
}

double jacobi_constant(const CrState& s, const SystemConstants& c) {
    return 2.0 * pseudo_potential(s.position(), c) - s.velocity().squaredNorm();
}

IntegratorOptions integrator_options(double tol) {
    if (!(tol > 0.0)) throw PreconditionError("propagation tolerance must be positive");
    IntegratorOptions o;
    o.rtol = tol;
    o.atol = tol;
    return o;
}

CrState propagate_to(const CrState& s, double dt, const SystemConstants& c, double tol) {
    if (dt == 0.0) return s;
    CrState out = s;
    auto rhs = [&c](double, const Vec6& y) { return eom(CrState(y), c); };
    integrate<6>(rhs, 0.0, s.x, dt, integrator_options(tol), [&](const DenseStep<6>& st) {
        out.x = st.y_new;
        return true;
    });
    return out;
}

Trajectory propagate(const CrState& s, double t0, double tf, const SystemConstants& c, double tol,
                     std::span<const double> times) {
    Trajectory tr;
    if (t0 == tf) {
        tr.times.push_back(t0);
        tr.states.push_back(s);
        return tr;
    }
    auto rhs = [&c](double, const Vec6& y) { return eom(CrState(y), c); };
    if (times.empty()) {
        tr.times = {t0, tf};
        tr.states = {s, propagate_to(s, tf - t0, c, tol)};
        return tr;
    }
    const auto ys = integrate_samples<6>(rhs, t0, s.x, tf, times, integrator_options(tol));
    tr.times.assign(times.begin(), times.end());
    tr.states.reserve(ys.size());
    for (const auto& y : ys) tr.states.emplace_back(y);
    return tr;
}

StmState propagate_with_stm(const CrState& s, double t0, double tf, const SystemConstants& c,
                            double tol) {
    using Vec42 = Eigen::Matrix<double, 42, 1>;
    StmState out;
    out.state = s;
    if (t0 == tf) return out;

    Vec42 y0;
    y0.head<6>() = s.x;
    Eigen::Map<Mat6>(y0.data() + 6) = Mat6::Identity();
    auto rhs = [&c](double, const Vec42& y) {
        const CrState st(y.head<6>());
        Vec42 dy;
        dy.head<6>() = eom(st, c);
        const Eigen::Map<const Mat6> phi(y.data() + 6);
        Eigen::Map<Mat6>(dy.data() + 6) = eom_jacobian(st, c) * phi;
        return dy;
    };
    Vec42 yf = y0;
    integrate<42>(rhs, t0, y0, tf, integrator_options(tol), [&](const DenseStep<42>& st) {
        yf = st.y_new;
        return true;
    });
    out.state = CrState(yf.head<6>());
    out.phi = Eigen::Map<const Mat6>(yf.data() + 6);
    return out;
}

std::array<Vec3, 5> libration_points(const SystemConstants& c) {
    c.validate();
    const double m = c.mu;
    const double eps = 1e-9;
    const double l1 = bisect(-m + eps, 1.0 - m - eps, c);
    const double l2 = bisect(1.0 - m + eps, 2.0, c);
    const double l3 = bisect(-2.0, -m - eps, c);
    const double h = std::sqrt(3.0) / 2.0;
    return {Vec3(l1, 0, 0), Vec3(l2, 0, 0), Vec3(l3, 0, 0), Vec3(0.5 - m, h, 0),
            Vec3(0.5 - m, -h, 0)};
}

std::optional<double> zvs_radius(const Vec3& direction, double jc, const SystemConstants& c,
                                 const ZvsSearch& search) {
    if (std::abs(direction.norm() - 1.0) > 1e-9)
        throw PreconditionError("zvs_radius: direction must be a unit vector");

    // g -> +inf on approach to a primary, which is the physically right sign.
    auto g = [&](double rho) {
        try {
            return 2.0 * pseudo_potential(rho * direction, c) - jc;
        } catch (const SingularityError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    double lo = search.rho_min;
    double glo = g(lo);
    if (glo == 0.0) return lo;
    const int n = static_cast<int>(std::ceil((search.rho_max - search.rho_min) / search.stride));
    for (int i = 1; i <= n; ++i) {
        const double hi = std::min(search.rho_min + i * search.stride, search.rho_max);
        const double ghi = g(hi);
        if (ghi == 0.0) return hi;
        if ((glo < 0.0) != (ghi < 0.0)) {
            double a = lo, b = hi, ga = glo;
            double best = std::abs(glo) < std::abs(ghi) ? lo : hi;
            double gbest = std::min(std::abs(glo), std::abs(ghi));
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                if (mid == a || mid == b) break;
                const double gm = g(mid);
                if (std::abs(gm) < gbest) {
                    gbest = std::abs(gm);
                    best = mid;
                }
                if (gm == 0.0 || gbest <= 1e-13) break;
                if ((gm < 0.0) == (ga < 0.0)) {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            return best;
        }
        lo = hi;
        glo = ghi;
    }
    return std::nullopt;
}

} // namespace cislunar
