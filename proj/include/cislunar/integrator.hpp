#pragma once

// Adaptive Dormand-Prince 5(4) with the standard 4th-order continuous
// extension (Hairer, Norsett & Wanner, "Solving ODEs I", DOPRI5).

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cislunar/errors.hpp"

namespace cislunar {

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double initial_step = 0.0; ///< 0 selects a step automatically
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 5'000'000;
};

/// One accepted step plus the data needed to interpolate inside it.
template <int N>
struct DenseStep {
    using Vec = Eigen::Matrix<double, N, 1>;

    double t_old = 0.0;
    double t_new = 0.0;
    Vec y_old;
    Vec y_new;
    Vec r2, r3, r4, r5;

    /// Interpolated state at t (must lie within [t_old, t_new]).
    Vec at(double t) const {
        const double h = t_new - t_old;
        if (h == 0.0) return y_old;
        const double th = (t - t_old) / h;
        const double th1 = 1.0 - th;
        return y_old + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    }

    bool contains(double t) const {
        return t_new >= t_old ? (t >= t_old && t <= t_new) : (t <= t_old && t >= t_new);
    }
};

namespace detail {

template <int N>
double error_norm(const Eigen::Matrix<double, N, 1>& err, const Eigen::Matrix<double, N, 1>& y0,
                  const Eigen::Matrix<double, N, 1>& y1, const IntegratorOptions& o) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double e = err[i] / sc;
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

} // namespace detail

/// Integrates y' = rhs(t, y) from t0 to tf (tf < t0 allowed). `on_step` is
/// called with every accepted DenseStep and may return false to stop early.
/// Returns the final time reached.
template <int N, class Rhs, class OnStep>
double integrate(Rhs&& rhs, double t0, const Eigen::Matrix<double, N, 1>& y0, double tf,
                 const IntegratorOptions& opt, OnStep&& on_step) {
    using Vec = Eigen::Matrix<double, N, 1>;

    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                     a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                     d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                     d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    if (t0 == tf) return t0;
    if (!(opt.rtol > 0.0) || !(opt.atol > 0.0))
        throw PreconditionError("integrate: tolerances must be positive");

    const double dir = tf > t0 ? 1.0 : -1.0;
    const double span = std::abs(tf - t0);

    double t = t0;
    Vec y = y0;
    Vec k1 = rhs(t, y);

    double h = std::abs(opt.initial_step);
    if (h == 0.0) {
        // Hairer's starting-step heuristic.
        Vec sc = (opt.atol + opt.rtol * y.array().abs()).matrix();
        const double dnf = (k1.array() / sc.array()).matrix().squaredNorm() / double(y.size());
        const double dny = (y.array() / sc.array()).matrix().squaredNorm() / double(y.size());
        double h0 = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
        h0 = std::min(h0, span);
        const Vec y1 = y + dir * h0 * k1;
        const Vec f1 = rhs(t + dir * h0, y1);
        const double der2 =
            std::sqrt(((f1 - k1).array() / sc.array()).matrix().squaredNorm() / double(y.size())) / h0;
        const double der12 = std::max(der2, std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / der12, 0.2);
        h = std::min(100.0 * h0, h1);
    }
    h = std::min({h, span, opt.max_step});

    bool reject = false;
    for (long nstep = 0;; ++nstep) {
        if (nstep >= opt.max_steps) throw IntegrationError("integrate: step budget exhausted", t);
        const double remaining = std::abs(tf - t);
        bool last = false;
        if (h >= remaining * (1.0 - 1e-12)) {
            h = remaining;
            last = true;
        }
        if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw IntegrationError("integrate: step size underflow", t);

        const double hs = dir * h;
        const Vec k2 = rhs(t + c2 * hs, y + hs * (a21 * k1));
        const Vec k3 = rhs(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
        const Vec k4 = rhs(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec k5 = rhs(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec k6 =
            rhs(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vec ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const double tnew = last ? tf : t + hs;
        const Vec k7 = rhs(tnew, ynew);
        const Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = detail::error_norm<N>(err, y, ynew, opt);
        if (!std::isfinite(en)) {
            h *= 0.25;
            reject = true;
            continue;
        }

        if (en <= 1.0) {
            DenseStep<N> step;
            step.t_old = t;
            step.t_new = tnew;
            step.y_old = y;
            step.y_new = ynew;
            step.r2 = ynew - y;
            step.r3 = hs * k1 - step.r2;
            step.r4 = step.r2 - hs * k7 - step.r3;
            step.r5 = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            t = tnew;
            y = ynew;
            k1 = k7;
            if (!on_step(static_cast<const DenseStep<N>&>(step))) return t;
            if (last) return t;

            double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.2);
            fac = std::clamp(fac, 0.2, 10.0);
            if (reject) fac = std::min(fac, 1.0);
            h = std::min(h * fac, opt.max_step);
            reject = false;
        } else {
            const double fac = std::max(0.2, 0.9 * std::pow(en, -0.2));
            h *= fac;
            reject = true;
        }
    }
}

/// Integrates and returns the state at each requested time. Sample times
/// must be monotone in the direction of integration and lie within [t0, tf].
template <int N, class Rhs>
std::vector<Eigen::Matrix<double, N, 1>> integrate_samples(Rhs&& rhs, double t0,
                                                           const Eigen::Matrix<double, N, 1>& y0,
                                                           double tf, std::span<const double> times,
                                                           const IntegratorOptions& opt) {
    std::vector<Eigen::Matrix<double, N, 1>> out;
    out.reserve(times.size());
    std::size_t next = 0;
    while (next < times.size() && times[next] == t0) {
        out.push_back(y0);
        ++next;
    }
    if (next == times.size()) return out;
    integrate<N>(rhs, t0, y0, tf, opt, [&](const DenseStep<N>& s) {
        while (next < times.size() && s.contains(times[next])) {
            out.push_back(times[next] == s.t_new ? s.y_new : s.at(times[next]));
            ++next;
        }
        return next < times.size();
    });
    if (out.size() != times.size())
        throw PreconditionError("integrate_samples: sample times outside the integration span");
    return out;
}

} // namespace cislunar
