#include "cislunar/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "cislunar/csv.hpp"
#include "cislunar/errors.hpp"

namespace cislunar {

namespace {

using Vec42 = Eigen::Matrix<double, 42, 1>;

struct Crossing {
    double t = 0.0;
    CrState state;
    Mat6 phi;
};

Vec42 pack(const CrState& s) {
    Vec42 y;
    y.head<6>() = s.x;
    Eigen::Map<Mat6>(y.data() + 6) = Mat6::Identity();
    return y;
}

auto stm_rhs(const SystemConstants& c) {
    return [&c](double, const Vec42& y) {
        const CrState st(y.head<6>());
        Vec42 dy;
        dy.head<6>() = eom(st, c);
        const Eigen::Map<const Mat6> phi(y.data() + 6);
        Eigen::Map<Mat6>(dy.data() + 6) = eom_jacobian(st, c) * phi;
        return dy;
    };
}

// Locates the y = 0 crossing that plays the role of the half period.
Crossing half_period_crossing(const CrState& s0, const SystemConstants& c, double period_guess,
                              double tol) {
    const IntegratorOptions opt = integrator_options(tol);
    auto rhs = stm_rhs(c);

    const bool pick_nearest = period_guess > 0.0;
    const double target = 0.5 * period_guess;
    const double t_max = pick_nearest ? 0.8 * period_guess : 50.0;
    // Ignore the departure from the seed's own crossing.
    const double t_min = pick_nearest ? 0.1 * period_guess : 1e-6;

    struct Bracket {
        DenseStep<42> step;
        double t_est;
    };
    std::optional<Bracket> best;
    integrate<42>(rhs, 0.0, pack(s0), t_max, opt, [&](const DenseStep<42>& st) {
        const double ya = st.y_old(1);
        const double yb = st.y_new(1);
        if (st.t_new > t_min && ya != 0.0 && (ya < 0.0) != (yb < 0.0)) {
            // Secant/bisection refinement on the interpolant.
            double a = st.t_old, b = st.t_new, fa = ya;
            double tc = b;
            for (int it = 0; it < 100 && b - a > 1e-15; ++it) {
                tc = 0.5 * (a + b);
                const double fm = st.at(tc)(1);
                if (fm == 0.0) break;
                if ((fm < 0.0) == (fa < 0.0)) {
                    a = tc;
                    fa = fm;
                } else {
                    b = tc;
                }
            }
            if (!pick_nearest) {
                best = Bracket{st, tc};
                return false;
            }
            if (!best || std::abs(tc - target) < std::abs(best->t_est - target))
                best = Bracket{st, tc};
        }
        return true;
    });
    if (!best) throw ConvergenceError("corrector: no y = 0 crossing found");

    // Re-integrate the bracketing step exactly, then polish the crossing time
    // with Newton iterations on y(t).
    const DenseStep<42>& st = best->step;
    double t_start = st.t_old;
    Vec42 y_start = st.y_old;
    double tc = best->t_est;
    for (int it = 0; it < 4; ++it) {
        Vec42 yc = y_start;
        integrate<42>(rhs, t_start, y_start, tc, opt, [&](const DenseStep<42>& s) {
            yc = s.y_new;
            return true;
        });
        t_start = tc;
        y_start = yc;
        if (yc(4) == 0.0) break;
        const double dt = -yc(1) / yc(4);
        if (std::abs(dt) < 1e-14) break;
        tc += dt;
    }
    const Vec42& yc = y_start;
    Crossing cr;
    cr.t = t_start;
    cr.state = CrState(yc.head<6>());
    cr.phi = Eigen::Map<const Mat6>(yc.data() + 6);
    return cr;
}

} // namespace

PeriodicOrbit correct_periodic(const CrState& seed, const SystemConstants& c, double period_guess,
                               const std::string& family, const CorrectorOptions& opt) {
    if (seed.x(1) != 0.0) throw PreconditionError("correct_periodic: seed must have y = 0");
    if (!seed.finite()) throw PreconditionError("correct_periodic: non-finite seed");

    CrState s = seed;
    s.x(1) = 0.0;
    s.x(3) = 0.0;
    s.x(5) = 0.0;
    const bool planar = s.x(2) == 0.0;

    double residual = std::numeric_limits<double>::infinity();
    double guess = period_guess;
    for (int iter = 0; iter <= opt.max_iterations; ++iter) {
        const Crossing cr = half_period_crossing(s, c, guess, opt.integration_tol);
        const Vec6 f = eom(cr.state, c);
        const Mat6& p = cr.phi;
        const double vx = cr.state.x(3);
        const double vz = cr.state.x(5);
        residual = planar ? std::abs(vx) : std::hypot(vx, vz);

        if (residual <= opt.tolerance) {
            PeriodicOrbit orb;
            orb.family = family;
            orb.ic = s;
            orb.period = 2.0 * cr.t;
            orb.jc = jacobi_constant(s, c);
            orb.stability_index = monodromy_stability(orb, c, opt.integration_tol).stability_index;
            return orb;
        }
        if (iter == opt.max_iterations) break;
        if (f(1) == 0.0) throw ConvergenceError("corrector: tangential crossing");

        // Variations at the crossing with the crossing time free (y_f = 0 kept).
        if (planar) {
            const double m = p(3, 4) - f(3) / f(1) * p(1, 4);
            if (m == 0.0) throw ConvergenceError("corrector: singular planar update");
            double dvy = -vx / m;
            if (std::abs(dvy) > opt.max_newton_step) dvy = std::copysign(opt.max_newton_step, dvy);
            s.x(4) += dvy;
        } else {
            Eigen::Matrix2d m;
            m << p(3, 2) - f(3) / f(1) * p(1, 2), p(3, 4) - f(3) / f(1) * p(1, 4),
                p(5, 2) - f(5) / f(1) * p(1, 2), p(5, 4) - f(5) / f(1) * p(1, 4);
            Eigen::Vector2d d = m.fullPivLu().solve(Eigen::Vector2d(-vx, -vz));
            if (!d.allFinite()) throw ConvergenceError("corrector: singular update");
            if (d.norm() > opt.max_newton_step) d *= opt.max_newton_step / d.norm();
            s.x(2) += d(0);
            s.x(4) += d(1);
        }
        guess = guess > 0.0 ? 2.0 * cr.t : 0.0;
        if (!s.finite()) throw ConvergenceError("corrector: diverged");
    }
    throw ConvergenceError("corrector: no convergence after " + std::to_string(opt.max_iterations) +
                           " iterations (residual " + std::to_string(residual) + ")");
}

FamilyResult continue_family(const PeriodicOrbit& first, double dx, int count,
                             const SystemConstants& c, const CorrectorOptions& opt) {
    if (!(std::abs(dx) > 0.0)) throw PreconditionError("continue_family: dx must be nonzero");
    if (count < 1) throw PreconditionError("continue_family: count must be positive");

    FamilyResult res;
    res.orbits.push_back(first);
    PeriodicOrbit cur = first;
    std::optional<PeriodicOrbit> prev;
    constexpr int kMaxHalvings = 6;

    while (static_cast<int>(res.orbits.size()) < count) {
        const double x_goal = res.orbits.back().ic.x(0) + dx;
        double h = dx;
        int halvings = 0;
        bool reached = false;
        while (!reached) {
            double step = h;
            if (std::abs(cur.ic.x(0) + step - x_goal) < 1e-14 ||
                (dx > 0 ? cur.ic.x(0) + step > x_goal : cur.ic.x(0) + step < x_goal))
                step = x_goal - cur.ic.x(0);

            // Secant predictor on (z0, vy0, T) versus x0.
            CrState guess = cur.ic;
            double period_guess = cur.period;
            guess.x(0) += step;
            if (prev) {
                const double span = cur.ic.x(0) - prev->ic.x(0);
                if (span != 0.0) {
                    const double k = step / span;
                    guess.x(2) += k * (cur.ic.x(2) - prev->ic.x(2));
                    guess.x(4) += k * (cur.ic.x(4) - prev->ic.x(4));
                    period_guess += k * (cur.period - prev->period);
                }
            }
            try {
                PeriodicOrbit next = correct_periodic(guess, c, period_guess, cur.family, opt);
                if (std::abs(next.period - cur.period) > 0.25 * cur.period)
                    throw ConvergenceError("continuation jumped to a different family");
                prev = cur;
                cur = next;
                if (std::abs(cur.ic.x(0) - x_goal) < 1e-13) reached = true;
            } catch (const Error& e) {
                if (++halvings > kMaxHalvings) {
                    res.terminated = true;
                    res.reason = e.what();
                    return res;
                }
                h *= 0.5;
            }
        }
        res.orbits.push_back(cur);
    }
    return res;
}

Stability monodromy_stability(const PeriodicOrbit& orbit, const SystemConstants& c, double tol) {
    if (!(orbit.period > 0.0)) throw PreconditionError("monodromy_stability: period must be positive");
    Stability s;
    s.monodromy = propagate_with_stm(orbit.ic, 0.0, orbit.period, c, tol).phi;
    Eigen::EigenSolver<Mat6> es(s.monodromy, false);
    if (es.info() != Eigen::Success) throw ConvergenceError("monodromy_stability: eigen-solver failed");
    s.eigenvalues = es.eigenvalues();
    double eta = 0.0;
    for (int i = 0; i < 6; ++i) eta = std::max(eta, std::abs(s.eigenvalues(i)));
    s.stability_index = 0.5 * eta + 0.5 / eta;
    return s;
}

double closure_error(const PeriodicOrbit& orbit, const SystemConstants& c, double tol) {
    return (propagate_to(orbit.ic, orbit.period, c, tol).x - orbit.ic.x).norm();
}

std::vector<double> phase_fractions(int n) {
    if (n < 1) throw PreconditionError("phase_fractions: n must be positive");
    std::vector<double> f(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) f[static_cast<std::size_t>(k)] = static_cast<double>(k) / n;
    return f;
}

std::vector<CrState> place_satellites(const PeriodicOrbit& orbit, int n, const SystemConstants& c,
                                      double tol) {
    if (n < 1 || n > 10) throw PreconditionError("place_satellites: n must lie in [1, 10]");
    std::vector<double> times;
    for (double f : phase_fractions(n)) times.push_back(f * orbit.period);
    if (n == 1) return {orbit.ic};
    return propagate(orbit.ic, 0.0, times.back(), c, tol, times).states;
}

std::vector<FamilySeed> read_seed_file(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path, false);
    std::vector<FamilySeed> seeds;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        if (!r.empty() && r[0] == "family") continue;
        if (r.size() != 5)
            throw ConfigError(path.string() + ":" + std::to_string(t.line_numbers[i]) +
                              ": expected 5 columns family,x0,z0,vy0,period_guess");
        try {
            seeds.push_back({r[0], csv::parse_double(r[1]), csv::parse_double(r[2]),
                             csv::parse_double(r[3]), csv::parse_double(r[4])});
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(t.line_numbers[i]) + ": " +
                              e.what());
        }
    }
    return seeds;
}

LibraryBuild build_library(const std::vector<SeedPlan>& plan, const SystemConstants& c,
                           const CorrectorOptions& opt) {
    LibraryBuild out;
    for (const auto& p : plan) {
        const auto& s = p.seed;
        try {
            const auto first = correct_periodic(s.state(), c, s.period_guess, s.family, opt);
            const auto fam = continue_family(first, p.dx, p.count, c, opt);
            for (const auto& o : fam.orbits) out.library.orbits.push_back(o);
            std::string line = s.family + ": " + std::to_string(fam.orbits.size()) + "/" +
                               std::to_string(p.count) + " members";
            if (fam.terminated) line += " (stopped: " + fam.reason + ")";
            out.log.push_back(line);
        } catch (const Error& e) {
            out.log.push_back(s.family + ": seed failed: " + e.what());
        }
    }
    return out;
}

void write_library_csv(const OrbitLibrary& lib, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "# provenance: " << lib.provenance << "\n";
    out << "index,family,x0,z0,vy0,period,jc,stability_index\n";
    for (std::size_t i = 0; i < lib.orbits.size(); ++i) {
        const auto& o = lib.orbits[i];
        out << i << ',' << o.family << ',' << csv::fmt(o.ic.x(0)) << ',' << csv::fmt(o.ic.x(2))
            << ',' << csv::fmt(o.ic.x(4)) << ',' << csv::fmt(o.period) << ',' << csv::fmt(o.jc)
            << ',' << csv::fmt(o.stability_index) << '\n';
    }
}

OrbitLibrary read_library_csv(const std::filesystem::path& path) {
    OrbitLibrary lib;
    {
        std::ifstream in(path);
        std::string first;
        if (in && std::getline(in, first) && first.rfind("# provenance: ", 0) == 0)
            lib.provenance = first.substr(14);
    }
    const csv::Table t = csv::read(path, true);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        if (r.size() != 8)
            throw ConfigError(path.string() + ":" + std::to_string(t.line_numbers[i]) +
                              ": expected 8 columns");
        if (csv::parse_long(r[0]) != static_cast<long>(lib.orbits.size()))
            throw ConfigError(path.string() + ":" + std::to_string(t.line_numbers[i]) +
                              ": library indices must be consecutive from 0");
        PeriodicOrbit o;
        o.family = r[1];
        o.ic = CrState(csv::parse_double(r[2]), 0.0, csv::parse_double(r[3]), 0.0,
                       csv::parse_double(r[4]), 0.0);
        o.period = csv::parse_double(r[5]);
        o.jc = csv::parse_double(r[6]);
        o.stability_index = csv::parse_double(r[7]);
        if (!(o.period > 0.0)) throw ConfigError(path.string() + ": non-positive period");
        lib.orbits.push_back(o);
    }
    return lib;
}

} // namespace cislunar
