#include "cislunar/tasking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "cislunar/csv.hpp"
#include "cislunar/errors.hpp"

namespace cislunar {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;
constexpr double kLn10 = 2.302585092994045684;

double deg_per_hr_to_nd(double v, const SystemConstants& c) {
    return v * kDeg / 3600.0 * c.t_star_s;
}

Vec3 deg_per_hr_to_nd(const Vec3& v, const SystemConstants& c) {
    return v * (kDeg / 3600.0 * c.t_star_s);
}

/// Positions along a library orbit at `times`, starting from phase * period.
std::vector<CrState> orbit_states(const PeriodicOrbit& o, double phase,
                                  const std::vector<double>& times, const SystemConstants& c,
                                  double tol) {
    std::vector<std::pair<double, std::size_t>> taus;
    taus.reserve(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        double tau = std::fmod(phase * o.period + times[k], o.period);
        if (tau < 0.0) tau += o.period;
        taus.emplace_back(tau, k);
    }
    std::sort(taus.begin(), taus.end());
    std::vector<double> sorted(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) sorted[i] = taus[i].first;
    const auto tr = propagate(o.ic, 0.0, o.period, c, tol, sorted);
    std::vector<CrState> out(times.size());
    for (std::size_t i = 0; i < taus.size(); ++i) out[taus[i].second] = tr.states[i];
    return out;
}

ObserverView view_of(const TruthState& truth, int observer, int step) {
    const auto& tr = truth.observers[observer];
    return {tr.state[step].position(), tr.q[step], truth.t[step], truth.sun[step]};
}

} // namespace

void Task2Settings::validate() const {
    if (!(step_s > 0.0)) throw ConfigError("task2.step must be positive");
    if (!(horizon_days > 0.0)) throw ConfigError("task2.horizon must be positive");
    if (!(tasking_interval_s > 0.0)) throw ConfigError("task2.tasking_interval must be positive");
    const double ratio = tasking_interval_s / step_s;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
        throw ConfigError("task2.tasking_interval must be a positive multiple of task2.step");
    const double steps = horizon_days * 86400.0 / step_s;
    if (std::abs(steps - std::round(steps)) > 1e-9)
        throw ConfigError("task2.horizon must be a whole number of steps");
    if (!(r_diag.array() > 0.0).all()) throw ConfigError("task2.measurement_noise entries must be positive");
    if (!(target_radius_m > 0.0)) throw ConfigError("task2.target_radius must be positive");
    if (mesh_subdivisions < 0 || mesh_subdivisions > 6)
        throw ConfigError("task2.mesh_subdivisions must lie in [0, 6]");
    for (double q : process_noise)
        if (!(q >= 0.0)) throw ConfigError("task2.process_noise entries must be nonnegative");
    if (!(init.position_var_m2 > 0.0 && init.velocity_var_m2s2 > 0.0 && init.attitude_var_deg2 > 0.0 &&
          init.omega_var_deg2hr2 > 0.0))
        throw ConfigError("task2 initial variances must be positive");
    policy.validate();
    material.validate();
    tasking_opt.validate();
    RigidBody{init.target_inertia}.validate();
    RigidBody{init.observer_inertia}.validate();
}

int Task2Settings::n_steps() const {
    return static_cast<int>(std::lround(horizon_days * 86400.0 / step_s));
}

int Task2Settings::steps_per_tasking() const {
    return static_cast<int>(std::lround(tasking_interval_s / step_s));
}

std::vector<ObserverSpec> expand_observers(const Architecture& a) {
    std::vector<ObserverSpec> out;
    for (std::size_t i = 0; i < a.orbit.size(); ++i)
        for (double f : phase_fractions(a.count[i])) out.push_back({a.orbit[i], f});
    return out;
}

std::vector<TargetSpec> choose_targets(const OrbitLibrary& lib,
                                       const std::vector<std::string>& families, int n,
                                       std::uint64_t seed) {
    if (n < 1) throw ConfigError("number of targets must be >= 1");
    std::vector<int> pool;
    for (std::size_t i = 0; i < lib.size(); ++i)
        if (std::find(families.begin(), families.end(), lib[i].family) != families.end())
            pool.push_back(static_cast<int>(i));
    if (pool.empty()) throw ConfigError("no library orbit belongs to the target families");
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TargetSpec> out;
    for (int i = 0; i < n; ++i) out.push_back({pool[i % pool.size()], u(rng)});
    return out;
}

FilterUnits filter_units(const Task2Settings& s, const SystemConstants& c) {
    FilterUnits u;
    const double lm = c.l_star_km * 1000.0;
    const double vu = c.velocity_unit_mps();
    const double w = deg_per_hr_to_nd(1.0, c);
    const Vec12 var = (Vec12() << Vec3::Constant(s.init.attitude_var_deg2 * kDeg * kDeg),
                       Vec3::Constant(s.init.omega_var_deg2hr2 * w * w),
                       Vec3::Constant(s.init.position_var_m2 / (lm * lm)),
                       Vec3::Constant(s.init.velocity_var_m2s2 / (vu * vu)))
                          .finished();
    u.p0 = var.asDiagonal();
    u.target_omega = deg_per_hr_to_nd(s.init.target_omega_deg_hr, c);
    u.observer_omega = deg_per_hr_to_nd(s.init.observer_omega_deg_hr, c);
    return u;
}

Vec12 physical_scale(const SystemConstants& c) {
    const double w = 1.0 / deg_per_hr_to_nd(1.0, c);
    return (Vec12() << Vec3::Ones(), Vec3::Constant(w), Vec3::Constant(c.l_star_km),
            Vec3::Constant(c.velocity_unit_mps()))
        .finished();
}

TruthState simulate_truth(const OrbitLibrary& lib, const std::vector<TargetSpec>& targets,
                          const std::vector<ObserverSpec>& observers, const Task2Settings& s,
                          const SystemConstants& c, std::mt19937_64& rng) {
    const int n = s.n_steps();
    const double dt = c.seconds_to_nd(s.step_s);
    const auto u = filter_units(s, c);
    TruthState truth;
    truth.t.resize(n + 1);
    for (int k = 0; k <= n; ++k) truth.t[k] = k * dt;
    const SunModel sun(s.sun_theta0);
    for (double t : truth.t) truth.sun.push_back(sun.position_at(t, c));

    const RigidBody target_body{s.init.target_inertia};
    const RigidBody observer_body{s.init.observer_inertia};
    std::normal_distribution<double> g(0.0, 1.0);
    const Mat6d l6 = u.p0.bottomRightCorner<6, 6>().llt().matrixL();
    const double att_sd = std::sqrt(u.p0(0, 0));
    const double omega_sd = std::sqrt(u.p0(3, 3));

    for (const auto& ts : targets) {
        const auto& o = lib[ts.orbit];
        const CrState mean = propagate_to(o.ic, ts.phase * o.period, c, s.propagation_tol);
        Vec6d z;
        for (int i = 0; i < 6; ++i) z(i) = g(rng);
        const CrState ic(Vec6(mean.x + l6 * z));
        Vec3 dp, dw;
        for (int i = 0; i < 3; ++i) dp(i) = att_sd * g(rng);
        for (int i = 0; i < 3; ++i) dw(i) = omega_sd * g(rng);

        BodyTrack tr;
        tr.state = propagate(ic, 0.0, truth.t.back(), c, s.propagation_tol, truth.t).states;
        Quaternion q = grp_to_quat(dp).normalized();
        Vec3 w = u.target_omega + dw;
        for (int k = 0; k <= n; ++k) {
            if (k > 0) std::tie(q, w) = propagate_attitude(q, w, dt, target_body);
            tr.q.push_back(q);
            tr.omega.push_back(w);
        }
        truth.targets.push_back(std::move(tr));
        truth.target_mean_ic.push_back(mean);
    }

    for (const auto& os : observers) {
        const auto& o = lib[os.orbit];
        BodyTrack tr;
        tr.state = orbit_states(o, os.phase, truth.t, c, s.propagation_tol);
        Quaternion q;
        Vec3 w = u.observer_omega;
        for (int k = 0; k <= n; ++k) {
            if (k > 0) std::tie(q, w) = propagate_attitude(q, w, dt, observer_body);
            tr.q.push_back(q);
            tr.omega.push_back(w);
        }
        truth.observers.push_back(std::move(tr));
    }
    return truth;
}

const char* to_string(MeasurementStatus s) {
    switch (s) {
    case MeasurementStatus::valid: return "valid";
    case MeasurementStatus::dark: return "dark";
    case MeasurementStatus::brightness: return "brightness";
    case MeasurementStatus::fov: return "fov";
    case MeasurementStatus::exclusion: return "exclusion";
    }
    return "unknown";
}

SimulatedMeasurement simulate_measurement(const ObserverView& obs, const CrState& target,
                                          const Quaternion& target_att, const Vec3& estimated_position,
                                          const FacetMesh& mesh, const Vec3& r_diag,
                                          const VisibilityPolicy& policy, const SystemConstants& c,
                                          std::mt19937_64* rng, const RadiometryConstants& rad) {
    SimulatedMeasurement out;
    out.m.r_diag = r_diag;
    out.m.t = obs.t;
    Vec3m y = measurement_model(target.position(), target_att, obs, mesh, c, rad);
    if (!std::isfinite(y(0))) {
        out.status = MeasurementStatus::dark;
        return out;
    }
    if (rng) {
        std::normal_distribution<double> g(0.0, 1.0);
        for (int i = 0; i < 3; ++i) y(i) += std::sqrt(r_diag(i)) * g(*rng);
        y(1) = wrap_angle(y(1));
        y(2) = std::clamp(y(2), -kPi / 2, kPi / 2);
    }
    out.m.y = y;
    if (!(y(0) <= policy.mag_threshold)) {
        out.status = MeasurementStatus::brightness;
        return out;
    }
    const Vec3 dir = target.position() - obs.position;
    const auto vis = visibility_check(y(0), dir, obs.sun, c.moon_position(), c.earth_position(),
                                      obs.position, policy);
    if (vis != Visibility::visible) {
        out.status = MeasurementStatus::exclusion;
        return out;
    }
    const auto [ra_e, dec_e] = angles_from_unit(line_of_sight_body(estimated_position, obs));
    const double half = 0.5 * policy.fov_deg * kDeg;
    if (std::abs(wrap_angle(y(1) - ra_e)) > half || std::abs(y(2) - dec_e) > half) {
        out.status = MeasurementStatus::fov;
        return out;
    }
    out.status = MeasurementStatus::valid;
    return out;
}

Mat6d joseph_posterior(const Mat6d& p, const Eigen::MatrixXd& k, const Eigen::MatrixXd& cross,
                       const Eigen::MatrixXd& w) {
    const Eigen::MatrixXd kc = k * cross.transpose();
    const Mat6d out = p - kc - kc.transpose() + k * w * k.transpose();
    return symmetrized(out);
}

std::optional<double> log10_det(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return std::nullopt;
    double s = 0.0;
    const Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) return std::nullopt;
        s += 2.0 * std::log10(l(i, i));
    }
    return s;
}

double pair_information(const Vec6d& mean, const Mat6d& cov, const ObserverView& obs,
                        const SphereTarget& sphere, const Vec3& r_diag,
                        const VisibilityPolicy& policy, const SystemConstants& c,
                        const RadiometryConstants& rad) {
    const Vec3 r = mean.head<3>();
    const auto mag = sphere_magnitude_at(sphere, r, obs.position, obs.sun, c, rad);
    if (visibility_check(mag, r - obs.position, obs.sun, c.moon_position(), c.earth_position(),
                         obs.position, policy) != Visibility::visible)
        return 0.0;

    const UtConfig ut{0.5, 2.0, -3.0, 6};
    const auto w = ut_weights(ut);
    const auto pts = sigma_points<6>(mean, cov, ut);
    std::vector<Vec3m> ys;
    bool with_mag = true;
    for (const auto& x : pts) {
        const Vec3 pos = x.head<3>();
        const auto m = sphere_magnitude_at(sphere, pos, obs.position, obs.sun, c, rad);
        const auto [ra, dec] = angles_from_unit(line_of_sight_body(pos, obs));
        with_mag = with_mag && m.has_value();
        ys.emplace_back(m.value_or(0.0), ra, dec);
    }
    const double ra0 = ys[0](1);
    for (auto& y : ys) y(1) = ra0 + wrap_angle(y(1) - ra0);

    const int first = with_mag ? 0 : 1;
    const int m = 3 - first;
    Eigen::VectorXd ybar = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < ys.size(); ++i)
        ybar += (i == 0 ? w.mean0 : w.rest) * ys[i].tail(m);
    Eigen::MatrixXd pyy = r_diag.tail(m).asDiagonal();
    Eigen::MatrixXd pxy = Eigen::MatrixXd::Zero(6, m);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double wc = i == 0 ? w.cov0 : w.rest;
        const Eigen::VectorXd dy = ys[i].tail(m) - ybar;
        pyy += wc * dy * dy.transpose();
        pxy += wc * (pts[i] - mean) * dy.transpose();
    }
    pyy = symmetrized(pyy);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(pyy);
    if (!lu.isInvertible()) return 0.0;
    const Eigen::MatrixXd k = pxy * lu.inverse();
    const Mat6d post = joseph_posterior(cov, k, pxy, pyy);
    const auto before = log10_det(cov);
    const auto after = log10_det(post);
    if (!before || !after) return 0.0;
    return std::max(0.0, 0.5 * kLn10 * (*before - *after));
}

double joint_mutual_information(const std::vector<int>& assignment, const GainMatrix& gain) {
    double s = 0.0;
    for (std::size_t o = 0; o < assignment.size(); ++o)
        if (assignment[o] >= 0) s += gain.at(o).at(assignment[o]);
    return s;
}

std::vector<int> decode_assignment(const Point& weights, int n_observers) {
    std::vector<int> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return weights[a] > weights[b]; });
    std::vector<int> out(n_observers, -1);
    for (int o = 0; o < n_observers && o < static_cast<int>(order.size()); ++o) out[o] = order[o];
    return out;
}

TaskingAssignment assign_sensors(const GainMatrix& gain, double t, const OptimizerConfig& cfg) {
    TaskingAssignment a;
    a.t = t;
    const int n_obs = static_cast<int>(gain.size());
    if (n_obs == 0) return a;
    const int n_t = static_cast<int>(gain.front().size());
    if (n_t == 0) {
        a.target_of.assign(n_obs, -1);
        return a;
    }
    DesignSpace space;
    for (int i = 0; i < n_t; ++i)
        space.dims.push_back(Dimension::continuous(0.0, 1.0, "w" + std::to_string(i)));
    const auto objective = [&](const Point& p) {
        return joint_mutual_information(decode_assignment(p, n_obs), gain);
    };
    const auto res = optimize(space, objective, cfg, Algorithm::tpe);
    a.target_of = decode_assignment(res.best.point, n_obs);
    a.mi = res.best.reward;
    return a;
}

void ErrorMetrics::add(const Vec12& err, const Mat12& cov) {
    for (int i = 0; i < 12; ++i) {
        const double var = cov(i, i);
        const double e2 = err(i) * err(i);
        nees_[i] += e2 / var;
        sq_[i] += e2;
        in3_[i] += std::abs(err(i)) <= 3.0 * std::sqrt(var) ? 1.0 : 0.0;
    }
    ++n_;
    add_block(err.head<6>(), cov.topLeftCorner<6, 6>(), 0);
    add_block(err.tail<6>(), cov.bottomRightCorner<6, 6>(), 1);
}

void ErrorMetrics::add_block(const Eigen::VectorXd& err, const Eigen::MatrixXd& cov, int block) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    const double nees = err.dot(ldlt.solve(err));
    block_sum_.at(block) += nees / static_cast<double>(err.size());
    ++block_n_.at(block);
}

std::array<double, 12> ErrorMetrics::anees() const {
    std::array<double, 12> out{};
    for (int i = 0; i < 12; ++i) out[i] = n_ ? nees_[i] / n_ : 0.0;
    return out;
}

std::array<double, 12> ErrorMetrics::rmse() const {
    std::array<double, 12> out{};
    for (int i = 0; i < 12; ++i) out[i] = n_ ? std::sqrt(sq_[i] / n_) : 0.0;
    return out;
}

std::array<double, 12> ErrorMetrics::sigma3_fraction() const {
    std::array<double, 12> out{};
    for (int i = 0; i < 12; ++i) out[i] = n_ ? in3_[i] / n_ : 0.0;
    return out;
}

double ErrorMetrics::block_anees(int block) const {
    const int n = block_n_.at(block);
    return n ? block_sum_.at(block) / n : 0.0;
}

Task2Result run_task2(const OrbitLibrary& lib, const std::vector<TargetSpec>& targets,
                      const std::vector<ObserverSpec>& observers, const Task2Settings& s,
                      const SystemConstants& c, const Task2Options& opt) {
    s.validate();
    c.validate();
    if (targets.empty()) throw ConfigError("task2 needs at least one target");
    if (observers.empty()) throw ConfigError("task2 needs at least one observer");
    for (const auto& t : targets)
        if (t.orbit < 0 || static_cast<std::size_t>(t.orbit) >= lib.size())
            throw ConfigError("target orbit index outside the library");
    for (const auto& o : observers)
        if (o.orbit < 0 || static_cast<std::size_t>(o.orbit) >= lib.size())
            throw ConfigError("observer orbit index outside the library");

    const int n_t = static_cast<int>(targets.size());
    const int n_o = static_cast<int>(observers.size());
    const int n = s.n_steps();
    const int per_task = s.steps_per_tasking();
    const double dt = c.seconds_to_nd(s.step_s);

    std::mt19937_64 rng(s.seed);
    const TruthState truth = simulate_truth(lib, targets, observers, s, c, rng);
    const FilterUnits units = filter_units(s, c);
    const FacetMesh mesh = icosphere_mesh(s.target_radius_m, s.mesh_subdivisions, s.material);
    const SphereTarget sphere{std::sqrt(mesh.total_area() / (4.0 * kPi)), s.material.albedo};
    const Vec12 scale = physical_scale(c);

    FilterOptions fo;
    fo.body = RigidBody{s.init.target_inertia};
    fo.propagation_tol = s.propagation_tol;
    Vec12 q;
    for (int b = 0; b < 4; ++b) q.segment<3>(3 * b).setConstant(s.process_noise[b]);
    fo.process_noise = q.asDiagonal();

    std::vector<BeliefState> belief(n_t);
    for (int i = 0; i < n_t; ++i) {
        belief[i].mean.segment<3>(3) = units.target_omega;
        belief[i].mean.tail<6>() = truth.target_mean_ic[i].x;
        belief[i].cov = units.p0;
    }

    Task2Result res;
    res.targets = targets;
    res.observers = observers;
    res.metrics.resize(n_t);
    res.traces.resize(n_t);
    std::vector<ErrorMetrics> acc(n_t);
    const double metrics_from = opt.metrics_from_fraction * truth.t.back();

    const auto record = [&](int k, const std::vector<int>& observed_by) {
        for (int i = 0; i < n_t; ++i) {
            if (res.metrics[i].diverged) continue;
            const auto& b = belief[i];
            const auto& tr = truth.targets[i];
            Vec12 e;
            e.head<3>() = attitude_error(tr.q[k], b.q);
            e.segment<3>(3) = tr.omega[k] - b.omega();
            e.tail<6>() = tr.state[k].x - b.mean.tail<6>();
            if (truth.t[k] >= metrics_from - 1e-12) acc[i].add(e, b.cov);
            if (opt.keep_traces) {
                auto& trace = res.traces[i];
                trace.t_s.push_back(c.nd_to_seconds(truth.t[k]));
                trace.err.push_back(e.cwiseProduct(scale));
                trace.sigma.push_back(b.cov.diagonal().cwiseSqrt().cwiseProduct(scale));
                trace.observed.push_back(observed_by[i]);
            }
        }
    };
    const auto diverge = [&](int i, const std::exception& ex) {
        res.metrics[i].diverged = true;
        res.metrics[i].error = ex.what();
    };

    record(0, std::vector<int>(n_t, -1));
    TaskingAssignment current;
    for (int k = 0; k < n; ++k) {
        if (k % per_task == 0) {
            GainMatrix gain(n_o, std::vector<double>(n_t, 0.0));
            for (int o = 0; o < n_o; ++o) {
                const auto view = view_of(truth, o, k);
                for (int i = 0; i < n_t; ++i) {
                    if (res.metrics[i].diverged) continue;
                    gain[o][i] = pair_information(belief[i].mean.tail<6>(),
                                                  belief[i].cov.bottomRightCorner<6, 6>(), view,
                                                  sphere, s.r_diag, s.policy, c);
                }
            }
            OptimizerConfig cfg = s.tasking_opt;
            cfg.seed = s.seed * 1000003ULL + static_cast<std::uint64_t>(k / per_task);
            current = assign_sensors(gain, truth.t[k], cfg);
            res.assignments.push_back(current);
        }

#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n_t; ++i) {
            if (res.metrics[i].diverged) continue;
            try {
                belief[i] = predict(belief[i], dt, c, fo);
            } catch (const std::exception& ex) {
                diverge(i, ex);
            }
        }
        for (int i = 0; i < n_t; ++i)
            if (!res.metrics[i].diverged) ++res.predicts;

        std::vector<int> observed_by(n_t, -1);
        for (int o = 0; o < n_o; ++o) {
            const int i = current.target_of.empty() ? -1 : current.target_of[o];
            if (i < 0 || res.metrics[i].diverged) continue;
            const auto view = view_of(truth, o, k + 1);
            const auto& tr = truth.targets[i];
            auto sim = simulate_measurement(view, tr.state[k + 1], tr.q[k + 1], belief[i].position(),
                                            mesh, s.r_diag, s.policy, c,
                                            s.measurement_noise ? &rng : nullptr);
            if (sim.status != MeasurementStatus::valid) continue;
            sim.m.observer = o;
            try {
                const auto up = update(belief[i], sim.m, view, mesh, c, fo);
                if (up.applied) {
                    belief[i] = up.posterior;
                    observed_by[i] = o;
                    ++res.metrics[i].updates;
                    ++res.updates;
                }
            } catch (const std::exception& ex) {
                diverge(i, ex);
            }
        }
        record(k + 1, observed_by);
    }

    double trans = 0.0, rot = 0.0;
    for (int i = 0; i < n_t; ++i) {
        auto& m = res.metrics[i];
        m.anees = acc[i].anees();
        m.rmse = acc[i].rmse();
        m.sigma3 = acc[i].sigma3_fraction();
        for (int j = 0; j < 12; ++j) m.rmse[j] *= scale(j);
        m.anees_rotational = acc[i].block_anees(0);
        m.anees_translational = acc[i].block_anees(1);
        for (int j = 0; j < 6; ++j) {
            rot += m.sigma3[j];
            trans += m.sigma3[6 + j];
        }
    }
    res.mean_sigma3_translational = trans / (6.0 * n_t);
    res.mean_sigma3_rotational = rot / (6.0 * n_t);
    return res;
}

void write_trace_csv(const TargetTrace& tr, const std::filesystem::path& path) {
    static const char* names[12] = {"att_x",    "att_y",    "att_z",   "omega_x_degphr",
                                    "omega_y_degphr", "omega_z_degphr", "r_x_km", "r_y_km",
                                    "r_z_km",   "v_x_mps",  "v_y_mps", "v_z_mps"};
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "t_s,observer";
    for (const char* n : names) out << ",err_" << n;
    for (const char* n : names) out << ",sigma_" << n;
    out << '\n';
    for (std::size_t k = 0; k < tr.t_s.size(); ++k) {
        out << csv::fmt(tr.t_s[k]) << ',' << tr.observed[k];
        for (int j = 0; j < 12; ++j) out << ',' << csv::fmt(tr.err[k](j));
        for (int j = 0; j < 12; ++j) out << ',' << csv::fmt(tr.sigma[k](j));
        out << '\n';
    }
}

} // namespace cislunar
