#include "cislunar/architecture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "cislunar/errors.hpp"

namespace cislunar {

namespace {

constexpr double kPi = std::numbers::pi;

int nearest_centroid(const Vec3& p, const std::vector<Vec3>& cents) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cents.size(); ++c) {
        const double d = (p - cents[c]).squaredNorm();
        if (d < bd) {
            bd = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

// One (satellite, grid step, target) visibility test.
bool observable(const Vec3& sat, const Vec3& sun, const Vec3& target, const CoverageInputs& in) {
    const Vec3 d = target - sat;
    const double r = d.norm();
    if (!(r > 0.0)) return false;
    const double m = in.constants.nd_to_m(1.0);
    const auto mag = sphere_magnitude(in.sphere, d * m, (target - sun) * m, in.radiometry);
    return visibility_check(mag, d / r, sun, in.constants.moon_position(),
                            in.constants.earth_position(), sat, in.policy) == Visibility::visible;
}

void check_inputs(const CoverageInputs& in) {
    if (!in.satellites || !in.targets || !in.sun) throw PreconditionError("coverage: missing inputs");
    for (const auto& s : *in.satellites)
        if (s.size() != in.sun->size())
            throw PreconditionError("coverage: satellite track length differs from grid");
}

double primary_distances(const CoverageInputs& in) {
    const Vec3 moon = in.constants.moon_position();
    const Vec3 earth = in.constants.earth_position();
    double s = 0.0;
    for (const auto& track : *in.satellites)
        for (const auto& p : track) s += (p - moon).norm() + (p - earth).norm();
    return s;
}

} // namespace

std::vector<Vec3> equiangular_directions(const RaySampling& s) {
    if (s.azimuth < 1 || s.polar < 1) throw PreconditionError("ray sampling counts must be >= 1");
    std::vector<Vec3> dirs;
    dirs.reserve(static_cast<std::size_t>(s.azimuth * s.polar));
    for (int p = 0; p < s.polar; ++p) {
        const double th = kPi * (p + 0.5) / s.polar;
        for (int a = 0; a < s.azimuth; ++a) {
            const double ph = 2.0 * kPi * a / s.azimuth;
            dirs.emplace_back(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        }
    }
    return dirs;
}

SurfaceSamples sample_zero_velocity_surfaces(const std::vector<double>& jc_list,
                                             const RaySampling& s, const SystemConstants& c) {
    const auto dirs = equiangular_directions(s);
    SurfaceSamples out;
    for (double jc : jc_list) {
        std::size_t hits = 0;
        for (const auto& u : dirs) {
            if (auto rho = zvs_radius(u, jc, c)) {
                out.points.push_back(*rho * u);
                out.jc_of_point.push_back(jc);
                ++hits;
            }
        }
        if (hits == 0) out.skipped.push_back(jc);
    }
    return out;
}

KMeansResult kmeans(const std::vector<Vec3>& points, int k, std::uint64_t seed, int max_iterations,
                    double tol, Exec exec) {
    const auto n = static_cast<int>(points.size());
    if (k < 1 || k > n) throw PreconditionError("kmeans: k must lie in [1, number of points]");

    // k-means++ seeding.
    std::mt19937_64 rng(seed);
    KMeansResult r;
    r.centroids.reserve(k);
    r.centroids.push_back(points[std::uniform_int_distribution<int>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    for (int i = 0; i < n; ++i) d2[i] = (points[i] - r.centroids[0]).squaredNorm();
    while (static_cast<int>(r.centroids.size()) < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        int pick = 0;
        if (total > 0.0) {
            pick = std::discrete_distribution<int>(d2.begin(), d2.end())(rng);
        } else {
            // Every point already coincides with a centroid.
            pick = static_cast<int>(r.centroids.size()) % n;
        }
        r.centroids.push_back(points[pick]);
        for (int i = 0; i < n; ++i) d2[i] = std::min(d2[i], (points[i] - points[pick]).squaredNorm());
    }

    r.labels.assign(n, 0);
    for (int it = 0; it < max_iterations; ++it) {
        r.iterations = it + 1;
        if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
            for (int i = 0; i < n; ++i) r.labels[i] = nearest_centroid(points[i], r.centroids);
        } else {
            for (int i = 0; i < n; ++i) r.labels[i] = nearest_centroid(points[i], r.centroids);
        }
        std::vector<Vec3> sum(k, Vec3::Zero());
        std::vector<int> cnt(k, 0);
        for (int i = 0; i < n; ++i) {
            sum[r.labels[i]] += points[i];
            ++cnt[r.labels[i]];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (cnt[c] == 0) continue;
            const Vec3 nc = sum[c] / cnt[c];
            shift = std::max(shift, (nc - r.centroids[c]).norm());
            r.centroids[c] = nc;
        }
        if (shift <= tol) {
            r.converged = true;
            break;
        }
    }
    return r;
}

StaticTargetSet generate_static_targets(const std::vector<double>& jc_list, const RaySampling& s,
                                        int k, std::uint64_t seed, const SystemConstants& c) {
    if (jc_list.empty()) throw PreconditionError("static targets: empty Jacobi constant list");
    const auto samples = sample_zero_velocity_surfaces(jc_list, s, c);
    if (static_cast<int>(samples.points.size()) < k)
        throw PreconditionError("static targets: k exceeds the number of surface samples (" +
                                std::to_string(samples.points.size()) + ")");
    StaticTargetSet t;
    t.points = kmeans(samples.points, k, seed).centroids;
    t.jc_sources = jc_list;
    t.skipped_jc = samples.skipped;
    t.raw_samples = samples.points.size();
    return t;
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw PreconditionError("linspace: n must be >= 1");
    if (n == 1) return {lo};
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    v.back() = hi;
    return v;
}

void Architecture::validate(std::size_t library_size) const {
    if (orbit.size() != kArchitectureSlots || count.size() != kArchitectureSlots)
        throw PreconditionError("architecture must have exactly 10 orbit slots");
    for (int i = 0; i < kArchitectureSlots; ++i) {
        if (orbit[i] < 0 || static_cast<std::size_t>(orbit[i]) >= library_size)
            throw PreconditionError("architecture orbit index out of range");
        if (count[i] < 1 || count[i] > kMaxSatellitesPerOrbit)
            throw PreconditionError("architecture satellite count outside [1, 10]");
    }
}

int Architecture::total_satellites() const { return std::accumulate(count.begin(), count.end(), 0); }

bool Architecture::unique() const {
    return std::set<int>(orbit.begin(), orbit.end()).size() == orbit.size();
}

int ObservationGrid::n_steps() const {
    return static_cast<int>(std::floor(horizon_days * 24.0 / step_hours + 1e-9)) + 1;
}

std::vector<double> ObservationGrid::times(const SystemConstants& c) const {
    std::vector<double> t(n_steps());
    for (int k = 0; k < n_steps(); ++k) t[k] = c.seconds_to_nd(k * step_hours * 3600.0);
    return t;
}

void ObservationGrid::validate() const {
    if (!(horizon_days >= 0.0)) throw ConfigError("grid.horizon_days must be >= 0");
    if (!(step_hours > 0.0)) throw ConfigError("grid.step_hours must be positive");
}

OrbitCoverage coverage_serial(const CoverageInputs& in) {
    check_inputs(in);
    const auto& sats = *in.satellites;
    const auto& targets = *in.targets;
    const auto& sun = *in.sun;
    OrbitCoverage out;
    out.per_target.assign(targets.size(), 0);
    for (std::size_t l = 0; l < targets.size(); ++l) {
        int n = 0;
        for (std::size_t k = 0; k < sun.size(); ++k)
            for (const auto& track : sats) n += observable(track[k], sun[k], targets[l], in) ? 1 : 0;
        out.per_target[l] = n;
    }
    for (int v : out.per_target) out.total += v;
    out.distance_sum = primary_distances(in);
    return out;
}

OrbitCoverage coverage_parallel(const CoverageInputs& in) {
    check_inputs(in);
    const auto& sats = *in.satellites;
    const auto& targets = *in.targets;
    const auto& sun = *in.sun;
    OrbitCoverage out;
    out.per_target.assign(targets.size(), 0);
    const auto nt = static_cast<long>(targets.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (long l = 0; l < nt; ++l) {
        int n = 0;
        for (std::size_t k = 0; k < sun.size(); ++k)
            for (const auto& track : sats) n += observable(track[k], sun[k], targets[l], in) ? 1 : 0;
        out.per_target[l] = n;
    }
    // Integer totals and a serial distance sum keep results order independent.
    for (int v : out.per_target) out.total += v;
    out.distance_sum = primary_distances(in);
    return out;
}

CostEvaluator::CostEvaluator(const OrbitLibrary& lib, std::vector<Vec3> targets, CostSettings s,
                             SystemConstants c)
    : lib_(lib), targets_(std::move(targets)), settings_(std::move(s)), c_(c) {
    settings_.grid.validate();
    settings_.policy.validate();
    settings_.sphere.validate();
    if (targets_.empty()) throw PreconditionError("cost: at least one static target required");
    times_ = settings_.grid.times(c_);
    const SunModel sun(settings_.sun_theta0);
    sun_.reserve(times_.size());
    for (double t : times_) sun_.push_back(sun.position_at(t, c_));
}

std::vector<std::vector<Vec3>> CostEvaluator::satellite_positions(int orbit, int n) const {
    const auto& o = lib_[static_cast<std::size_t>(orbit)];
    const auto phases = phase_fractions(n);
    // Sample every (satellite, step) epoch wrapped into one period, in order.
    std::vector<std::pair<double, std::pair<int, int>>> epochs;
    epochs.reserve(phases.size() * times_.size());
    for (int j = 0; j < n; ++j)
        for (std::size_t k = 0; k < times_.size(); ++k) {
            double tau = std::fmod(phases[j] * o.period + times_[k], o.period);
            if (tau < 0.0) tau += o.period;
            epochs.push_back({tau, {j, static_cast<int>(k)}});
        }
    std::sort(epochs.begin(), epochs.end());
    std::vector<double> taus(epochs.size());
    for (std::size_t i = 0; i < epochs.size(); ++i) taus[i] = epochs[i].first;
    const auto tr = propagate(o.ic, 0.0, o.period, c_, settings_.propagation_tol, taus);

    std::vector<std::vector<Vec3>> pos(n, std::vector<Vec3>(times_.size()));
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        const auto [j, k] = epochs[i].second;
        pos[j][k] = tr.states[i].position();
    }
    return pos;
}

const OrbitCoverage& CostEvaluator::coverage(int orbit, int n) const {
    const auto key = std::make_pair(orbit, n);
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const auto sats = satellite_positions(orbit, n);
    CoverageInputs in;
    in.satellites = &sats;
    in.targets = &targets_;
    in.sun = &sun_;
    in.policy = settings_.policy;
    in.sphere = settings_.sphere;
    in.radiometry = settings_.radiometry;
    in.constants = c_;
    OrbitCoverage cov = settings_.exec == Exec::parallel ? coverage_parallel(in) : coverage_serial(in);
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.emplace(key, std::move(cov)).first->second;
}

CostBreakdown CostEvaluator::evaluate(const Architecture& a) const {
    a.validate(lib_.size());
    CostBreakdown b;
    const double nt = static_cast<double>(targets_.size());
    const double ns = static_cast<double>(times_.size());

    double xi_sum = 0.0;
    for (int i = 0; i < kArchitectureSlots; ++i)
        xi_sum += a.count[i] * lib_[static_cast<std::size_t>(a.orbit[i])].stability_index;
    b.lambda[0] = 1.0 / a.total_satellites();
    b.lambda[1] = 1.0 / xi_sum;
    b.lambda[5] = a.unique() ? 1.0 : 0.0;

    try {
        long visible = 0;
        double dist = 0.0;
        std::vector<double> per_target(targets_.size(), 0.0);
        for (int i = 0; i < kArchitectureSlots; ++i) {
            const auto& cov = coverage(a.orbit[i], a.count[i]);
            visible += cov.total;
            dist += cov.distance_sum;
            for (std::size_t l = 0; l < targets_.size(); ++l)
                per_target[l] += static_cast<double>(cov.per_target[l]) / a.count[i];
        }
        b.lambda[2] = static_cast<double>(visible) / (nt * ns);
        double log_sum = 0.0;
        for (double v : per_target) log_sum += std::log10(v == 0.0 ? 1.0 : v);
        b.lambda[3] = log_sum / (nt * ns);
        b.lambda[4] = (nt * ns) / dist;
    } catch (const Error& e) {
        b.failed = true;
        b.error = e.what();
        b.j = 0.0;
        return b;
    }
    double prod = 1.0;
    for (double l : b.lambda) prod *= l;
    b.j = std::abs(prod);
    return b;
}

std::vector<int> strided_subset(std::size_t n, int max_count) {
    if (max_count < 0) throw PreconditionError("strided_subset: negative count");
    const std::size_t m = max_count == 0 ? n : std::min<std::size_t>(n, max_count);
    std::vector<int> out(m);
    for (std::size_t k = 0; k < m; ++k) out[k] = static_cast<int>(k * n / m);
    return out;
}

OrbitLibrary library_subset(const OrbitLibrary& lib, const std::vector<int>& indices) {
    OrbitLibrary out;
    out.provenance = lib.provenance;
    for (int i : indices) out.orbits.push_back(lib[static_cast<std::size_t>(i)]);
    return out;
}

DesignSpace architecture_space(std::size_t library_size) {
    if (library_size < 1) throw PreconditionError("architecture space needs a nonempty library");
    DesignSpace s;
    for (int i = 0; i < kArchitectureSlots; ++i)
        s.dims.push_back(Dimension::categorical(static_cast<int>(library_size), "orbit" + std::to_string(i)));
    for (int i = 0; i < kArchitectureSlots; ++i)
        s.dims.push_back(Dimension::integer(1, kMaxSatellitesPerOrbit, "count" + std::to_string(i)));
    return s;
}

Architecture decode_architecture(const Point& p) {
    if (p.size() != 2 * kArchitectureSlots) throw PreconditionError("architecture genome has wrong length");
    Architecture a;
    for (int i = 0; i < kArchitectureSlots; ++i) {
        a.orbit.push_back(static_cast<int>(p[i]));
        a.count.push_back(static_cast<int>(p[kArchitectureSlots + i]));
    }
    return a;
}

Point encode_architecture(const Architecture& a) {
    Point p;
    for (int v : a.orbit) p.push_back(v);
    for (int v : a.count) p.push_back(v);
    return p;
}

ArchitectureResult optimize_architecture(const CostEvaluator& eval, const OptimizerConfig& cfg,
                                         Algorithm algo, bool minimize) {
    if (eval.library().size() < kArchitectureSlots)
        throw PreconditionError("architecture optimization needs at least 10 library orbits");
    const auto space = architecture_space(eval.library().size());
    auto objective = [&](const Point& p) {
        const auto b = eval.evaluate(decode_architecture(p));
        return minimize ? -b.j : b.j;
    };
    ArchitectureResult r;
    r.run = optimize(space, objective, cfg, algo);
    if (r.run.best_index < 0) throw Error("architecture optimization: every trial failed");
    r.best = decode_architecture(r.run.best.point);
    r.cost = eval.evaluate(r.best);
    return r;
}

} // namespace cislunar
