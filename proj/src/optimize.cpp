#include "cislunar/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "cislunar/csv.hpp"
#include "cislunar/errors.hpp"

namespace cislunar {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

double normal_pdf(double x, double mu, double s) {
    const double z = (x - mu) / s;
    return std::exp(-0.5 * z * z) / (s * kSqrt2Pi);
}

double normal_cdf(double x, double mu, double s) {
    return 0.5 * std::erfc(-(x - mu) / (s * std::sqrt(2.0)));
}

/// Parzen mixture on [lo, hi]: truncated Gaussians at the observations plus
/// one uniform prior component.
class ParzenDensity {
public:
    ParzenDensity(std::vector<double> centers, double lo, double hi, double gamma)
        : centers_(std::move(centers)), lo_(lo), hi_(hi) {
        const double n = static_cast<double>(std::max<std::size_t>(centers_.size(), 1));
        sigma_ = (hi - lo) * std::max(gamma, 1.0 / std::sqrt(n));
        mass_.reserve(centers_.size());
        for (double c : centers_)
            mass_.push_back(normal_cdf(hi_, c, sigma_) - normal_cdf(lo_, c, sigma_));
    }

    double pdf(double x) const {
        double s = 1.0 / (hi_ - lo_);
        for (std::size_t i = 0; i < centers_.size(); ++i)
            s += normal_pdf(x, centers_[i], sigma_) / mass_[i];
        return s / static_cast<double>(centers_.size() + 1);
    }

    double sample(Rng& rng) const {
        std::uniform_int_distribution<std::size_t> pick(0, centers_.size());
        const std::size_t k = pick(rng);
        if (k == centers_.size()) return std::uniform_real_distribution<double>(lo_, hi_)(rng);
        std::normal_distribution<double> g(centers_[k], sigma_);
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double x = g(rng);
            if (x >= lo_ && x <= hi_) return x;
        }
        return std::clamp(centers_[k], lo_, hi_);
    }

private:
    std::vector<double> centers_;
    std::vector<double> mass_;
    double lo_, hi_, sigma_ = 1.0;
};

} // namespace

Dimension Dimension::categorical(int choices, std::string name) {
    if (choices < 1) throw PreconditionError("categorical dimension needs at least one choice");
    return {Kind::categorical, std::move(name), 0.0, static_cast<double>(choices - 1)};
}

Dimension Dimension::integer(long lo, long hi, std::string name) {
    if (hi < lo) throw PreconditionError("integer dimension with empty range");
    return {Kind::integer, std::move(name), static_cast<double>(lo), static_cast<double>(hi)};
}

Dimension Dimension::continuous(double lo, double hi, std::string name) {
    if (!(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw PreconditionError("continuous dimension with empty range");
    return {Kind::continuous, std::move(name), lo, hi};
}

void DesignSpace::validate() const {
    if (dims.empty()) throw PreconditionError("design space has no dimensions");
    for (const auto& d : dims)
        if (!(d.hi >= d.lo)) throw PreconditionError("design space dimension with empty range");
}

bool DesignSpace::contains(const Point& p) const {
    if (p.size() != dims.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& d = dims[i];
        if (!(p[i] >= d.lo && p[i] <= d.hi)) return false;
        if (d.discrete() && p[i] != std::round(p[i])) return false;
    }
    return true;
}

void OptimizerConfig::validate() const {
    if (max_evals < 1) throw ConfigError("optimizer.max_evals must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("optimizer.gamma must lie in (0, 1)");
    if (n_candidates < 1) throw ConfigError("optimizer.n_candidates must be >= 1");
    if (n_startup < 0) throw ConfigError("optimizer.n_startup must be >= 0");
}

const char* to_string(Algorithm a) { return a == Algorithm::tpe ? "tpe" : "random"; }

Algorithm parse_algorithm(const std::string& s) {
    if (s == "tpe") return Algorithm::tpe;
    if (s == "random") return Algorithm::random;
    throw ConfigError("unknown optimizer algorithm '" + s + "' (expected tpe or random)");
}

Point random_suggest(const DesignSpace& space, Rng& rng) {
    Point p(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& d = space.dims[i];
        if (d.discrete()) {
            std::uniform_int_distribution<long> u(static_cast<long>(d.lo), static_cast<long>(d.hi));
            p[i] = static_cast<double>(u(rng));
        } else {
            p[i] = d.lo == d.hi ? d.lo : std::uniform_real_distribution<double>(d.lo, d.hi)(rng);
        }
    }
    return p;
}

Point tpe_suggest(const DesignSpace& space, const std::vector<Trial>& history,
                  const OptimizerConfig& cfg, Rng& rng) {
    if (static_cast<int>(history.size()) < cfg.n_startup) return random_suggest(space, rng);
    std::vector<const Trial*> ok;
    for (const auto& t : history)
        if (t.ok && std::isfinite(t.reward)) ok.push_back(&t);
    if (ok.empty()) return random_suggest(space, rng);

    // Stable order keeps ties deterministic: earlier trials rank first.
    std::stable_sort(ok.begin(), ok.end(),
                     [](const Trial* a, const Trial* b) { return a->reward > b->reward; });
    const auto n_good = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.gamma * std::sqrt(static_cast<double>(ok.size())))));
    const std::vector<const Trial*> good(ok.begin(), ok.begin() + n_good);
    const std::vector<const Trial*> bad(ok.begin() + n_good, ok.end());

    const std::size_t nd = space.size();
    std::vector<Point> cand(cfg.n_candidates, Point(nd));
    std::vector<double> score(cfg.n_candidates, 0.0);

    for (std::size_t d = 0; d < nd; ++d) {
        const auto& dim = space.dims[d];
        if (dim.kind == Dimension::Kind::categorical) {
            const int k = dim.choices();
            const double prior = 1.0 / k;
            std::vector<double> l(k, prior), g(k, prior);
            for (const auto* t : good) l[static_cast<int>(t->point[d])] += 1.0;
            for (const auto* t : bad) g[static_cast<int>(t->point[d])] += 1.0;
            const double lt = static_cast<double>(good.size()) + 1.0;
            const double gt = static_cast<double>(bad.size()) + 1.0;
            std::discrete_distribution<int> draw(l.begin(), l.end());
            for (int c = 0; c < cfg.n_candidates; ++c) {
                const int v = draw(rng);
                cand[c][d] = v;
                score[c] += std::log(l[v] / lt) - std::log(g[v] / gt);
            }
        } else if (dim.lo == dim.hi) {
            for (auto& c : cand) c[d] = dim.lo;
        } else {
            const bool integral = dim.kind == Dimension::Kind::integer;
            const double lo = integral ? dim.lo - 0.5 : dim.lo;
            const double hi = integral ? dim.hi + 0.5 : dim.hi;
            std::vector<double> gv, bv;
            for (const auto* t : good) gv.push_back(t->point[d]);
            for (const auto* t : bad) bv.push_back(t->point[d]);
            const ParzenDensity l(gv, lo, hi, cfg.gamma);
            const ParzenDensity g(bv, lo, hi, cfg.gamma);
            for (int c = 0; c < cfg.n_candidates; ++c) {
                double x = l.sample(rng);
                if (integral) x = std::clamp(std::round(x), dim.lo, dim.hi);
                cand[c][d] = x;
                score[c] += std::log(l.pdf(x)) - std::log(g.pdf(x));
            }
        }
    }
    const auto best = std::max_element(score.begin(), score.end()) - score.begin();
    return cand[best];
}

OptimizeResult optimize(const DesignSpace& space, const Objective& objective,
                        const OptimizerConfig& cfg, Algorithm algo) {
    space.validate();
    cfg.validate();
    Rng rng(cfg.seed);
    OptimizeResult res;
    res.history.reserve(cfg.max_evals);
    int stale = 0;
    for (int i = 0; i < cfg.max_evals; ++i) {
        Trial t;
        t.point = algo == Algorithm::tpe ? tpe_suggest(space, res.history, cfg, rng)
                                         : random_suggest(space, rng);
        try {
            t.reward = objective(t.point);
            t.ok = std::isfinite(t.reward);
        } catch (const std::exception&) {
            t.ok = false;
        }
        if (!t.ok) t.reward = std::numeric_limits<double>::quiet_NaN();
        res.history.push_back(t);

        if (t.ok && (res.best_index < 0 || t.reward > res.best.reward)) {
            res.best = t;
            res.best_index = i;
            stale = 0;
        } else if (i >= cfg.n_startup) {
            ++stale;
        }
        if (cfg.early_stop_patience > 0 && stale >= cfg.early_stop_patience) {
            res.early_stopped = i + 1 < cfg.max_evals;
            break;
        }
    }
    return res;
}

void write_history_csv(const DesignSpace& space, const std::vector<Trial>& history,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "trial,reward";
    for (std::size_t d = 0; d < space.size(); ++d) {
        const auto& n = space.dims[d].name;
        out << ',' << (n.empty() ? "x" + std::to_string(d) : n);
    }
    out << '\n';
    for (std::size_t i = 0; i < history.size(); ++i) {
        out << i << ',' << csv::fmt(history[i].reward);
        for (double v : history[i].point) out << ',' << csv::fmt(v);
        out << '\n';
    }
}

} // namespace cislunar
