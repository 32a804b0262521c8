#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace cislunar {

struct Dimension {
    enum class Kind { categorical, integer, continuous };

    Kind kind = Kind::categorical;
    std::string name;
    double lo = 0.0; ///< categorical: 0
    double hi = 0.0; ///< categorical: choices - 1

    static Dimension categorical(int choices, std::string name = {});
    static Dimension integer(long lo, long hi, std::string name = {});
    static Dimension continuous(double lo, double hi, std::string name = {});

    bool discrete() const { return kind != Kind::continuous; }
    int choices() const { return static_cast<int>(hi) + 1; }
};

/// One value per dimension; categorical and integer values are integral doubles.
using Point = std::vector<double>;

struct DesignSpace {
    std::vector<Dimension> dims;

    void validate() const;
    bool contains(const Point& p) const;
    std::size_t size() const { return dims.size(); }
};

struct Trial {
    Point point;
    double reward = 0.0; ///< larger is better; NaN when failed
    bool ok = true;
};

struct OptimizerConfig {
    int max_evals = 10000;
    int early_stop_patience = 500; ///< non-improving trials after warmup; <= 0 disables
    double gamma = 0.25; ///< good set holds the top ceil(gamma * sqrt(n)) trials
    int n_candidates = 24;
    int n_startup = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class Algorithm { random, tpe };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

using Rng = std::mt19937_64;

Point random_suggest(const DesignSpace& space, Rng& rng);

/// Density-ratio suggestion from the history; random during warmup or when
/// no trial has succeeded yet. Categorical tables carry a unit prior weight
/// spread evenly over the choices.
Point tpe_suggest(const DesignSpace& space, const std::vector<Trial>& history,
                  const OptimizerConfig& cfg, Rng& rng);

struct OptimizeResult {
    Trial best;
    int best_index = -1;
    std::vector<Trial> history;
    bool early_stopped = false;
};

using Objective = std::function<double(const Point&)>;

/// Sequential suggest / evaluate loop. Exceptions from the objective are
/// recorded as failed trials.
OptimizeResult optimize(const DesignSpace& space, const Objective& objective,
                        const OptimizerConfig& cfg, Algorithm algo);

/// `trial,reward,<dimension names>`; failed trials carry reward nan.
void write_history_csv(const DesignSpace& space, const std::vector<Trial>& history,
                       const std::filesystem::path& path);

} // namespace cislunar
