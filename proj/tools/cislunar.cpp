// Command-line driver: orbit library, architecture optimization (task1),
// tasking and estimation (task2), and report export.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cislunar/architecture.hpp"
#include "cislunar/config.hpp"
#include "cislunar/csv.hpp"
#include "cislunar/errors.hpp"
#include "cislunar/orbits.hpp"
#include "cislunar/tasking.hpp"

#ifndef CISLUNAR_VERSION
#define CISLUNAR_VERSION "dev"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cislunar;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr double kPi = 3.14159265358979323846;

fs::path output_root() {
    const char* env = std::getenv("CISLUNAR_OUT");
    return env && *env ? fs::path(env) : fs::path("results");
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Records what produced an output directory.
class Manifest {
public:
    Manifest(std::string command, int argc, char** argv) : command_(std::move(command)) {
        for (int i = 0; i < argc; ++i) argv_.push_back(argv[i]);
        started_ = utc_now();
        t0_ = std::chrono::steady_clock::now();
    }

    void output(const fs::path& p) { outputs_.push_back(p.string()); }
    void seed(const std::string& name, std::uint64_t v) { seeds_[name] = v; }

    void write(const fs::path& dir, const Config& cfg) const {
        json j;
        j["command"] = command_;
        j["argv"] = argv_;
        j["version"] = CISLUNAR_VERSION;
        j["started_utc"] = started_;
        j["wall_clock_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        j["seeds"] = seeds_;
        j["outputs"] = outputs_;
        j["config"] = dump_config(cfg);
        write_json(j, dir / "manifest.json");
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    std::string started_;
    std::chrono::steady_clock::time_point t0_;
    json seeds_ = json::object();
    std::vector<std::string> outputs_;
};

Config load_or_default(const std::string& path) {
    return path.empty() ? Config{} : load_config(path);
}

/// "30m", "1h", "90s" or bare minutes.
double parse_interval_minutes(const std::string& text) {
    if (text.empty()) throw ConfigError("empty tasking interval");
    const char unit = text.back();
    double scale = 1.0;
    std::string num = text;
    if (unit == 's' || unit == 'm' || unit == 'h') {
        num.pop_back();
        scale = unit == 's' ? 1.0 / 60.0 : unit == 'h' ? 60.0 : 1.0;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(num, &used);
        if (used != num.size() || !(v > 0.0)) throw std::invalid_argument(text);
        return v * scale;
    } catch (const std::exception&) {
        throw ConfigError("bad tasking interval '" + text + "' (expected e.g. 30m, 1h, 90s)");
    }
}

std::string interval_label(double minutes) {
    if (std::fmod(minutes, 60.0) == 0.0) return std::to_string(static_cast<long>(minutes / 60.0)) + "h";
    if (std::fmod(minutes, 1.0) == 0.0) return std::to_string(static_cast<long>(minutes)) + "m";
    return csv::fmt(minutes * 60.0) + "s";
}

json architecture_json(const Architecture& a) {
    return {{"orbit", a.orbit}, {"count", a.count}};
}

json cost_json(const CostBreakdown& b) {
    return {{"j", b.j}, {"lambda", b.lambda}, {"failed", b.failed}, {"error", b.error}};
}

// ---- library ------------------------------------------------------------------

int cmd_library(const std::string& config_path, std::string seeds, fs::path out, int argc,
                char** argv) {
    Manifest man("library", argc, argv);
    const Config cfg = load_or_default(config_path);
    if (seeds.empty()) seeds = cfg.library.seed_file;
    if (out.empty()) out = output_root() / "library";
    fs::create_directories(out);

    const auto seed_rows = read_seed_file(seeds);
    if (seed_rows.empty()) std::cerr << "warning: seed file " << seeds << " has no seeds\n";
    std::vector<SeedPlan> plan;
    for (const auto& s : seed_rows) {
        const auto f = cfg.library.for_family(s.family);
        plan.push_back({s, f.dx, f.count});
    }
    CorrectorOptions opt;
    opt.tolerance = cfg.library.corrector_tol;
    opt.integration_tol = cfg.library.integration_tol;
    auto build = build_library(plan, cfg.system, opt);
    build.library.provenance = "seeds " + fs::path(seeds).filename().string();

    const fs::path lib_path = out / "library.csv";
    write_library_csv(build.library, lib_path);
    {
        std::ofstream log(out / "library_log.txt");
        for (const auto& line : build.log) {
            log << line << '\n';
            std::cerr << line << '\n';
        }
    }
    std::cout << "library: " << build.library.size() << " orbits -> " << lib_path.string() << '\n';
    man.output(lib_path);
    man.output(out / "library_log.txt");
    man.write(out, cfg);
    return 0;
}

// ---- task1 --------------------------------------------------------------------

int cmd_task1(const std::string& config_path, std::string library, std::vector<std::string> algos,
              bool minimize, int evals, long seed, fs::path out, int argc, char** argv) {
    Manifest man("task1", argc, argv);
    Config cfg = load_or_default(config_path);
    if (!library.empty()) cfg.task1.library = library;
    if (!algos.empty()) cfg.task1.algorithms = algos;
    if (minimize) cfg.task1.minimize = true;
    if (evals > 0) cfg.task1.optimizer.max_evals = evals;
    if (seed >= 0) cfg.task1.optimizer.seed = static_cast<std::uint64_t>(seed);
    cfg.validate();
    if (out.empty()) out = output_root() / "task1";
    fs::create_directories(out);
    const auto& t1 = cfg.task1;

    const OrbitLibrary full = read_library_csv(t1.library);
    const auto indices = strided_subset(full.size(), t1.max_library_orbits);
    const OrbitLibrary lib = library_subset(full, indices);
    if (lib.size() < static_cast<std::size_t>(kArchitectureSlots))
        throw ConfigError("task1 needs a library of at least 10 orbits, got " +
                          std::to_string(lib.size()));

    const auto jc = linspace(t1.jc_min, t1.jc_max, t1.jc_count);
    const auto targets = generate_static_targets(jc, {t1.rays_azimuth, t1.rays_polar}, t1.n_targets,
                                                 t1.kmeans_seed, cfg.system);
    for (double s : targets.skipped_jc)
        std::cerr << "warning: Jacobi constant " << s << " has no zero-velocity surface hits\n";
    {
        std::ofstream f(out / "targets.csv");
        f << "index,x,y,z\n";
        for (std::size_t i = 0; i < targets.points.size(); ++i) {
            const auto& p = targets.points[i];
            f << i << ',' << csv::fmt(p.x()) << ',' << csv::fmt(p.y()) << ',' << csv::fmt(p.z()) << '\n';
        }
        man.output(out / "targets.csv");
    }

    CostSettings cs;
    cs.grid = {t1.horizon_days, t1.step_hours};
    cs.policy = cfg.policy;
    cs.sphere = {t1.sphere_radius_m, t1.sphere_diffuse};
    cs.radiometry = cfg.radiometry;
    cs.sun_theta0 = cfg.sun_theta0_deg * kPi / 180.0;
    cs.propagation_tol = cfg.propagation_tol;
    const CostEvaluator eval(lib, targets.points, cs, cfg.system);

    json result;
    result["library"] = fs::absolute(t1.library).string();
    result["library_indices"] = indices;
    result["minimize"] = t1.minimize;
    result["n_targets"] = targets.points.size();
    json algos_json = json::object();
    std::ofstream summary(out / "summary.csv");
    summary << "algorithm,best_j,best_trial,evaluations,early_stopped\n";
    man.seed("optimizer", t1.optimizer.seed);
    man.seed("kmeans", t1.kmeans_seed);

    for (const auto& name : t1.algorithms) {
        const Algorithm algo = parse_algorithm(name);
        const auto r = optimize_architecture(eval, t1.optimizer, algo, t1.minimize);
        const fs::path hist = out / ("history_" + name + ".csv");
        write_history_csv(architecture_space(lib.size()), r.run.history, hist);
        man.output(hist);

        Architecture mapped = r.best;
        for (auto& o : mapped.orbit) o = indices[static_cast<std::size_t>(o)];
        algos_json[name] = {{"best_j", r.cost.j},
                            {"cost", cost_json(r.cost)},
                            {"architecture", architecture_json(mapped)},
                            {"architecture_subset_indices", architecture_json(r.best)},
                            {"best_trial", r.run.best_index},
                            {"evaluations", r.run.history.size()},
                            {"early_stopped", r.run.early_stopped}};
        summary << name << ',' << csv::fmt(r.cost.j) << ',' << r.run.best_index << ','
                << r.run.history.size() << ',' << (r.run.early_stopped ? 1 : 0) << '\n';
        std::cout << name << ": best J = " << r.cost.j << " after " << r.run.history.size()
                  << " evaluations\n";
    }
    result["algorithms"] = algos_json;
    write_json(result, out / "result.json");
    man.output(out / "result.json");
    man.output(out / "summary.csv");
    man.write(out, cfg);
    return 0;
}

// ---- task2 --------------------------------------------------------------------

struct Task2Inputs {
    OrbitLibrary library;
    std::vector<ObserverSpec> observers;
};

Task2Inputs load_task2_inputs(const Config& cfg) {
    const fs::path dir = cfg.task2.architecture;
    const json r = read_json(dir / "result.json");
    Task2Inputs in;
    fs::path lib = r.at("library").get<std::string>();
    if (lib.is_relative()) lib = dir / lib;
    in.library = read_library_csv(lib);
    const auto& algos = r.at("algorithms");
    if (!algos.contains(cfg.task2.architecture_algorithm))
        throw ConfigError(dir.string() + "/result.json has no '" + cfg.task2.architecture_algorithm +
                          "' architecture");
    const auto& a = algos.at(cfg.task2.architecture_algorithm).at("architecture");
    Architecture arch{a.at("orbit").get<std::vector<int>>(), a.at("count").get<std::vector<int>>()};
    arch.validate(in.library.size());
    in.observers = expand_observers(arch);
    if (cfg.task2.max_observers > 0 && in.observers.size() > static_cast<std::size_t>(cfg.task2.max_observers))
        in.observers.resize(cfg.task2.max_observers);
    return in;
}

json metrics_json(const Task2Result& r, const OrbitLibrary& lib) {
    json targets = json::array();
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
        const auto& m = r.metrics[i];
        targets.push_back({{"index", i},
                           {"orbit", r.targets[i].orbit},
                           {"family", lib[r.targets[i].orbit].family},
                           {"phase", r.targets[i].phase},
                           {"anees", m.anees},
                           {"rmse", m.rmse},
                           {"sigma3_fraction", m.sigma3},
                           {"anees_translational", m.anees_translational},
                           {"anees_rotational", m.anees_rotational},
                           {"updates", m.updates},
                           {"diverged", m.diverged},
                           {"error", m.error}});
    }
    return {{"component_order", {"att_x", "att_y", "att_z", "omega_x", "omega_y", "omega_z", "r_x",
                                 "r_y", "r_z", "v_x", "v_y", "v_z"}},
            {"rmse_units", {"grp", "grp", "grp", "deg/hr", "deg/hr", "deg/hr", "km", "km", "km",
                            "m/s", "m/s", "m/s"}},
            {"mean_sigma3_translational", r.mean_sigma3_translational},
            {"mean_sigma3_rotational", r.mean_sigma3_rotational},
            {"predicts", r.predicts},
            {"updates", r.updates},
            {"targets", targets}};
}

void write_task2_outputs(const Task2Result& r, const OrbitLibrary& lib, const fs::path& dir,
                         Manifest& man, const Config& cfg) {
    fs::create_directories(dir / "traces");
    for (std::size_t i = 0; i < r.traces.size(); ++i) {
        const fs::path p = dir / "traces" / ("target_" + std::to_string(i) + ".csv");
        write_trace_csv(r.traces[i], p);
        man.output(p);
    }
    write_json(metrics_json(r, lib), dir / "metrics.json");
    {
        std::ofstream a(dir / "assignments.csv");
        a << "epoch_s,observer,target,mi\n";
        for (const auto& as : r.assignments)
            for (std::size_t o = 0; o < as.target_of.size(); ++o)
                a << csv::fmt(cfg.system.t_star_s * as.t) << ',' << o << ',' << as.target_of[o] << ','
                  << csv::fmt(as.mi) << '\n';
    }
    man.output(dir / "metrics.json");
    man.output(dir / "assignments.csv");
    man.write(dir, cfg);
}

int cmd_task2(const std::string& config_path, int nt, std::string observers_from, std::string tst,
              long seed, fs::path out, int argc, char** argv) {
    Config cfg = load_or_default(config_path);
    if (nt > 0) cfg.task2.n_targets = nt;
    if (!observers_from.empty()) cfg.task2.architecture = observers_from;
    if (seed >= 0) cfg.task2.seed = static_cast<std::uint64_t>(seed);
    std::vector<double> intervals;
    if (!tst.empty())
        for (const auto& item : csv::split(tst)) intervals.push_back(parse_interval_minutes(item));
    if (intervals.empty()) intervals.push_back(cfg.task2.tasking_interval_min);
    cfg.validate();
    if (out.empty()) out = output_root() / "task2";

    const Task2Inputs in = load_task2_inputs(cfg);
    if (in.observers.empty()) throw ConfigError("architecture has no observers");
    if (cfg.task2.n_targets < static_cast<int>(in.observers.size()))
        throw ConfigError("task2.n_targets (" + std::to_string(cfg.task2.n_targets) +
                          ") must be at least the number of observers (" +
                          std::to_string(in.observers.size()) + ")");
    const auto targets = choose_targets(in.library, cfg.task2.target_families, cfg.task2.n_targets,
                                        cfg.task2.target_seed);

    for (double minutes : intervals) {
        Manifest man("task2", argc, argv);
        man.seed("noise", cfg.task2.seed);
        man.seed("targets", cfg.task2.target_seed);
        Config run_cfg = cfg;
        run_cfg.task2.tasking_interval_min = minutes;
        run_cfg.validate();
        const fs::path dir = intervals.size() > 1 ? out / ("tst_" + interval_label(minutes)) : out;
        fs::create_directories(dir);
        Task2Options opt;
        opt.metrics_from_fraction = run_cfg.task2.metrics_from_fraction;
        const auto r = run_task2(in.library, targets, in.observers,
                                 run_cfg.task2.settings(run_cfg.policy, run_cfg.sun_theta0_deg * kPi / 180.0),
                                 run_cfg.system, opt);
        write_task2_outputs(r, in.library, dir, man, run_cfg);
        std::cout << "T_ST " << interval_label(minutes) << ": 3-sigma coverage translational "
                  << r.mean_sigma3_translational << ", rotational " << r.mean_sigma3_rotational
                  << ", updates " << r.updates << " -> " << dir.string() << '\n';
    }
    return 0;
}

// ---- report -------------------------------------------------------------------

void report_task1(const fs::path& dir) {
    const json r = read_json(dir / "result.json");
    std::ofstream conv(dir / "convergence.csv");
    conv << "algorithm,trial,best_reward\n";
    for (const auto& [name, a] : r.at("algorithms").items()) {
        std::cout << name << ": best J " << a.at("best_j").get<double>() << " (trial "
                  << a.at("best_trial").get<int>() << " of " << a.at("evaluations").get<int>() << ")\n";
        const auto hist = csv::read(dir / ("history_" + name + ".csv"), true);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& row : hist.rows) {
            const double v = csv::parse_double(row.at(1));
            if (std::isfinite(v)) best = std::max(best, v);
            conv << name << ',' << row.at(0) << ',' << csv::fmt(best) << '\n';
        }
    }
    std::cout << "wrote " << (dir / "convergence.csv").string() << '\n';
}

void report_task2(const fs::path& dir) {
    std::vector<fs::path> runs;
    if (fs::exists(dir / "metrics.json")) runs.push_back(dir);
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "metrics.json")) runs.push_back(e.path());
    std::sort(runs.begin(), runs.end());
    std::ofstream table(dir / "coverage.csv");
    table << "run,target,family,sigma3_translational,sigma3_rotational,anees_translational,anees_rotational,diverged\n";
    for (const auto& run : runs) {
        const json m = read_json(run / "metrics.json");
        std::cout << run.filename().string() << ": translational " << m.at("mean_sigma3_translational").get<double>()
                  << ", rotational " << m.at("mean_sigma3_rotational").get<double>() << '\n';
        for (const auto& t : m.at("targets")) {
            const auto s3 = t.at("sigma3_fraction").get<std::vector<double>>();
            double rot = 0.0, tr = 0.0;
            for (int j = 0; j < 6; ++j) {
                rot += s3[j] / 6.0;
                tr += s3[6 + j] / 6.0;
            }
            table << run.filename().string() << ',' << t.at("index").get<int>() << ','
                  << t.at("family").get<std::string>() << ',' << csv::fmt(tr) << ',' << csv::fmt(rot)
                  << ',' << csv::fmt(t.at("anees_translational").get<double>()) << ','
                  << csv::fmt(t.at("anees_rotational").get<double>()) << ','
                  << (t.at("diverged").get<bool>() ? 1 : 0) << '\n';
        }
    }
    std::cout << "wrote " << (dir / "coverage.csv").string() << '\n';
}

int cmd_report(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("no results directory " + dir.string());
    bool any = false;
    if (fs::exists(dir / "result.json")) {
        report_task1(dir);
        any = true;
    }
    bool task2 = fs::exists(dir / "metrics.json");
    for (const auto& e : fs::directory_iterator(dir))
        task2 = task2 || (e.is_directory() && fs::exists(e.path() / "metrics.json"));
    if (task2) {
        report_task2(dir);
        any = true;
    }
    if (!any) throw ConfigError(dir.string() + " holds neither task1 nor task2 results");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cislunar observer architecture design and sensor tasking"};
    app.require_subcommand(1);
    app.set_version_flag("--version", CISLUNAR_VERSION);

    std::string config, seeds, library, observers_from, tst, out;
    std::vector<std::string> algos;
    bool minimize = false;
    int evals = 0, nt = 0;
    long seed = -1;

    auto* lib_cmd = app.add_subcommand("library", "Correct and continue orbit families from a seed file");
    lib_cmd->add_option("-c,--config", config, "YAML config")->check(CLI::ExistingFile);
    lib_cmd->add_option("--seeds", seeds, "seed CSV (overrides library.seed_file)");
    lib_cmd->add_option("-o,--out", out, "output directory (default $CISLUNAR_OUT/library)");

    auto* t1 = app.add_subcommand("task1", "Static targets plus architecture optimization");
    t1->add_option("-c,--config", config, "YAML config")->check(CLI::ExistingFile);
    t1->add_option("--library", library, "library CSV (overrides task1.library)");
    t1->add_option("--algo", algos, "optimizer, repeatable: tpe, random");
    t1->add_flag("--minimize", minimize, "minimize J instead of maximizing it");
    t1->add_option("--evals", evals, "evaluation budget override");
    t1->add_option("--seed", seed, "optimizer seed override");
    t1->add_option("-o,--out", out, "output directory (default $CISLUNAR_OUT/task1)");

    auto* t2 = app.add_subcommand("task2", "Sensor tasking and joint attitude/orbit estimation");
    t2->add_option("-c,--config", config, "YAML config")->check(CLI::ExistingFile);
    t2->add_option("--nt", nt, "number of targets");
    t2->add_option("--observers-from", observers_from, "task1 results directory");
    t2->add_option("--tst", tst, "tasking interval(s), comma separated: 30m,1h,4h");
    t2->add_option("--seed", seed, "noise seed override");
    t2->add_option("-o,--out", out, "output directory (default $CISLUNAR_OUT/task2)");

    auto* rep = app.add_subcommand("report", "Export plot-ready CSVs from a results directory");
    rep->add_option("dir", out, "task1 or task2 results directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*lib_cmd) return cmd_library(config, seeds, out, argc, argv);
        if (*t1) return cmd_task1(config, library, algos, minimize, evals, seed, out, argc, argv);
        if (*t2) return cmd_task2(config, nt, observers_from, tst, seed, out, argc, argv);
        if (*rep) return cmd_report(out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}
