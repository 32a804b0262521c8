#include "cislunar/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "cislunar/csv.hpp"
#include "cislunar/errors.hpp"

namespace cislunar {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kArcsec = kPi / (180.0 * 3600.0);

std::string where(const YAML::Node& n) {
    const auto m = n.Mark();
    return m.is_null() ? std::string{} : " (line " + std::to_string(m.line + 1) + ")";
}

/// Map reader that remembers consumed keys so leftovers can be reported.
class Section {
public:
    Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
        if (node_ && !node_.IsNull() && !node_.IsMap())
            throw ConfigError(path_ + ": expected a mapping" + where(node_));
    }

    template <typename T> void read(const std::string& key, T& dst) {
        const YAML::Node v = take(key);
        if (!v) return;
        try {
            dst = v.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(full(key) + ": invalid value '" + scalar(v) + "'" + where(v));
        }
    }

    void read(const std::string& key, Vec3& dst) {
        const YAML::Node v = take(key);
        if (!v) return;
        if (!v.IsSequence() || v.size() != 3)
            throw ConfigError(full(key) + ": expected a list of three numbers" + where(v));
        for (std::size_t i = 0; i < 3; ++i) {
            try {
                dst(static_cast<Eigen::Index>(i)) = v[i].as<double>();
            } catch (const YAML::Exception&) {
                throw ConfigError(full(key) + ": invalid number" + where(v[i]));
            }
        }
    }

    void read(const std::string& key, std::vector<std::string>& dst) {
        const YAML::Node v = take(key);
        if (!v) return;
        if (!v.IsSequence()) throw ConfigError(full(key) + ": expected a list" + where(v));
        dst.clear();
        for (const auto& e : v) dst.push_back(e.as<std::string>());
    }

    Section child(const std::string& key) { return Section(take(key), full(key)); }

    YAML::Node raw(const std::string& key) { return take(key); }

    /// Raises on keys never read.
    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto k = kv.first.as<std::string>();
            if (!used_.count(k)) throw ConfigError("unknown key '" + full(k) + "'" + where(kv.first));
        }
    }

    const std::string& path() const { return path_; }

private:
    YAML::Node take(const std::string& key) {
        used_.insert(key);
        if (!node_ || !node_.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
        const YAML::Node v = node_[key];
        if (!v.IsDefined() || v.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
        return v;
    }

    std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    static std::string scalar(const YAML::Node& v) { return v.IsScalar() ? v.Scalar() : "<non-scalar>"; }

    YAML::Node node_;
    std::string path_;
    std::set<std::string> used_;
};

void read_optimizer(Section s, OptimizerConfig& o) {
    s.read("max_evals", o.max_evals);
    s.read("early_stop_patience", o.early_stop_patience);
    s.read("gamma", o.gamma);
    s.read("n_candidates", o.n_candidates);
    s.read("n_startup", o.n_startup);
    s.read("seed", o.seed);
    s.finish();
}

// ---- emission ---------------------------------------------------------------

void emit(YAML::Emitter& out, const std::string& key, double v) {
    out << YAML::Key << key << YAML::Value << csv::fmt(v);
}
void emit(YAML::Emitter& out, const std::string& key, int v) {
    out << YAML::Key << key << YAML::Value << v;
}
void emit(YAML::Emitter& out, const std::string& key, std::uint64_t v) {
    out << YAML::Key << key << YAML::Value << v;
}
void emit(YAML::Emitter& out, const std::string& key, bool v) {
    out << YAML::Key << key << YAML::Value << v;
}
void emit(YAML::Emitter& out, const std::string& key, const std::string& v) {
    out << YAML::Key << key << YAML::Value << YAML::DoubleQuoted << v;
}
void emit(YAML::Emitter& out, const std::string& key, const Vec3& v) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (int i = 0; i < 3; ++i) out << csv::fmt(v(i));
    out << YAML::EndSeq;
}
void emit(YAML::Emitter& out, const std::string& key, const std::vector<std::string>& v) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& s : v) out << s;
    out << YAML::EndSeq;
}

void begin(YAML::Emitter& out, const std::string& key) {
    out << YAML::Key << key << YAML::Value << YAML::BeginMap;
}

void emit_optimizer(YAML::Emitter& out, const OptimizerConfig& o) {
    begin(out, "optimizer");
    emit(out, "max_evals", o.max_evals);
    emit(out, "early_stop_patience", o.early_stop_patience);
    emit(out, "gamma", o.gamma);
    emit(out, "n_candidates", o.n_candidates);
    emit(out, "n_startup", o.n_startup);
    emit(out, "seed", o.seed);
    out << YAML::EndMap;
}

} // namespace

FamilyContinuation LibraryConfig::for_family(const std::string& name) const {
    const auto it = families.find(name);
    return it == families.end() ? defaults : it->second;
}

Task2Settings Task2Config::settings(const VisibilityPolicy& policy, double sun_theta0_rad) const {
    Task2Settings s;
    s.step_s = step_s;
    s.horizon_days = horizon_days;
    s.tasking_interval_s = tasking_interval_min * 60.0;
    s.r_diag = Vec3(mag_sigma * mag_sigma, std::pow(ra_sigma_arcsec * kArcsec, 2),
                    std::pow(dec_sigma_arcsec * kArcsec, 2));
    s.policy = policy;
    s.init = initial;
    s.material = material;
    s.target_radius_m = target_radius_m;
    s.mesh_subdivisions = mesh_subdivisions;
    s.process_noise = process_noise;
    s.tasking_opt = optimizer;
    s.sun_theta0 = sun_theta0_rad;
    s.seed = seed;
    return s;
}

void Config::validate() const {
    system.validate();
    policy.validate();
    radiometry.validate();
    if (!(propagation_tol > 0.0)) throw ConfigError("propagation_tol must be positive");
    if (library.defaults.count < 1) throw ConfigError("library.default_count must be >= 1");
    for (const auto& [name, f] : library.families) {
        if (f.count < 1) throw ConfigError("library.families." + name + ".count must be >= 1");
        if (f.dx == 0.0) throw ConfigError("library.families." + name + ".dx must be nonzero");
    }
    if (task1.max_library_orbits < 0) throw ConfigError("task1.max_library_orbits must be >= 0");
    if (!(task1.jc_max >= task1.jc_min) || task1.jc_count < 1)
        throw ConfigError("task1.jacobi needs min <= max and count >= 1");
    if (task1.rays_azimuth < 1 || task1.rays_polar < 1)
        throw ConfigError("task1.rays entries must be >= 1");
    if (task1.n_targets < 1) throw ConfigError("task1.n_targets must be >= 1");
    ObservationGrid{task1.horizon_days, task1.step_hours}.validate();
    SphereTarget{task1.sphere_radius_m, task1.sphere_diffuse}.validate();
    task1.optimizer.validate();
    if (task1.algorithms.empty()) throw ConfigError("task1.algorithms must not be empty");
    for (const auto& a : task1.algorithms) parse_algorithm(a);
    parse_algorithm(task2.architecture_algorithm);
    if (task2.max_observers < 0) throw ConfigError("task2.max_observers must be >= 0");
    if (task2.n_targets < 1) throw ConfigError("task2.n_targets must be >= 1");
    if (task2.target_families.empty()) throw ConfigError("task2.target_families must not be empty");
    if (!(task2.mag_sigma > 0.0 && task2.ra_sigma_arcsec > 0.0 && task2.dec_sigma_arcsec > 0.0))
        throw ConfigError("task2.noise entries must be positive");
    if (!(task2.metrics_from_fraction >= 0.0 && task2.metrics_from_fraction < 1.0))
        throw ConfigError("task2.metrics_from_fraction must lie in [0, 1)");
    task2.settings(policy, 0.0).validate();
}

bool Config::operator==(const Config& o) const { return dump_config(*this) == dump_config(o); }

Config parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(std::string("malformed YAML: ") + e.what());
    }
    Config c;
    Section top(root, "");

    {
        auto s = top.child("system");
        s.read("mu", c.system.mu);
        s.read("l_star_km", c.system.l_star_km);
        s.read("t_star_s", c.system.t_star_s);
        s.finish();
    }
    {
        auto s = top.child("policy");
        s.read("mag_threshold", c.policy.mag_threshold);
        s.read("sun_exclusion_deg", c.policy.sun_excl_deg);
        s.read("moon_exclusion_deg", c.policy.moon_excl_deg);
        s.read("earth_exclusion_deg", c.policy.earth_excl_deg);
        s.read("fov_deg", c.policy.fov_deg);
        s.finish();
    }
    {
        auto s = top.child("radiometry");
        s.read("sun_magnitude", c.radiometry.m_sun);
        s.read("sun_irradiance_w_per_m2", c.radiometry.i_sun);
        s.finish();
    }
    top.read("sun_theta0_deg", c.sun_theta0_deg);
    top.read("propagation_tol", c.propagation_tol);
    {
        auto s = top.child("library");
        auto& l = c.library;
        s.read("seed_file", l.seed_file);
        s.read("default_dx", l.defaults.dx);
        s.read("default_count", l.defaults.count);
        s.read("corrector_tol", l.corrector_tol);
        s.read("integration_tol", l.integration_tol);
        const YAML::Node fams = s.raw("families");
        if (fams) {
            if (!fams.IsMap()) throw ConfigError("library.families: expected a mapping" + where(fams));
            for (const auto& kv : fams) {
                const auto name = kv.first.as<std::string>();
                FamilyContinuation f = l.defaults;
                Section fs(kv.second, "library.families." + name);
                fs.read("dx", f.dx);
                fs.read("count", f.count);
                fs.finish();
                l.families[name] = f;
            }
        }
        s.finish();
    }
    {
        auto s = top.child("task1");
        auto& t = c.task1;
        s.read("library", t.library);
        s.read("max_library_orbits", t.max_library_orbits);
        {
            auto j = s.child("jacobi");
            j.read("min", t.jc_min);
            j.read("max", t.jc_max);
            j.read("count", t.jc_count);
            j.finish();
        }
        {
            auto r = s.child("rays");
            r.read("azimuth", t.rays_azimuth);
            r.read("polar", t.rays_polar);
            r.finish();
        }
        s.read("n_targets", t.n_targets);
        s.read("kmeans_seed", t.kmeans_seed);
        s.read("horizon_days", t.horizon_days);
        s.read("step_hours", t.step_hours);
        {
            auto sp = s.child("sphere");
            sp.read("radius_m", t.sphere_radius_m);
            sp.read("diffuse", t.sphere_diffuse);
            sp.finish();
        }
        read_optimizer(s.child("optimizer"), t.optimizer);
        s.read("algorithms", t.algorithms);
        s.read("minimize", t.minimize);
        s.finish();
    }
    {
        auto s = top.child("task2");
        auto& t = c.task2;
        s.read("architecture", t.architecture);
        s.read("architecture_algorithm", t.architecture_algorithm);
        s.read("max_observers", t.max_observers);
        s.read("n_targets", t.n_targets);
        s.read("target_families", t.target_families);
        s.read("target_seed", t.target_seed);
        s.read("tasking_interval_min", t.tasking_interval_min);
        s.read("step_s", t.step_s);
        s.read("horizon_days", t.horizon_days);
        {
            auto n = s.child("noise");
            n.read("mag_sigma", t.mag_sigma);
            n.read("ra_sigma_arcsec", t.ra_sigma_arcsec);
            n.read("dec_sigma_arcsec", t.dec_sigma_arcsec);
            n.finish();
        }
        {
            auto i = s.child("initial");
            auto& v = t.initial;
            i.read("position_var_m2", v.position_var_m2);
            i.read("velocity_var_m2_per_s2", v.velocity_var_m2s2);
            i.read("attitude_var_deg2", v.attitude_var_deg2);
            i.read("omega_var_deg2_per_hr2", v.omega_var_deg2hr2);
            i.read("target_omega_deg_per_hr", v.target_omega_deg_hr);
            i.read("target_inertia_kg_m2", v.target_inertia);
            i.read("observer_omega_deg_per_hr", v.observer_omega_deg_hr);
            i.read("observer_inertia_kg_m2", v.observer_inertia);
            i.finish();
        }
        {
            auto m = s.child("material");
            m.read("albedo", t.material.albedo);
            m.read("diffuse", t.material.diffuse);
            m.read("specular", t.material.specular);
            m.read("roughness", t.material.roughness);
            m.read("f0", t.material.f0);
            m.finish();
        }
        s.read("target_radius_m", t.target_radius_m);
        s.read("mesh_subdivisions", t.mesh_subdivisions);
        {
            auto q = s.child("process_noise");
            q.read("attitude", t.process_noise[0]);
            q.read("omega", t.process_noise[1]);
            q.read("position", t.process_noise[2]);
            q.read("velocity", t.process_noise[3]);
            q.finish();
        }
        read_optimizer(s.child("optimizer"), t.optimizer);
        s.read("seed", t.seed);
        s.read("metrics_from_fraction", t.metrics_from_fraction);
        s.finish();
    }
    top.finish();
    c.validate();
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string dump_config(const Config& c) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    begin(out, "system");
    emit(out, "mu", c.system.mu);
    emit(out, "l_star_km", c.system.l_star_km);
    emit(out, "t_star_s", c.system.t_star_s);
    out << YAML::EndMap;

    begin(out, "policy");
    emit(out, "mag_threshold", c.policy.mag_threshold);
    emit(out, "sun_exclusion_deg", c.policy.sun_excl_deg);
    emit(out, "moon_exclusion_deg", c.policy.moon_excl_deg);
    emit(out, "earth_exclusion_deg", c.policy.earth_excl_deg);
    emit(out, "fov_deg", c.policy.fov_deg);
    out << YAML::EndMap;

    begin(out, "radiometry");
    emit(out, "sun_magnitude", c.radiometry.m_sun);
    emit(out, "sun_irradiance_w_per_m2", c.radiometry.i_sun);
    out << YAML::EndMap;

    emit(out, "sun_theta0_deg", c.sun_theta0_deg);
    emit(out, "propagation_tol", c.propagation_tol);

    begin(out, "library");
    emit(out, "seed_file", c.library.seed_file);
    emit(out, "default_dx", c.library.defaults.dx);
    emit(out, "default_count", c.library.defaults.count);
    emit(out, "corrector_tol", c.library.corrector_tol);
    emit(out, "integration_tol", c.library.integration_tol);
    begin(out, "families");
    for (const auto& [name, f] : c.library.families) {
        begin(out, name);
        emit(out, "dx", f.dx);
        emit(out, "count", f.count);
        out << YAML::EndMap;
    }
    out << YAML::EndMap << YAML::EndMap;

    const auto& t1 = c.task1;
    begin(out, "task1");
    emit(out, "library", t1.library);
    emit(out, "max_library_orbits", t1.max_library_orbits);
    begin(out, "jacobi");
    emit(out, "min", t1.jc_min);
    emit(out, "max", t1.jc_max);
    emit(out, "count", t1.jc_count);
    out << YAML::EndMap;
    begin(out, "rays");
    emit(out, "azimuth", t1.rays_azimuth);
    emit(out, "polar", t1.rays_polar);
    out << YAML::EndMap;
    emit(out, "n_targets", t1.n_targets);
    emit(out, "kmeans_seed", t1.kmeans_seed);
    emit(out, "horizon_days", t1.horizon_days);
    emit(out, "step_hours", t1.step_hours);
    begin(out, "sphere");
    emit(out, "radius_m", t1.sphere_radius_m);
    emit(out, "diffuse", t1.sphere_diffuse);
    out << YAML::EndMap;
    emit_optimizer(out, t1.optimizer);
    emit(out, "algorithms", t1.algorithms);
    emit(out, "minimize", t1.minimize);
    out << YAML::EndMap;

    const auto& t2 = c.task2;
    begin(out, "task2");
    emit(out, "architecture", t2.architecture);
    emit(out, "architecture_algorithm", t2.architecture_algorithm);
    emit(out, "max_observers", t2.max_observers);
    emit(out, "n_targets", t2.n_targets);
    emit(out, "target_families", t2.target_families);
    emit(out, "target_seed", t2.target_seed);
    emit(out, "tasking_interval_min", t2.tasking_interval_min);
    emit(out, "step_s", t2.step_s);
    emit(out, "horizon_days", t2.horizon_days);
    begin(out, "noise");
    emit(out, "mag_sigma", t2.mag_sigma);
    emit(out, "ra_sigma_arcsec", t2.ra_sigma_arcsec);
    emit(out, "dec_sigma_arcsec", t2.dec_sigma_arcsec);
    out << YAML::EndMap;
    begin(out, "initial");
    emit(out, "position_var_m2", t2.initial.position_var_m2);
    emit(out, "velocity_var_m2_per_s2", t2.initial.velocity_var_m2s2);
    emit(out, "attitude_var_deg2", t2.initial.attitude_var_deg2);
    emit(out, "omega_var_deg2_per_hr2", t2.initial.omega_var_deg2hr2);
    emit(out, "target_omega_deg_per_hr", t2.initial.target_omega_deg_hr);
    emit(out, "target_inertia_kg_m2", t2.initial.target_inertia);
    emit(out, "observer_omega_deg_per_hr", t2.initial.observer_omega_deg_hr);
    emit(out, "observer_inertia_kg_m2", t2.initial.observer_inertia);
    out << YAML::EndMap;
    begin(out, "material");
    emit(out, "albedo", t2.material.albedo);
    emit(out, "diffuse", t2.material.diffuse);
    emit(out, "specular", t2.material.specular);
    emit(out, "roughness", t2.material.roughness);
    emit(out, "f0", t2.material.f0);
    out << YAML::EndMap;
    emit(out, "target_radius_m", t2.target_radius_m);
    emit(out, "mesh_subdivisions", t2.mesh_subdivisions);
    begin(out, "process_noise");
    emit(out, "attitude", t2.process_noise[0]);
    emit(out, "omega", t2.process_noise[1]);
    emit(out, "position", t2.process_noise[2]);
    emit(out, "velocity", t2.process_noise[3]);
    out << YAML::EndMap;
    emit_optimizer(out, t2.optimizer);
    emit(out, "seed", t2.seed);
    emit(out, "metrics_from_fraction", t2.metrics_from_fraction);
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace cislunar
