#include "cislunar/photometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>

#include "cislunar/csv.hpp"
#include "cislunar/errors.hpp"

namespace cislunar {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double d) { return d * kPi / 180.0; }

bool angle_in_range(double deg) { return deg > 0.0 && deg < 180.0; }

} // namespace

void RadiometryConstants::validate() const {
    if (!(i_sun > 0.0)) throw ConfigError("i_sun must be positive");
    if (!std::isfinite(m_sun)) throw ConfigError("m_sun must be finite");
}

void Material::validate() const {
    if (!(albedo >= 0.0 && albedo <= 1.0)) throw ConfigError("albedo must lie in [0, 1]");
    if (!(diffuse >= 0.0 && specular >= 0.0) || std::abs(diffuse + specular - 1.0) > 1e-9)
        throw ConfigError("diffuse and specular weights must be nonnegative and sum to 1");
    if (!(roughness > 0.0)) throw ConfigError("roughness must be positive");
    if (!(f0 >= 0.0 && f0 < 1.0)) throw ConfigError("f0 must lie in [0, 1)");
}

Facet Facet::from_vertices(const Vec3& a, const Vec3& b, const Vec3& c, const Material& m) {
    Facet f;
    f.vertices = {a, b, c};
    const Vec3 cross = (b - a).cross(c - a);
    const double n = cross.norm();
    if (!(n > 0.0)) throw ConfigError("degenerate facet");
    f.area = 0.5 * n;
    f.normal = cross / n;
    f.tangent_x = (b - a).normalized();
    f.tangent_y = f.normal.cross(f.tangent_x);
    f.material = m;
    return f;
}

double FacetMesh::total_area() const {
    double s = 0.0;
    for (const auto& f : facets) s += f.area;
    return s;
}

void FacetMesh::validate() const {
    if (facets.empty()) throw ConfigError("mesh has no facets");
    for (const auto& f : facets) {
        if (!(f.area > 0.0)) throw ConfigError("facet area must be positive");
        if (std::abs(f.normal.norm() - 1.0) > 1e-9) throw ConfigError("facet normal not unit");
        f.material.validate();
    }
}

FacetMesh icosphere_mesh(double radius_m, int subdivisions, const Material& material) {
    if (!(radius_m > 0.0)) throw PreconditionError("icosphere radius must be positive");
    if (subdivisions < 0) throw PreconditionError("icosphere subdivisions must be >= 0");
    material.validate();

    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                           {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                           {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<std::array<int, 3>> tri = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const int idx = static_cast<int>(v.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tri.size() * 4);
        for (const auto& f : tri) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tri = std::move(next);
    }

    FacetMesh mesh;
    mesh.facets.reserve(tri.size());
    for (const auto& f : tri) {
        Vec3 a = radius_m * v[f[0]], b = radius_m * v[f[1]], c = radius_m * v[f[2]];
        if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(b, c);
        mesh.facets.push_back(Facet::from_vertices(a, b, c, material));
    }
    return mesh;
}

FacetMesh read_mesh_csv(const std::filesystem::path& path) {
    auto table = csv::read(path, false);
    FacetMesh mesh;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
        if (i == 0 && !row.empty()) {
            try {
                csv::parse_double(row[0]);
            } catch (const ConfigError&) {
                continue;
            }
        }
        if (row.size() != 14) throw ConfigError(where + ": expected 14 columns");
        double d[14];
        try {
            for (int k = 0; k < 14; ++k) d[k] = csv::parse_double(row[k]);
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
        Material m{d[9], d[10], d[11], d[12], d[13]};
        try {
            m.validate();
            mesh.facets.push_back(Facet::from_vertices(Vec3(d[0], d[1], d[2]), Vec3(d[3], d[4], d[5]),
                                                       Vec3(d[6], d[7], d[8]), m));
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    mesh.validate();
    return mesh;
}

void SphereTarget::validate() const {
    if (!(radius_m > 0.0)) throw ConfigError("sphere radius must be positive");
    if (!(diffuse >= 0.0 && diffuse <= 1.0)) throw ConfigError("sphere C_d must lie in [0, 1]");
}

ViewGeometry ViewGeometry::make(const Vec3& to_sun, const Vec3& to_observer, double range_m) {
    ViewGeometry g;
    g.to_sun = to_sun.normalized();
    g.to_observer = to_observer.normalized();
    const Vec3 h = g.to_sun + g.to_observer;
    const double hn = h.norm();
    // Sun exactly behind the observer's line of sight: any unit h is valid.
    g.half = hn > 0.0 ? Vec3(h / hn) : g.to_sun.unitOrthogonal();
    g.range_m = range_m;
    return g;
}

double beckmann_distribution(double cos_phi, double roughness) {
    const double c2 = cos_phi * cos_phi;
    const double tan2 = (1.0 - c2) / c2;
    const double r2 = roughness * roughness;
    return std::exp(-tan2 / r2) / (r2 * c2 * c2);
}

double geometric_attenuation(double n_h, double n_v, double n_l, double v_h) {
    return std::min({1.0, 2.0 * n_h * n_v / v_h, 2.0 * n_h * n_l / v_h});
}

double fresnel_reflectance(double v_h, double f0) {
    const double sf = std::sqrt(f0);
    const double b = (1.0 + sf) / (1.0 - sf);
    const double q = v_h;
    const double p = std::sqrt(q * q - 1.0 + b * b);
    const double ratio = (p - q) / (p + q);
    const double tail = (q * (p + q) - 1.0) / (q * (p - q) + 1.0);
    return 0.5 * ratio * ratio * (1.0 + tail * tail);
}

double cook_torrance_facet(const ViewGeometry& g, const Vec3& normal, const Material& m) {
    const double n_l = normal.dot(g.to_sun);
    const double n_v = normal.dot(g.to_observer);
    if (n_l <= 0.0 || n_v <= 0.0) return 0.0;

    const double diffuse = m.albedo / kPi;
    if (m.specular == 0.0) return m.diffuse * diffuse;

    const double n_h = normal.dot(g.half);
    const double v_h = g.to_observer.dot(g.half);
    // H between L and V with both in N's hemisphere gives n_h > 0 and v_h > 0.
    const double dist = beckmann_distribution(n_h, m.roughness);
    const double atten = geometric_attenuation(n_h, n_v, n_l, v_h);
    const double fres = fresnel_reflectance(v_h, m.f0);
    const double spec = atten * dist * fres / (kPi * n_l * n_v);
    return m.diffuse * diffuse + m.specular * spec;
}

std::optional<double> facet_magnitude(const FacetMesh& mesh, const Mat3& body_to_frame,
                                      const Vec3& target, const Vec3& observer, const Vec3& sun,
                                      const SystemConstants& c, const RadiometryConstants& rad) {
    const Vec3 to_obs = observer - target;
    const double range_m = c.nd_to_m(to_obs.norm());
    if (!(range_m > 0.0)) throw PreconditionError("facet_magnitude: observer at target");
    const Vec3 to_sun = sun - target;
    if (!(to_sun.norm() > 0.0)) throw PreconditionError("facet_magnitude: sun at target");

    // Facet positions collapse to the body center at cislunar ranges.
    const auto g = ViewGeometry::make(body_to_frame.transpose() * to_sun,
                                      body_to_frame.transpose() * to_obs, range_m);
    double flux = 0.0;
    for (const auto& f : mesh.facets) {
        const double rho = cook_torrance_facet(g, f.normal, f.material);
        if (rho == 0.0) continue;
        flux += f.area * rho * f.normal.dot(g.to_sun) * f.normal.dot(g.to_observer);
    }
    if (!(flux > 0.0)) return std::nullopt;
    // flux / r^2 is the reflected fraction of the incident solar irradiance.
    return rad.m_sun - 2.5 * std::log10(flux / (range_m * range_m));
}

double lambert_phase_function(double phase_angle) {
    const double a = std::clamp(phase_angle, 0.0, kPi);
    // sin(pi - a) vanishes exactly at full backlighting.
    return std::sin(kPi - a) + (kPi - a) * std::cos(a);
}

std::optional<double> sphere_magnitude(const SphereTarget& t, const Vec3& observer_to_target,
                                       const Vec3& sun_to_target, const RadiometryConstants& rad) {
    const double r = observer_to_target.norm();
    if (!(r > 0.0) || !(sun_to_target.norm() > 0.0))
        throw PreconditionError("sphere_magnitude: zero-length geometry vector");
    // Phase angle is measured at the target between the Sun and the observer.
    const double phase = angle_between(-observer_to_target, -sun_to_target);
    const double phi = lambert_phase_function(phase);
    const double frac = 2.0 * t.diffuse * t.radius_m * t.radius_m * phi / (3.0 * kPi * r * r);
    if (!(frac > 0.0)) return std::nullopt;
    return rad.m_sun - 2.5 * std::log10(frac);
}

std::optional<double> sphere_magnitude_at(const SphereTarget& t, const Vec3& target,
                                          const Vec3& observer, const Vec3& sun,
                                          const SystemConstants& c, const RadiometryConstants& rad) {
    const double m = c.nd_to_m(1.0);
    return sphere_magnitude(t, (target - observer) * m, (target - sun) * m, rad);
}

void VisibilityPolicy::validate() const {
    if (!std::isfinite(mag_threshold)) throw ConfigError("mag_threshold must be finite");
    if (!angle_in_range(sun_excl_deg) || !angle_in_range(moon_excl_deg) ||
        !angle_in_range(earth_excl_deg) || !angle_in_range(fov_deg))
        throw ConfigError("exclusion and field-of-view angles must lie in (0, 180) deg");
}

const char* to_string(Visibility v) {
    switch (v) {
    case Visibility::visible: return "visible";
    case Visibility::dark: return "dark";
    case Visibility::brightness: return "brightness";
    case Visibility::sun_exclusion: return "sun exclusion";
    case Visibility::moon_exclusion: return "moon exclusion";
    case Visibility::earth_exclusion: return "earth exclusion";
    }
    return "unknown";
}

double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

Visibility visibility_check(std::optional<double> mag, const Vec3& target_dir, const Vec3& sun,
                            const Vec3& moon, const Vec3& earth, const Vec3& observer,
                            const VisibilityPolicy& policy) {
    if (!mag) return Visibility::dark;
    if (!(*mag <= policy.mag_threshold)) return Visibility::brightness;
    if (angle_between(target_dir, sun - observer) < deg2rad(policy.sun_excl_deg))
        return Visibility::sun_exclusion;
    if (angle_between(target_dir, moon - observer) < deg2rad(policy.moon_excl_deg))
        return Visibility::moon_exclusion;
    if (angle_between(target_dir, earth - observer) < deg2rad(policy.earth_excl_deg))
        return Visibility::earth_exclusion;
    return Visibility::visible;
}

SunModel SunModel::from_table(const std::filesystem::path& path) {
    auto table = csv::read(path, false);
    SunModel s;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (i == 0 && !row.empty() && row[0] == "jd") continue;
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
        if (row.size() != 4) throw ConfigError(where + ": expected jd,x,y,z");
        const double jd = csv::parse_double(row[0]);
        if (!s.jd_.empty() && !(jd > s.jd_.back()))
            throw ConfigError(where + ": epochs must be strictly increasing");
        s.jd_.push_back(jd);
        s.pos_.emplace_back(csv::parse_double(row[1]), csv::parse_double(row[2]),
                            csv::parse_double(row[3]));
    }
    if (s.jd_.empty()) throw ConfigError(path.string() + ": empty sun table");
    return s;
}

double SunModel::synodic_rate(const SystemConstants& c) {
    const double n_sun = 2.0 * kPi / (kSiderealYearDays * 86400.0);
    return n_sun * c.t_star_s - 1.0;
}

Vec3 SunModel::position(double epoch_jd, const SystemConstants& c) const {
    if (epoch_jd < kInitialEpochJd)
        throw PreconditionError("sun_position: epoch precedes the initial epoch");
    if (tabulated()) {
        if (epoch_jd < jd_.front() || epoch_jd > jd_.back())
            throw PreconditionError("sun_position: epoch outside ephemeris table");
        const auto it = std::upper_bound(jd_.begin(), jd_.end(), epoch_jd);
        if (it == jd_.end()) return pos_.back();
        const auto k = static_cast<std::size_t>(it - jd_.begin());
        const double w = (epoch_jd - jd_[k - 1]) / (jd_[k] - jd_[k - 1]);
        return (1.0 - w) * pos_[k - 1] + w * pos_[k];
    }
    return position_at(c.days_to_nd(epoch_jd - kInitialEpochJd), c);
}

Vec3 SunModel::position_at(double t_nd, const SystemConstants& c) const {
    if (tabulated()) return position(kInitialEpochJd + c.nd_to_seconds(t_nd) / 86400.0, c);
    const double r = kAuKm / c.l_star_km;
    const double th = theta0_ + synodic_rate(c) * t_nd;
    return {r * std::cos(th), r * std::sin(th), 0.0};
}

} // namespace cislunar
