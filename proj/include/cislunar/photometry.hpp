#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cislunar/cr3bp.hpp"

namespace cislunar {

struct RadiometryConstants {
    double m_sun = -26.74; ///< solar apparent magnitude in band
    double i_sun = 455.0;  ///< band-integrated solar irradiance at 1 AU, W/m^2

    void validate() const;
};

/// Surface reflectance parameters shared by every facet of a simple target.
struct Material {
    double albedo = 0.3;    ///< diffuse albedo in [0, 1]
    double diffuse = 0.7;   ///< weight d, with diffuse + specular = 1
    double specular = 0.3;  ///< weight s
    double roughness = 0.2; ///< RMS microfacet slope, > 0
    double f0 = 0.1;        ///< reflectance at normal incidence, [0, 1)

    void validate() const;
};

struct Facet {
    std::array<Vec3, 3> vertices; ///< body frame, m
    double area = 0.0;            ///< m^2
    Vec3 normal = Vec3::UnitZ();  ///< outward unit normal
    Vec3 tangent_x = Vec3::UnitX();
    Vec3 tangent_y = Vec3::UnitY();
    Material material;

    /// Builds a facet with counter-clockwise vertex order defining the normal.
    static Facet from_vertices(const Vec3& a, const Vec3& b, const Vec3& c, const Material& m);
};

struct FacetMesh {
    std::vector<Facet> facets;

    double total_area() const;
    void validate() const;
};

/// Icosahedron (subdivisions = 0) refined by midpoint splitting; vertices lie
/// on the sphere of the given radius and normals point outward.
FacetMesh icosphere_mesh(double radius_m, int subdivisions, const Material& material);

/// Flat triangle list `v1x,v1y,v1z,v2x,...,v3z,albedo,d,s,delta_rms,f0`. A
/// non-numeric first row is treated as a header.
FacetMesh read_mesh_csv(const std::filesystem::path& path);

struct SphereTarget {
    double radius_m = 1.0;
    double diffuse = 0.3; ///< C_d in [0, 1]

    void validate() const;
};

/// Unit directions from a surface point toward the Sun and the observer.
struct ViewGeometry {
    Vec3 to_sun;
    Vec3 to_observer;
    Vec3 half;
    double range_m = 0.0;

    static ViewGeometry make(const Vec3& to_sun, const Vec3& to_observer, double range_m);
};

/// Bidirectional reflectance of one facet, diffuse + specular weighted. Zero
/// when the facet is not both lit and seen. Angles via `normal` in the same
/// frame as `g`.
double cook_torrance_facet(const ViewGeometry& g, const Vec3& normal, const Material& m);

/// Microfacet slope distribution for the angle phi between normal and half vector.
double beckmann_distribution(double cos_phi, double roughness);
double geometric_attenuation(double n_h, double n_v, double n_l, double v_h);
/// Unpolarized Fresnel reflectance at cos(incidence) = v_h.
double fresnel_reflectance(double v_h, double f0);

/// Apparent magnitude of a faceted body. `body_to_frame` rotates body vectors
/// into the rotating frame; positions are nondimensional. Returns nullopt when
/// no facet is both lit and seen.
std::optional<double> facet_magnitude(const FacetMesh& mesh, const Mat3& body_to_frame,
                                      const Vec3& target, const Vec3& observer, const Vec3& sun,
                                      const SystemConstants& c, const RadiometryConstants& rad = {});

/// Lambertian sphere: sin(a) + (pi - a) cos(a) with the phase angle clamped to [0, pi].
double lambert_phase_function(double phase_angle);

/// Apparent magnitude of a diffuse sphere. `observer_to_target` and
/// `sun_to_target` in meters. Returns nullopt at zero phase function.
std::optional<double> sphere_magnitude(const SphereTarget& t, const Vec3& observer_to_target,
                                       const Vec3& sun_to_target,
                                       const RadiometryConstants& rad = {});

/// Same model with positions in nondimensional units.
std::optional<double> sphere_magnitude_at(const SphereTarget& t, const Vec3& target,
                                          const Vec3& observer, const Vec3& sun,
                                          const SystemConstants& c,
                                          const RadiometryConstants& rad = {});

struct VisibilityPolicy {
    double mag_threshold = 18.0;
    double sun_excl_deg = 35.0;
    double moon_excl_deg = 5.0;
    double earth_excl_deg = 15.0;
    double fov_deg = 3.0;

    void validate() const;
};

enum class Visibility { visible, dark, brightness, sun_exclusion, moon_exclusion, earth_exclusion };

const char* to_string(Visibility v);

/// Brightness test then Sun, Moon and Earth exclusion cones around the line of
/// sight. `mag` nullopt means not illuminated.
Visibility visibility_check(std::optional<double> mag, const Vec3& target_dir, const Vec3& sun,
                            const Vec3& moon, const Vec3& earth, const Vec3& observer,
                            const VisibilityPolicy& policy);

/// Angle between two nonzero vectors, radians, robust near 0 and pi.
double angle_between(const Vec3& a, const Vec3& b);

/// Sun position in the rotating frame. Analytic mode puts the Sun in the
/// x-y plane at 1 AU from the barycenter, turning at the synodic rate.
class SunModel {
public:
    static constexpr double kInitialEpochJd = 2460584.5;
    static constexpr double kAuKm = 1.495978707e8;
    static constexpr double kSiderealYearDays = 365.256363;

    explicit SunModel(double theta0_rad = 0.0) : theta0_(theta0_rad) {}

    /// Table override: rows `jd,x,y,z`, nondimensional, ascending jd.
    static SunModel from_table(const std::filesystem::path& path);

    Vec3 position(double epoch_jd, const SystemConstants& c) const;
    /// Position at nondimensional time t past the initial epoch.
    Vec3 position_at(double t_nd, const SystemConstants& c) const;

    /// n_sun / n_moon - 1 in nondimensional units (negative: clockwise).
    static double synodic_rate(const SystemConstants& c);

    bool tabulated() const { return !jd_.empty(); }

private:
    double theta0_ = 0.0;
    std::vector<double> jd_;
    std::vector<Vec3> pos_;
};

} // namespace cislunar
