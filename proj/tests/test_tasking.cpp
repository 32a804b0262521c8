#include <doctest.h>

#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "cislunar/errors.hpp"
#include "cislunar/tasking.hpp"
#include "support.hpp"

using namespace cislunar;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Consistent (K, C, W) for a random prior: C = P H^T, W = H P H^T + R, K = C W^-1.
struct Gain {
    Mat6d p;
    Eigen::MatrixXd k, cross, w;
};

Gain random_gain(std::mt19937_64& rng, int m) {
    std::normal_distribution<double> g;
    Gain out;
    out.p = testing::random_spd(6, rng, 0.2, 3.0);
    Eigen::MatrixXd h(m, 6);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < 6; ++j) h(i, j) = g(rng);
    out.cross = out.p * h.transpose();
    out.w = h * out.p * h.transpose() + testing::random_spd(m, rng, 0.05, 0.5);
    out.k = out.cross * out.w.inverse();
    return out;
}

/// Single-target scenario from the shared library with a permissive policy.
struct Scenario {
    std::vector<TargetSpec> targets;
    std::vector<ObserverSpec> observers;
    Task2Settings settings;
};

int family_member(const std::string& family, int which = 0) {
    const auto& lib = testing::small_library();
    for (std::size_t i = 0; i < lib.size(); ++i)
        if (lib[i].family == family && which-- == 0) return static_cast<int>(i);
    throw Error("no " + family);
}

Scenario short_scenario(double hours) {
    Scenario s;
    const int orbit = family_member("l2_halo_north", 2);
    s.targets = {{orbit, 0.3}};
    s.observers = {{orbit, 0.4}};
    s.settings.horizon_days = hours / 24.0;
    s.settings.tasking_interval_s = 3600.0;
    s.settings.policy = VisibilityPolicy{30.0, 1e-6, 1e-6, 1e-6, 3.0};
    s.settings.tasking_opt = OptimizerConfig{20, 0, 0.25, 24, 5, 0};
    return s;
}

} // namespace

TEST_SUITE("tasking") {

TEST_CASE("Joseph posterior") {
    std::mt19937_64 rng(17);
    SUBCASE("zero gain keeps the prior") {
        const auto g = random_gain(rng, 3);
        const Mat6d post = joseph_posterior(g.p, Eigen::MatrixXd::Zero(6, 3), g.cross, g.w);
        CHECK((post - g.p).norm() == 0.0);
    }
    SUBCASE("optimal gain equals the compact form and never exceeds the prior") {
        for (int trial = 0; trial < 30; ++trial) {
            const auto g = random_gain(rng, 2 + trial % 2);
            const Mat6d post = joseph_posterior(g.p, g.k, g.cross, g.w);
            const Mat6d compact = g.p - g.cross * g.w.inverse() * g.cross.transpose();
            CHECK((post - compact).cwiseAbs().maxCoeff() <= 1e-10);
            const Eigen::SelfAdjointEigenSolver<Mat6d> es(g.p - post);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        }
    }
}

TEST_CASE("log determinant") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd a = testing::random_spd(6, rng);
    const auto ld = log10_det(a);
    REQUIRE(ld);
    CHECK(*ld == doctest::Approx(std::log10(a.determinant())).epsilon(1e-12));
    Eigen::MatrixXd bad = a;
    bad(0, 0) = -1.0;
    CHECK_FALSE(log10_det(bad).has_value());
}

TEST_CASE("joint information over a block-diagonal covariance is the sum of blocks") {
    std::mt19937_64 rng(9);
    const auto g1 = random_gain(rng, 3), g2 = random_gain(rng, 2);
    const Mat6d post1 = joseph_posterior(g1.p, g1.k, g1.cross, g1.w);
    const Mat6d post2 = joseph_posterior(g2.p, g2.k, g2.cross, g2.w);
    Eigen::MatrixXd prior = Eigen::MatrixXd::Zero(12, 12), post = Eigen::MatrixXd::Zero(12, 12);
    prior.topLeftCorner(6, 6) = g1.p;
    prior.bottomRightCorner(6, 6) = g2.p;
    post.topLeftCorner(6, 6) = post1;
    post.bottomRightCorner(6, 6) = post2;
    const double joint = *log10_det(prior) - *log10_det(post);
    const double blocks = (*log10_det(g1.p) - *log10_det(post1)) + (*log10_det(g2.p) - *log10_det(post2));
    CHECK(std::abs(joint - blocks) <= 1e-10);
    const GainMatrix gain{{0.5 * std::log(10.0) * (*log10_det(g1.p) - *log10_det(post1)), 0.0},
                          {0.0, 0.5 * std::log(10.0) * (*log10_det(g2.p) - *log10_det(post2))}};
    CHECK(joint_mutual_information({0, 1}, gain) == doctest::Approx(0.5 * std::log(10.0) * joint).epsilon(1e-12));
    CHECK(joint_mutual_information({1, 0}, gain) == 0.0);
    CHECK(joint_mutual_information({-1, -1}, gain) == 0.0);
}

TEST_CASE("pair information") {
    const SystemConstants c;
    const auto& lib = testing::small_library();
    const auto& orbit = lib[family_member("l2_halo_north", 2)];
    const CrState target = propagate_to(orbit.ic, 0.3 * orbit.period, c);
    const CrState observer = propagate_to(orbit.ic, 0.4 * orbit.period, c);
    const ObserverView view{observer.position(), Quaternion(), 0.0, Vec3(389.0 * std::cos(2.0), 389.0 * std::sin(2.0), 0.0)};
    const Task2Settings s;
    const Mat6d p0 = filter_units(s, c).p0.bottomRightCorner<6, 6>();
    const VisibilityPolicy open{30.0, 1e-6, 1e-6, 1e-6, 3.0};
    const SphereTarget sphere{1.0, 0.3};
    SUBCASE("visible target yields positive information") {
        CHECK(pair_information(target.x, p0, view, sphere, s.r_diag, open, c) > 0.0);
    }
    SUBCASE("nothing visible yields zero") {
        VisibilityPolicy blind = open;
        blind.mag_threshold = -100.0;
        CHECK(pair_information(target.x, p0, view, sphere, s.r_diag, blind, c) == 0.0);
    }
    SUBCASE("an uninformative sensor leaves the prior and yields zero") {
        CHECK(pair_information(target.x, p0, view, sphere, s.r_diag * 1e30, open, c) == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("assignment decoding") {
    CHECK(decode_assignment({0.1, 0.9, 0.5, 0.9}, 2) == std::vector<int>{1, 3});
    CHECK(decode_assignment({0.3, 0.2}, 3) == std::vector<int>{0, 1, -1});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    for (int trial = 0; trial < 200; ++trial) {
        Point w(6);
        for (auto& x : w) x = trial % 5 == 0 ? std::round(u(rng) * 2) / 2 : u(rng);
        const auto a = decode_assignment(w, 4);
        CHECK(std::set<int>(a.begin(), a.end()).size() == 4);
    }
}

TEST_CASE("sensor assignment") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    GainMatrix gain(3, std::vector<double>(3));
    for (auto& row : gain)
        for (auto& g : row) g = u(rng);
    SUBCASE("as many targets as observers covers every target") {
        const auto a = assign_sensors(gain, 0.0, OptimizerConfig{50, 0, 0.25, 24, 20, 4});
        std::vector<int> sorted = a.target_of;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == std::vector<int>{0, 1, 2});
        CHECK(a.mi == joint_mutual_information(a.target_of, gain));
    }
    SUBCASE("with spare targets the assignment stays injective and reports its own MI") {
        GainMatrix wide(3, std::vector<double>(7));
        for (auto& row : wide)
            for (auto& g : row) g = u(rng);
        const auto a = assign_sensors(wide, 1.5, OptimizerConfig{80, 0, 0.25, 24, 20, 5});
        CHECK(std::set<int>(a.target_of.begin(), a.target_of.end()).size() == 3);
        CHECK(a.mi == joint_mutual_information(a.target_of, wide));
        CHECK(a.t == 1.5);
    }
}

TEST_CASE("observer expansion and target choice") {
    Architecture a;
    a.orbit = {4, 2};
    a.count = {2, 3};
    const auto obs = expand_observers(a);
    REQUIRE(obs.size() == 5);
    CHECK(obs[0].orbit == 4);
    CHECK(obs[1].phase == 0.5);
    CHECK(obs[4].orbit == 2);
    CHECK(obs[4].phase == doctest::Approx(2.0 / 3.0));

    const auto& lib = testing::small_library();
    const std::vector<std::string> fam{"dro", "l2_halo_north"};
    const auto three = choose_targets(lib, fam, 3, 5);
    const auto six = choose_targets(lib, fam, 6, 5);
    for (int i = 0; i < 3; ++i) {
        CHECK(three[i].orbit == six[i].orbit);
        CHECK(three[i].phase == six[i].phase);
    }
    for (const auto& t : six) {
        const auto& f = lib[t.orbit].family;
        CHECK((f == "dro" || f == "l2_halo_north"));
        CHECK(t.phase >= 0.0);
        CHECK(t.phase < 1.0);
    }
    CHECK_THROWS_AS(choose_targets(lib, {"butterfly_north"}, 3, 1), ConfigError);
}

TEST_CASE("truth simulation") {
    const SystemConstants c;
    const auto& lib = testing::small_library();
    auto sc = short_scenario(1.0);
    SUBCASE("fixed seed reproduces the truth bit for bit") {
        std::mt19937_64 a(3), b(3);
        const auto ta = simulate_truth(lib, sc.targets, sc.observers, sc.settings, c, a);
        const auto tb = simulate_truth(lib, sc.targets, sc.observers, sc.settings, c, b);
        REQUIRE(ta.t.size() == 61);
        for (std::size_t k = 0; k < ta.t.size(); ++k) {
            CHECK(ta.targets[0].state[k].x == tb.targets[0].state[k].x);
            CHECK(ta.targets[0].q[k].vec == tb.targets[0].q[k].vec);
        }
    }
    SUBCASE("vanishing initial spread puts the truth on the mean") {
        sc.settings.init.position_var_m2 = 1e-300;
        sc.settings.init.velocity_var_m2s2 = 1e-300;
        sc.settings.init.attitude_var_deg2 = 1e-300;
        sc.settings.init.omega_var_deg2hr2 = 1e-300;
        std::mt19937_64 rng(3);
        const auto t = simulate_truth(lib, sc.targets, sc.observers, sc.settings, c, rng);
        CHECK((t.targets[0].state[0].x - t.target_mean_ic[0].x).norm() < 1e-15);
        CHECK(t.targets[0].q[0].w == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(t.targets[0].q[0].vec.norm() < 1e-15);
    }
    SUBCASE("observers follow their orbit at the requested phase") {
        std::mt19937_64 rng(3);
        const auto t = simulate_truth(lib, sc.targets, sc.observers, sc.settings, c, rng);
        const auto& o = lib[sc.observers[0].orbit];
        const auto expect = propagate_to(o.ic, 0.4 * o.period + t.t[10], c, 1e-10);
        CHECK((t.observers[0].state[10].x - expect.x).norm() < 1e-8);
    }
}

TEST_CASE("measurement simulation gating") {
    const SystemConstants c;
    const auto mesh = icosphere_mesh(1.0, 0, Material{});
    const VisibilityPolicy open{30.0, 1e-6, 1e-6, 1e-6, 3.0};
    const Vec3 obs_pos(0.8, 0.0, 0.0);
    const ObserverView view{obs_pos, Quaternion(), 0.0, Vec3(0.0, 389.0, 0.0)};
    const CrState target(0.81, 0.001, 0.0, 0, 0, 0);
    const Vec3 r_diag(0.01, 1e-10, 1e-10);
    SUBCASE("noise-free measurement equals the model at the truth") {
        const auto sim = simulate_measurement(view, target, Quaternion(), target.position(), mesh, r_diag, open, c, nullptr);
        CHECK(sim.status == MeasurementStatus::valid);
        const auto y = measurement_model(target.position(), Quaternion(), view, mesh, c);
        CHECK((sim.m.y - y).norm() <= 1e-12);
    }
    SUBCASE("an estimate outside the field of view gates the measurement") {
        const Vec3 far = target.position() + Vec3(0.0, 0.01, 0.0);
        const auto sim = simulate_measurement(view, target, Quaternion(), far, mesh, r_diag, open, c, nullptr);
        CHECK(sim.status == MeasurementStatus::fov);
    }
    SUBCASE("a target with the Sun behind it is dark") {
        const ObserverView backlit{obs_pos, Quaternion(), 0.0, Vec3(389.0, 0.0, 0.0)};
        const CrState behind(0.81, 0.0, 0.0, 0, 0, 0);
        const auto sim = simulate_measurement(backlit, behind, Quaternion(), behind.position(), mesh, r_diag, open, c, nullptr);
        CHECK(sim.status == MeasurementStatus::dark);
    }
    SUBCASE("a faint target fails the brightness test") {
        VisibilityPolicy strict = open;
        strict.mag_threshold = 0.0;
        const auto sim = simulate_measurement(view, target, Quaternion(), target.position(), mesh, r_diag, strict, c, nullptr);
        CHECK(sim.status == MeasurementStatus::brightness);
    }
}

TEST_CASE("linear-Gaussian reference validates the metric code") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    Mat12 p = testing::random_spd(12, rng, 0.01, 4.0);
    const Mat12 l = p.llt().matrixL();
    ErrorMetrics m;
    for (int i = 0; i < 10000; ++i) {
        Vec12 z;
        for (int j = 0; j < 12; ++j) z(j) = g(rng);
        m.add(l * z, p);
    }
    CHECK(m.samples() == 10000);
    for (double a : m.anees()) CHECK(std::abs(a - 1.0) <= 0.1);
    for (double s : m.sigma3_fraction()) CHECK(std::abs(s - 0.9973) <= 0.005);
    CHECK(std::abs(m.block_anees(0) - 1.0) <= 0.05);
    CHECK(std::abs(m.block_anees(1) - 1.0) <= 0.05);
    const auto rmse = m.rmse();
    for (int j = 0; j < 12; ++j) CHECK(rmse[j] == doctest::Approx(std::sqrt(p(j, j))).epsilon(0.05));
}

TEST_CASE("filter units") {
    const SystemConstants c;
    const Task2Settings s;
    const auto u = filter_units(s, c);
    const double w = 3.14159265358979323846 / 180.0 / 3600.0 * c.t_star_s;
    CHECK(w == doctest::Approx(1.82).epsilon(1e-3));
    CHECK(u.p0(0, 0) == doctest::Approx(25.0 * std::pow(kPi / 180.0, 2)));
    CHECK(u.p0(6, 6) == doctest::Approx(1e9 / std::pow(c.l_star_km * 1000.0, 2)));
    CHECK(u.p0(9, 9) == doctest::Approx(1e-3 / std::pow(c.velocity_unit_mps(), 2)));
    CHECK(u.target_omega.x() == doctest::Approx(-44.723808 * w));
}

TEST_CASE("a single-step horizon predicts each target exactly once") {
    const auto& lib = testing::small_library();
    auto sc = short_scenario(1.0 / 60.0);
    sc.targets.push_back({family_member("dro"), 0.1});
    sc.settings.tasking_interval_s = 60.0;
    const auto r = run_task2(lib, sc.targets, sc.observers, sc.settings);
    CHECK(r.predicts == 2);
    CHECK(r.updates <= 1);
    CHECK(r.assignments.size() == 1);
    REQUIRE(r.traces[0].t_s.size() == 2);
    CHECK(r.traces[0].t_s[1] == doctest::Approx(60.0));
}

TEST_CASE("an unobserved target's covariance never contracts") {
    const SystemConstants c;
    const auto& lib = testing::small_library();
    auto sc = short_scenario(2.0);
    sc.settings.policy.mag_threshold = -100.0;
    const auto r = run_task2(lib, sc.targets, sc.observers, sc.settings);
    CHECK(r.updates == 0);
    // Predict-only: log det of P is nondecreasing.
    const auto u = filter_units(sc.settings, c);
    BeliefState b;
    b.mean.segment<3>(3) = u.target_omega;
    b.mean.tail<6>() = propagate_to(lib[sc.targets[0].orbit].ic, 0.3 * lib[sc.targets[0].orbit].period, c).x;
    b.cov = u.p0;
    FilterOptions fo;
    fo.body = RigidBody{sc.settings.init.target_inertia};
    for (int i = 0; i < 4; ++i) fo.process_noise.diagonal().segment<3>(3 * i).setConstant(sc.settings.process_noise[i]);
    double prev = *log10_det(b.cov);
    for (int k = 0; k < 30; ++k) {
        b = predict(b, c.seconds_to_nd(60.0), c, fo);
        const double now = *log10_det(b.cov);
        CHECK(now >= prev - 1e-9);
        prev = now;
    }
}

TEST_CASE("task 2 runs are bit-reproducible and assignments respect the interval") {
    const auto& lib = testing::small_library();
    auto sc = short_scenario(3.0);
    sc.targets.push_back({family_member("dro"), 0.6});
    sc.targets.push_back({family_member("l1_halo_north"), 0.2});
    sc.observers.push_back({family_member("dro", 1), 0.0});
    sc.settings.tasking_interval_s = 1800.0;
    const auto a = run_task2(lib, sc.targets, sc.observers, sc.settings);
    const auto b = run_task2(lib, sc.targets, sc.observers, sc.settings);
    REQUIRE(a.assignments.size() == 6);
    for (std::size_t e = 0; e < a.assignments.size(); ++e) {
        CHECK(a.assignments[e].t == doctest::Approx(SystemConstants{}.seconds_to_nd(1800.0 * e)));
        CHECK(a.assignments[e].target_of == b.assignments[e].target_of);
        CHECK(a.assignments[e].mi == b.assignments[e].mi);
    }
    for (std::size_t i = 0; i < a.traces.size(); ++i)
        for (std::size_t k = 0; k < a.traces[i].err.size(); ++k) {
            CHECK(a.traces[i].err[k] == b.traces[i].err[k]);
            CHECK(a.traces[i].sigma[k] == b.traces[i].sigma[k]);
        }
    CHECK(a.mean_sigma3_translational == b.mean_sigma3_translational);
    CHECK(a.mean_sigma3_rotational == b.mean_sigma3_rotational);
}

TEST_CASE("settings validation") {
    Task2Settings s;
    s.tasking_interval_s = 90.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    Task2Settings h;
    h.horizon_days = 1.0 / 86400.0 * 30.0;
    CHECK_THROWS_AS(h.validate(), ConfigError);
    Task2Settings q;
    q.process_noise[1] = -1.0;
    CHECK_THROWS_AS(q.validate(), ConfigError);
}

TEST_CASE("trace CSV layout") {
    TargetTrace tr;
    tr.t_s = {0.0, 60.0};
    tr.err = {Vec12::Zero(), Vec12::Ones()};
    tr.sigma = {Vec12::Ones(), Vec12::Ones()};
    tr.observed = {-1, 0};
    const auto dir = testing::scratch_dir("trace");
    write_trace_csv(tr, dir / "t.csv");
    std::ifstream in(dir / "t.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header.rfind("t_s,observer,err_att_x,", 0) == 0);
    CHECK(header.find("sigma_v_z_mps") != std::string::npos);
    CHECK(first.rfind("0,-1,0,", 0) == 0);
}

} // TEST_SUITE
