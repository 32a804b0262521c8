#include <doctest.h>

#include <fstream>

#include "cislunar/errors.hpp"
#include "cislunar/orbits.hpp"
#include "support.hpp"

using namespace cislunar;

TEST_SUITE("orbits") {

TEST_CASE("bundled seeds correct to closed orbits") {
    const SystemConstants c;
    for (const char* family : {"l1_lyapunov", "l1_halo_north", "l2_halo_south", "dro", "res31"}) {
        CAPTURE(family);
        const auto o = testing::seed_orbit(family, c);
        CHECK(o.family == family);
        CHECK(o.period > 0.0);
        CHECK(closure_error(o, c) <= 1e-8);
        CHECK(o.jc == doctest::Approx(jacobi_constant(o.ic, c)).epsilon(1e-14));
    }
}

TEST_CASE("correcting an already periodic orbit leaves it unchanged") {
    const SystemConstants c;
    const auto o = testing::seed_orbit("l1_halo_north", c);
    const auto again = correct_periodic(o.ic, c, o.period, o.family);
    CHECK((again.ic.x - o.ic.x).norm() <= 1e-10);
    CHECK(again.period == doctest::Approx(o.period).epsilon(1e-10));
}

TEST_CASE("perturbed initial condition is recovered") {
    const SystemConstants c;
    const auto o = testing::seed_orbit("l2_halo_north", c);
    CrState seed = o.ic;
    seed.x(2) += 1e-4;
    const auto fixed = correct_periodic(seed, c, o.period, o.family);
    CHECK(closure_error(fixed, c) <= 1e-8);
    CHECK(fixed.ic.x(0) == o.ic.x(0));
    CHECK((fixed.ic.x - o.ic.x).norm() < 1e-6);
}

TEST_CASE("seed off the x axis is a precondition error") {
    const SystemConstants c;
    CHECK_THROWS_AS(correct_periodic(CrState(0.82, 0.01, 0.02, 0, 0.13, 0), c, 2.75), PreconditionError);
}

TEST_CASE("continuation") {
    const SystemConstants c;
    const auto first = testing::seed_orbit("l1_halo_north", c);
    SUBCASE("count one returns the first member") {
        const auto fam = continue_family(first, 0.001, 1, c);
        REQUIRE(fam.orbits.size() == 1);
        CHECK(fam.orbits[0].ic.x == first.ic.x);
        CHECK_FALSE(fam.terminated);
    }
    SUBCASE("members close, x0 is monotone, Jacobi constant locally monotone") {
        const auto fam = continue_family(first, 0.001, 5, c);
        REQUIRE(fam.orbits.size() == 5);
        for (std::size_t i = 0; i < fam.orbits.size(); ++i) {
            CHECK(closure_error(fam.orbits[i], c) <= 1e-8);
            if (i > 0) CHECK(fam.orbits[i].ic.x(0) > fam.orbits[i - 1].ic.x(0));
        }
        // A continuation at a tenth of the step brackets the same trend.
        const auto fine = continue_family(first, 0.0001, 11, c);
        REQUIRE(fine.orbits.size() == 11);
        const double sign = fine.orbits[1].jc - fine.orbits[0].jc;
        for (std::size_t i = 1; i < fine.orbits.size(); ++i)
            CHECK((fine.orbits[i].jc - fine.orbits[i - 1].jc) * sign > 0.0);
        CHECK((fam.orbits[1].jc - fam.orbits[0].jc) * sign > 0.0);
    }
}

TEST_CASE("monodromy spectrum structure") {
    const SystemConstants c;
    for (const char* family : {"l1_halo_north", "l2_halo_north", "dro"}) {
        CAPTURE(family);
        const auto o = testing::seed_orbit(family, c);
        const auto st = monodromy_stability(o, c);
        CHECK(st.monodromy.determinant() == doctest::Approx(1.0).epsilon(1e-6));
        int near_one = 0;
        for (int i = 0; i < 6; ++i) {
            const auto eta = st.eigenvalues(i);
            if (std::abs(eta - 1.0) < 1e-4) ++near_one;
            double best = 1e9;
            for (int j = 0; j < 6; ++j) best = std::min(best, std::abs(st.eigenvalues(j) * eta - 1.0));
            CHECK(best < 1e-6);
        }
        CHECK(near_one >= 2);
        CHECK(st.stability_index >= 1.0);
    }
}

TEST_CASE("stability index agrees with the planar trace reduction on a Lyapunov orbit") {
    const SystemConstants c;
    const auto o = testing::seed_orbit("l1_lyapunov", c);
    const auto st = monodromy_stability(o, c);
    // In-plane block [x y vx vy] carries eigenvalues {1, 1, eta, 1/eta}.
    const int idx[4] = {0, 1, 3, 4};
    double trace = 0.0;
    for (int i : idx) trace += st.monodromy(i, i);
    const double from_trace = 0.5 * std::abs(trace - 2.0);
    CHECK(st.stability_index == doctest::Approx(from_trace).epsilon(1e-6));
    CHECK(st.stability_index > 100.0);
}

TEST_CASE("DRO is close to neutrally stable and an L2 halo is strongly unstable") {
    const SystemConstants c;
    CHECK(monodromy_stability(testing::seed_orbit("dro", c), c).stability_index < 1.01);
    CHECK(monodromy_stability(testing::seed_orbit("l2_halo_north", c), c).stability_index > 10.0);
}

TEST_CASE("satellite placement") {
    const SystemConstants c;
    const auto o = testing::seed_orbit("l2_halo_north", c);
    const auto one = place_satellites(o, 1, c);
    REQUIRE(one.size() == 1);
    CHECK(one[0].x == o.ic.x);
    const auto five = place_satellites(o, 5, c, 1e-12);
    REQUIRE(five.size() == 5);
    for (int k = 0; k < 5; ++k) {
        const auto next = propagate_to(five[k], o.period / 5, c, 1e-12);
        CHECK((next.x - five[(k + 1) % 5].x).norm() <= 1e-8);
        CHECK(std::abs(jacobi_constant(five[k], c) - o.jc) <= 1e-9);
    }
    const auto f = phase_fractions(4);
    CHECK(f == std::vector<double>{0.0, 0.25, 0.5, 0.75});
}

TEST_CASE("seed file parsing") {
    const auto dir = testing::scratch_dir("seeds");
    {
        std::ofstream f(dir / "ok.csv");
        f << "# comment\nfamily,x0,z0,vy0,period_guess\nl1_halo_north,0.8234,0.02,0.134,2.75\n";
    }
    const auto seeds = read_seed_file(dir / "ok.csv");
    REQUIRE(seeds.size() == 1);
    CHECK(seeds[0].family == "l1_halo_north");
    CHECK(seeds[0].z0 == 0.02);
    {
        std::ofstream f(dir / "bad.csv");
        f << "family,x0,z0,vy0,period_guess\nl1_halo_north,0.8234,abc,0.134,2.75\n";
    }
    CHECK_THROWS_AS(read_seed_file(dir / "bad.csv"), ConfigError);
    CHECK_THROWS_AS(read_seed_file(dir / "missing.csv"), ConfigError);
    CHECK(read_seed_file(testing::source_dir() / "data" / "seeds.csv").size() == 15);
}

TEST_CASE("library build bookkeeping and CSV round trip") {
    const SystemConstants c;
    const auto& lib = testing::small_library();
    CHECK(lib.size() == 4 + 4 + 3 + 3 + 3 + 2);
    const auto dir = testing::scratch_dir("library");
    write_library_csv(lib, dir / "a.csv");
    const auto back = read_library_csv(dir / "a.csv");
    REQUIRE(back.size() == lib.size());
    for (std::size_t i = 0; i < lib.size(); ++i) {
        CHECK(back[i].family == lib[i].family);
        CHECK(back[i].ic.x == lib[i].ic.x);
        CHECK(back[i].period == lib[i].period);
        CHECK(back[i].stability_index == lib[i].stability_index);
    }
    write_library_csv(back, dir / "b.csv");
    std::ifstream a(dir / "a.csv"), b(dir / "b.csv");
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
}

TEST_CASE("a failing seed is logged and skipped") {
    const SystemConstants c;
    std::vector<SeedPlan> plan{{FamilySeed{"bogus", 0.5, 0.3, 2.0, 1.0}, 0.01, 3}};
    for (const auto& s : read_seed_file(testing::source_dir() / "data" / "seeds.csv"))
        if (s.family == "dro") plan.push_back({s, -0.01, 2});
    const auto b = build_library(plan, c);
    CHECK(b.library.size() == 2);
    REQUIRE(b.log.size() == 2);
    CHECK(b.log[0].find("bogus") != std::string::npos);
    CHECK(b.log[0].find("failed") != std::string::npos);
    CHECK(build_library({}, c).library.size() == 0);
}

} // TEST_SUITE
