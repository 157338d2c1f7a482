#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "reebqm/field.hpp"

using namespace reebqm;

TEST_CASE("grid invariants") {
    AnnulusGrid g(256, 128);
    CHECK(g.cell_area() * g.n_theta * g.n_s == 1.0);
    CHECK(g.theta_center(0) == Catch::Approx(0.5 / 256));
    CHECK_THROWS_AS(AnnulusGrid(1, 8), std::invalid_argument);
}

TEST_CASE("sphere gluing h") {
    SphereGluing g(1.0, 2 * 0.37);
    CHECK(g.total_area() == Catch::Approx(2.74));
    CHECK(g.percentile_h() == Catch::Approx(0.37));
    CHECK(g.percentile_compatible());
    CHECK_FALSE(SphereGluing(3.5, 0.0).percentile_compatible());
    CHECK_THROWS_AS(SphereGluing(-0.1, 0.0), std::invalid_argument);
}

TEST_CASE("linear_s samples the identity away from the ramps") {
    AnnulusGrid g(256, 256);
    auto f = materialize(FieldSpec::make_linear_s(), g);
    for (int j = 0; j < g.n_s; ++j) {
        double s = g.s_center(j);
        if (s < 0.01 || s > 0.99) continue;
        for (int i : {0, 100, 255})
            CHECK(std::fabs(f.at(i, j) - s) <= 1.0 / g.n_s);
    }
    // value 0.5 at s = 0.5
    int jmid = g.n_s / 2;
    CHECK(f.at(7, jmid) == Catch::Approx(g.s_center(jmid)).margin(1e-15));
    // boundary rows vanish
    for (int i = 0; i < g.n_theta; ++i) {
        CHECK(f.at(i, 0) == 0.0);
        CHECK(f.at(i, g.n_s - 1) == 0.0);
    }
}

TEST_CASE("plateau_bump hits its two areas") {
    AnnulusGrid g(256, 256);
    auto f = materialize(FieldSpec::make_plateau_bump(0.8, 0.9), g);
    double tol = 0.02;
    double plateau = superlevel_area(f, 1.0 - 1e-12);
    double support = 0.0;
    for (double v : f.samples) support += (v > 0.0);
    support *= g.cell_area();
    CHECK(plateau >= 0.8 - tol);
    CHECK(plateau <= 0.8 + tol);
    CHECK(support >= 0.9 - tol);
    CHECK(support <= 0.9 + tol);
}

TEST_CASE("materialize rejects bad bump parameters") {
    AnnulusGrid g(64, 64);
    CHECK_THROWS_AS(materialize(FieldSpec::make_plateau_bump(0.9, 0.8), g),
                    std::invalid_argument);
    CHECK_THROWS_AS(materialize(FieldSpec::make_plateau_bump(0.5, 1.2), g),
                    std::invalid_argument);
    CHECK_THROWS_AS(materialize(FieldSpec::make_plateau_bump(0.1, 0.3, 0.5, 0.02), g),
                    std::invalid_argument);
}

TEST_CASE("sum of zero fields is the zero field") {
    AnnulusGrid g(32, 32);
    auto zero = FieldSpec::make_linear_s(0.0);
    auto f = materialize(FieldSpec::make_sum({zero, zero}), g);
    for (double v : f.samples) CHECK(v == 0.0);
    CHECK(integral(f) == 0.0);
}

TEST_CASE("integral against quadrature oracle") {
    // oracle: Simpson quadrature of the restated closed-form profile
    double expected = oracle::integrate_1d(oracle::linear_profile, 0.0, 1.0);
    AnnulusGrid g(256, 256);
    auto f = materialize(FieldSpec::make_linear_s(), g);
    CHECK(integral(f) == Catch::Approx(expected).margin(5e-3));
    // spec-level squeeze: 0.5 up to twice the ramp-zone area
    CHECK(std::fabs(integral(f) - 0.5) < 2.0 * 0.02);

    auto bump = materialize(FieldSpec::make_plateau_bump(0.8, 0.9), g);
    double ib = integral(bump);
    CHECK(ib >= 0.8 - 0.02);
    CHECK(ib <= 0.9 + 0.02);
}

TEST_CASE("superlevel_area properties") {
    AnnulusGrid g(128, 128);
    auto f = materialize(FieldSpec::make_linear_s(), g);

    ScalarField zero;
    zero.grid = g;
    zero.samples.assign(g.ncells(), 0.0);
    CHECK(superlevel_area(zero, 0.5) == 0.0);

    // nonincreasing in c, and min level recovers the full area
    double prev = superlevel_area(f, f.min_sample());
    CHECK(prev == Catch::Approx(1.0));
    for (double c = 0.0; c <= 1.0; c += 0.05) {
        double a = superlevel_area(f, c);
        CHECK(a <= prev + 1e-12);
        prev = a;
    }

    // oracle value for the 0.5 superlevel of the linear profile
    double s_hi = 0.0;
    for (double s = 0.99; s <= 1.0; s += 1e-7)
        if (oracle::linear_profile(s) >= 0.5) s_hi = s;
    double expected = s_hi - 0.5;
    CHECK(superlevel_area(f, 0.5) == Catch::Approx(expected).margin(2.0 / g.n_s));

    auto bump = materialize(FieldSpec::make_plateau_bump(0.8, 0.9), g);
    double a = superlevel_area(bump, 0.5);
    CHECK(a >= 0.8 - 0.02);
    CHECK(a <= 0.9 + 0.02);
}

TEST_CASE("materialize is deterministic") {
    AnnulusGrid g(128, 64);
    auto spec = FieldSpec::make_sum(
        {FieldSpec::make_linear_s(2.0), FieldSpec::make_plateau_bump(0.2, 0.4, 0.3, 0.6)});
    auto f1 = materialize(spec, g);
    auto f2 = materialize(spec, g);
    REQUIRE(f1.samples.size() == f2.samples.size());
    for (size_t k = 0; k < f1.samples.size(); ++k) REQUIRE(f1.samples[k] == f2.samples[k]);
}

TEST_CASE("pushforward preserves the integral exactly") {
    AnnulusGrid g(128, 128);
    auto f = materialize(FieldSpec::make_linear_s(), g);

    auto sph = pushforward(f, SphereGluing(1.0, 1.0));
    CHECK(sph.total_area() == Catch::Approx(3.0));
    CHECK(integral(sph) == integral(f));

    auto bump = materialize(FieldSpec::make_plateau_bump(0.8, 0.9), g);
    auto bsph = pushforward(bump, SphereGluing(0.6, 0.4));
    CHECK(bsph.total_area() == Catch::Approx(2.0));
    CHECK(integral(bsph) == integral(bump));
    // support area 0.9 < half the sphere: displaceable
    double support = 0.0;
    for (double v : bsph.samples) support += (v > 0.0);
    CHECK(support * g.cell_area() < 0.5 * bsph.total_area());

    // zero field pushes to the zero field
    ScalarField zero;
    zero.grid = g;
    zero.samples.assign(g.ncells(), 0.0);
    auto zsph = pushforward(zero, SphereGluing(0.2, 0.7));
    CHECK(integral(zsph) == 0.0);
    CHECK(zsph.total_area() == Catch::Approx(1.9));

    // fields with boundary values are rejected
    ScalarField bad = zero;
    bad.samples[bad.grid.index(3, 0)] = 1.0;
    CHECK_THROWS_AS(pushforward(bad, SphereGluing(1.0, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(pushforward(sph, SphereGluing(1.0, 1.0)), std::invalid_argument);
}

TEST_CASE("field_value interpolates with theta wrap") {
    AnnulusGrid g(64, 64);
    auto f = materialize(FieldSpec::make_linear_s(), g);
    CHECK(field_value(f, 0.3, 0.5) == Catch::Approx(0.5).margin(1.0 / g.n_s));
    CHECK(field_value(f, -0.7, 0.5) == Catch::Approx(field_value(f, 0.3, 0.5)));
    CHECK(field_value(f, 1.3, 0.5) == Catch::Approx(field_value(f, 0.3, 0.5)));
}
