#include <doctest.h>

#include <random>

#include "fblab/monotone.hpp"
#include "helpers.hpp"

using namespace fblab;
using namespace fblab::testing;

TEST_CASE("weiss on the exact half plane") {
    Grid g = box(1.0, 512);
    ScalarField u = half_plane(g);
    WeightField w = unit_weights(g);
    for (double r : {0.05, 0.1, 0.25, 0.5}) {
        WeissSample s = weiss(u, w, {0, 0}, r);
        CHECK(s.W == doctest::Approx(M_PI / 2).epsilon(0.01));
        CHECK(s.W_tilde == doctest::Approx(M_PI / 2).epsilon(0.01));
        // bookkeeping identity, exact
        double recon = (s.dirichlet_part + s.volume_part) / (r * r) - s.sphere_part / (r * r * r);
        CHECK(s.W == doctest::Approx(recon).epsilon(1e-14));
    }
}

TEST_CASE("weiss per-part values for the slope family") {
    Grid g = box(1.0, 512);
    WeightField w = unit_weights(g);
    for (double a : {0.7, 1.0, 1.3}) {
        ScalarField ua =
            ScalarField::sample(g, [&](const Point& p) { return a * std::max(p.y, 0.0); });
        double r = 0.3;
        WeissSample s = weiss(ua, w, {0, 0}, r);
        CHECK(s.dirichlet_part / (r * r) == doctest::Approx(a * a * M_PI / 2).epsilon(0.01));
        CHECK(s.volume_part / (r * r) == doctest::Approx(M_PI / 2).epsilon(0.01));
        CHECK(s.sphere_part / (r * r * r) == doctest::Approx(a * a * M_PI / 2).epsilon(0.01));
        CHECK(s.W == doctest::Approx(M_PI / 2).epsilon(0.01));
    }
}

TEST_CASE("weiss vanishes on a dead ball and rejects off-boundary centers") {
    Grid g = box(1.0, 257);
    WeightField w = unit_weights(g);
    ScalarField u = ScalarField::sample(
        g, [](const Point& p) { return std::max(p.y - 0.5, 0.0); });
    WeissSample s = weiss(u, w, {0, -0.3}, 0.15);
    CHECK(s.W == 0.0);
    // center far inside the positivity set violates u(x0) ~ 0
    CHECK_THROWS_AS(weiss(u, w, {0, 0.9}, 0.05), std::invalid_argument);
}

TEST_CASE("weiss is rotation invariant") {
    Grid g = box(1.0, 512);
    WeightField w = unit_weights(g);
    double r = 0.25;
    WeissSample base = weiss(half_plane(g), w, {0, 0}, r);
    for (double phi : {0.3, 1.1, 2.0}) {
        WeissSample rot = weiss(tilted_plane(g, 1.0, phi), w, {0, 0}, r);
        CHECK(rot.W == doctest::Approx(base.W).epsilon(5e-3));
    }
}

TEST_CASE("weiss scaling identity") {
    // W(u, x0, t r) = W_{x0}(u_{r,x0}, t)
    Grid g = box(1.0, 512);
    ScalarField u = half_plane(g);
    WeightField w = unit_weights(g);
    std::mt19937_64 rng(7);
    // resampling noise scales like h/(s t); stay where the grid resolves it
    std::uniform_real_distribution<double> uni(0.3, 0.7);
    Point x0(0, 0);
    for (int t_i = 0; t_i < 20; ++t_i) {
        double s = uni(rng), t = uni(rng);
        Grid sub = Grid::square(0.75, 385);  // covers B(0, 0.75) in the blown-up frame
        ScalarField resc = rescale(u, x0, s, sub);
        WeightField wsub = unit_weights(sub);
        double lhs = weiss(u, w, x0, t * s).W;
        double rhs = weiss(resc, wsub, {0, 0}, t).W;
        CHECK(lhs == doctest::Approx(rhs).epsilon(0.02));
    }
}

TEST_CASE("dissipation on homogeneous fields is zero") {
    Grid g = box(1.0, 512);
    ScalarField u = half_plane(g);
    CHECK(dissipation(u, {0, 0}, 0.1, 0.4) <= 1e-6);

    // |x| is curved at grid scale, so the floor is interpolation-limited
    ScalarField cone = ScalarField::sample(g, [](const Point& p) { return norm(p); });
    CHECK(dissipation(cone, {0, 0}, 0.1, 0.4) <= 1e-4);

    CHECK_THROWS_AS(dissipation(u, {0, 0}, 0.4, 0.1), std::invalid_argument);
}

TEST_CASE("dissipation of the shifted field matches a Monte Carlo oracle") {
    Grid g = box(1.0, 512);
    ScalarField u = ScalarField::sample(
        g, [](const Point& p) { return std::max(p.y, 0.0) + 0.1; });
    double got = dissipation(u, {0, 0}, 0.2, 0.4);
    CHECK(got > 0);

    // Monte Carlo oracle on the analytic integrand; (u - grad u . x)^2 = 0.01
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> ut(0.2, 0.4), uth(0, 2 * M_PI);
    double acc = 0;
    const int N = 1000000;
    for (int k = 0; k < N; ++k) {
        double t = ut(rng), th = uth(rng);
        Point p(t * std::cos(th), t * std::sin(th));
        double val = std::max(p.y, 0.0) + 0.1;
        double radial = (p.y > 0 ? 1.0 : 0.0) * p.y;
        acc += sqr(val - radial) / std::pow(t, 4) * (2 * M_PI * t);
    }
    double oracle = acc / N * 0.2;  // interval length
    CHECK(got == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("dissipation is additive in the radius interval") {
    Grid g = box(1.0, 512);
    ScalarField u = ScalarField::sample(
        g, [](const Point& p) { return std::max(p.y, 0.0) + 0.05 * std::sin(3 * p.x); });
    double whole = dissipation(u, {0, 0}, 0.1, 0.4);
    double a = dissipation(u, {0, 0}, 0.1, 0.25);
    double b = dissipation(u, {0, 0}, 0.25, 0.4);
    CHECK(std::abs(whole - (a + b)) < 1e-9);
}

TEST_CASE("monotone audit on the exact half plane") {
    Grid g = box(1.0, 512);
    ScalarField u = half_plane(g);
    WeightField w = unit_weights(g);
    auto ladder = default_ladder(0.4, 6 * g.spacing, 0.8);
    MonotoneAudit audit = audit_monotone(u, w, {0.0, 1.0}, {0, 0}, ladder);
    CHECK(audit.all_pass);
    CHECK(audit.C_hat <= 0.05);
    for (const auto& st : audit.steps) CHECK(std::abs(st.defect) <= 0.01);
    CHECK(audit.W0 == doctest::Approx(M_PI / 2).epsilon(0.01));
}

TEST_CASE("acf on exact fields") {
    Grid g = box(1.0, 512);
    std::vector<double> ladder{0.1, 0.2, 0.3, 0.4};

    ScalarField tp = two_plane(g, 1.0, 1.0);  // u = x2
    auto rows = acf(tp, {0, 0}, ladder);
    for (const auto& s : rows) {
        CHECK(s.phi_f == doctest::Approx(M_PI / 2).epsilon(0.01));
        CHECK(s.phi_g == doctest::Approx(M_PI / 2).epsilon(0.01));
        CHECK(s.F == doctest::Approx(M_PI * M_PI / 4).epsilon(0.01));
    }

    ScalarField hp = half_plane(g);
    for (const auto& s : acf(hp, {0, 0}, ladder)) CHECK(s.F == 0.0);
}
