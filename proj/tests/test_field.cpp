#include <doctest.h>

#include <filesystem>
#include <random>

#include "fblab/field.hpp"
#include "helpers.hpp"

using namespace fblab;
using namespace fblab::testing;

TEST_CASE("bilinear interpolation basics") {
    Grid g = box(1.0, 101);
    ScalarField c3 = ScalarField::sample(g, [](const Point&) { return 3.0; });
    CHECK(eval_bilinear(c3, {0.123, -0.456}) == doctest::Approx(3.0).epsilon(1e-14));

    ScalarField lin = ScalarField::sample(g, [](const Point& p) { return p.y; });
    CHECK(eval_bilinear(lin, {0.3, 0.7}) == doctest::Approx(0.7).epsilon(1e-13));

    // x*y is bilinear, so interpolation is exact even off-node
    Grid coarse;
    coarse.origin = Point(0, 0);
    coarse.spacing = 0.5;
    coarse.dims = {5, 5, 1};
    ScalarField xy = ScalarField::sample(coarse, [](const Point& p) { return p.x * p.y; });
    CHECK(eval_bilinear(xy, {0.25, 0.25}) == doctest::Approx(0.0625).epsilon(1e-14));

    CHECK_THROWS_AS(eval_bilinear(lin, {5.0, 0.0}), std::domain_error);
}

TEST_CASE("bilinear exact on affine fields at random points") {
    Grid g = box(1.0, 64);
    ScalarField f =
        ScalarField::sample(g, [](const Point& p) { return 0.7 - 1.3 * p.x + 2.1 * p.y; });
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(-0.999, 0.999);
    for (int t = 0; t < 10000; ++t) {
        Point p(uni(rng), uni(rng));
        double want = 0.7 - 1.3 * p.x + 2.1 * p.y;
        CHECK(std::abs(eval_bilinear(f, p) - want) < 1e-12);
    }
}

TEST_CASE("gradient stencils") {
    Grid g = box(1.0, 101);
    ScalarField lin = ScalarField::sample(g, [](const Point& p) { return p.y; });
    GradientField gf = gradient(lin);
    for (int i = 0; i < g.dims[0]; i += 7)
        for (int j = 0; j < g.dims[1]; j += 7) {
            CHECK(std::abs(gf.comp[0].at(i, j)) < 1e-12);
            CHECK(std::abs(gf.comp[1].at(i, j) - 1.0) < 1e-12);
        }

    ScalarField c = ScalarField::sample(g, [](const Point&) { return 4.2; });
    GradientField gc = gradient(c);
    CHECK(gc.comp[0].max_abs() < 1e-13);
    CHECK(gc.comp[1].max_abs() < 1e-13);

    // centered differences are exact on quadratics
    Grid gq = Grid::square(1.0, 21);  // h = 0.1
    ScalarField q = ScalarField::sample(gq, [](const Point& p) { return p.x * p.x + p.y * p.y; });
    GradientField gg = gradient(q);
    CHECK(eval_bilinear(gg.comp[0], {0.5, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval_bilinear(gg.comp[1], {0.5, 0.0}) == doctest::Approx(0.0).epsilon(1e-12));

    // affine exactness at interior nodes
    ScalarField aff =
        ScalarField::sample(g, [](const Point& p) { return 1.0 + 2.0 * p.x - 0.5 * p.y; });
    GradientField ga = gradient(aff);
    for (int i = 1; i < g.dims[0] - 1; i += 11)
        for (int j = 1; j < g.dims[1] - 1; j += 11) {
            CHECK(std::abs(ga.comp[0].at(i, j) - 2.0) < 1e-12);
            CHECK(std::abs(ga.comp[1].at(i, j) + 0.5) < 1e-12);
        }
}

TEST_CASE("circle integral") {
    Grid g = box(1.5, 301);
    ScalarField one = ScalarField::sample(g, [](const Point&) { return 1.0; });
    CHECK(circle_integral(one, {{0, 0}, 1.0}, 256) == doctest::Approx(2 * M_PI).epsilon(1e-12));

    ScalarField y2 = ScalarField::sample(
        g, [](const Point& p) { return sqr(std::max(p.y, 0.0)); });
    // int_0^pi sin^2 = pi/2
    CHECK(circle_integral(y2, {{0, 0}, 1.0}, 2048) == doctest::Approx(M_PI / 2).epsilon(2e-3));

    ScalarField y = ScalarField::sample(g, [](const Point& p) { return p.y; });
    CHECK(std::abs(circle_integral(y, {{0, 0}, 0.8}, 512)) < 1e-12);

    CHECK_THROWS_AS(circle_integral(one, {{0, 0}, 2.0}, 64), std::domain_error);
    CHECK_THROWS_AS(circle_integral(one, {{0, 0}, 0.5}, 8), std::invalid_argument);
}

TEST_CASE("circle integral converges at least quadratically in n_theta") {
    Grid g = box(1.5, 801);
    ScalarField f = ScalarField::sample(
        g, [](const Point& p) { return std::exp(std::sin(3 * p.x)) * std::cos(4 * p.y); });
    Ball b{{0.1, -0.2}, 0.9};
    double ref = circle_integral(f, b, 1 << 14);
    double best_ratio = 0;
    for (int n : {16, 24, 32}) {
        double e1 = std::abs(circle_integral(f, b, n) - ref);
        double e2 = std::abs(circle_integral(f, b, 2 * n) - ref);
        best_ratio = std::max(best_ratio, e1 / std::max(e2, 1e-300));
    }
    CHECK(best_ratio >= 3.5);
}

TEST_CASE("ball integral") {
    Grid g = Grid::square(1.2, 241);  // h = 0.01
    ScalarField one = ScalarField::sample(g, [](const Point&) { return 1.0; });
    CHECK(ball_integral(one, {{0, 0}, 1.0}) == doctest::Approx(M_PI).epsilon(5e-3));

    ScalarField ind = ScalarField::sample(g, [](const Point& p) { return p.y > 0 ? 1.0 : 0.0; });
    CHECK(ball_integral(ind, {{0, 0}, 1.0}) == doctest::Approx(M_PI / 2).epsilon(5e-3));

    ScalarField zero = ScalarField::zeros(g);
    CHECK(ball_integral(zero, {{0, 0}, 1.0}) == 0.0);

    CHECK_THROWS_AS(ball_integral(one, {{1.0, 0}, 0.5}), std::domain_error);
}

TEST_CASE("rescale") {
    Grid g = box(1.0, 257);
    Grid out = Grid::square(0.5, 65);
    ScalarField hp = half_plane(g);

    ScalarField r1 = rescale(hp, {0, 0}, 0.25, out);
    for (int i = 0; i < out.dims[0]; i += 5)
        for (int j = 0; j < out.dims[1]; j += 5) {
            Point p = out.node(i, j);
            CHECK(r1.at(i, j) == doctest::Approx(std::max(p.y, 0.0)).epsilon(1e-12));
        }

    ScalarField shifted = ScalarField::sample(
        g, [](const Point& p) { return std::max(p.y - 0.2, 0.0); });
    ScalarField r2 = rescale(shifted, {0, 0.2}, 0.5, out);
    for (int j = 0; j < out.dims[1]; j += 5) {
        Point p = out.node(32, j);
        CHECK(r2.at(32, j) == doctest::Approx(std::max(p.y, 0.0)).epsilon(1e-12));
    }

    ScalarField quad = ScalarField::sample(g, [](const Point& p) { return dot(p, p); });
    ScalarField r3 = rescale(quad, {0, 0}, 0.5, out);
    // |x|^2 rescales to r |x|^2 plus the O(h^2) interpolation bias of the source
    for (int j = 0; j < out.dims[1]; j += 9) {
        Point p = out.node(40, j);
        CHECK(r3.at(40, j) == doctest::Approx(0.5 * dot(p, p)).epsilon(2e-4));
    }

    CHECK_THROWS_AS(rescale(hp, {0.9, 0.9}, 1.0, out), std::domain_error);
}

TEST_CASE("rescale composition") {
    Grid g = box(1.0, 257);
    ScalarField f = ScalarField::sample(
        g, [](const Point& p) { return std::sin(2 * p.x) + 0.3 * std::max(p.y, 0.0); });
    // grids chosen so the composed pullback lands on intermediate nodes
    Grid mid = Grid::square(1.0, 257);
    Grid fine = Grid::square(0.5, 65);
    Point x0(0.1, -0.05);
    ScalarField once = rescale(rescale(f, x0, 0.4, mid), {0, 0}, 0.5, fine);
    ScalarField direct = rescale(f, x0, 0.2, fine);
    for (std::size_t k = 0; k < once.values.size(); k += 17)
        CHECK(std::abs(once.values[k] - direct.values[k]) < 1e-10);
}

TEST_CASE("field file round trip") {
    Grid g = box(0.5, 33);
    ScalarField f = ScalarField::sample(
        g, [](const Point& p) { return std::cos(3 * p.x) * p.y; });
    auto dir = std::filesystem::temp_directory_path() / "fblab_field_test";
    std::filesystem::create_directories(dir);
    write_field(f, (dir / "f").string());
    ScalarField back = read_field((dir / "f").string());
    REQUIRE(back.values.size() == f.values.size());
    for (std::size_t k = 0; k < f.values.size(); ++k) CHECK(back.values[k] == f.values[k]);
    CHECK(back.grid.spacing == f.grid.spacing);

    export_pgm(f, (dir / "f.pgm").string());
    CHECK(std::filesystem::file_size(dir / "f.pgm") > 33 * 33);
}

TEST_CASE("rank-3 field operations") {
    Grid g;
    g.rank = 3;
    g.origin = Point(0, 0, 0);
    g.spacing = 0.25;
    g.dims = {9, 9, 9};
    ScalarField f = ScalarField::sample(
        g, [](const Point& p) { return 1.0 + p.x - 2 * p.y + 0.5 * p.z; });
    CHECK(eval_bilinear(f, {0.3, 0.4, 0.5}) ==
          doctest::Approx(1.0 + 0.3 - 0.8 + 0.25).epsilon(1e-13));
    GradientField gf = gradient(f);
    CHECK(gf.comp[2].at(4, 4, 4) == doctest::Approx(0.5).epsilon(1e-12));

    ScalarField one = ScalarField::sample(g, [](const Point&) { return 1.0; });
    double v = ball_integral(one, {{1.0, 1.0, 1.0}, 0.8});
    CHECK(v == doctest::Approx(4.0 / 3 * M_PI * 0.512).epsilon(2e-2));
}
