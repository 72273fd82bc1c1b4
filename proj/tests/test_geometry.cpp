#include <doctest.h>

#include "fblab/geometry.hpp"
#include "helpers.hpp"

using namespace fblab;
using namespace fblab::testing;

TEST_CASE("extract_boundary on the half plane") {
    Grid g = box(1.0, 401);  // h = 0.005
    ScalarField u = half_plane(g);
    FreeBoundary fb = extract_boundary(u);
    REQUIRE(!fb.empty());
    int big = 0;
    for (const auto& pl : fb.polylines())
        if (pl.verts.size() > 50) ++big;
    CHECK(big == 1);
    for (const auto& pl : fb.polylines())
        for (const auto& v : pl.verts) {
            CHECK(std::abs(v.p.y) <= g.spacing);
            // normals within 1 degree of +e2
            CHECK(v.normal.y > std::cos(M_PI / 180));
        }
}

TEST_CASE("extract_boundary on a circle") {
    Grid g = box(1.0, 401);
    ScalarField u = ScalarField::sample(
        g, [](const Point& p) { return std::max(norm(p) - 0.5, 0.0); });
    FreeBoundary fb = extract_boundary(u);
    REQUIRE(!fb.empty());
    // one closed polyline within h of |x| = 0.5
    const Polyline* loop = nullptr;
    for (const auto& pl : fb.polylines())
        if (pl.verts.size() > 50) loop = &pl;
    REQUIRE(loop);
    CHECK(loop->closed);
    for (const auto& v : loop->verts)
        CHECK(std::abs(norm(v.p) - 0.5) <= g.spacing);
    CHECK(fb.total_length() == doctest::Approx(M_PI).epsilon(0.02));
}

TEST_CASE("strictly positive fields have empty boundary") {
    Grid g = box(1.0, 65);
    ScalarField u = ScalarField::sample(g, [](const Point&) { return 2.0; });
    FreeBoundary fb = extract_boundary(u);
    CHECK(fb.empty());
}

TEST_CASE("fb_distance") {
    Grid g = box(1.0, 401);
    ScalarField u = half_plane(g);
    FreeBoundary fb = extract_boundary(u);
    CHECK(fb_distance(fb, {0.3, 0.4}) == doctest::Approx(0.4).epsilon(0.013));
    // a polyline vertex has distance ~0
    Point v0 = fb.polylines().front().verts.front().p;
    CHECK(fb_distance(fb, v0) < 1e-12);

    ScalarField uc = ScalarField::sample(
        g, [](const Point& p) { return std::max(norm(p) - 0.5, 0.0); });
    FreeBoundary fbc = extract_boundary(uc);
    CHECK(fb_distance(fbc, {0, 0}) == doctest::Approx(0.5).epsilon(0.013));

    FreeBoundary empty;
    CHECK_THROWS_AS(fb_distance(empty, {0, 0}), std::domain_error);
}

TEST_CASE("corkscrew points") {
    Grid g = box(1.0, 401);
    const double h = g.spacing;
    ScalarField u = half_plane(g);
    FreeBoundary fb = extract_boundary(u);

    CorkscrewResult in = corkscrew(u, fb, {0, 0}, 0.4, Side::Interior);
    REQUIRE(in.found);
    CHECK(in.clearance >= 0.19);
    CHECK(in.point.y > 0);
    CHECK(std::abs(in.point.x) <= 0.2);

    CorkscrewResult ext = corkscrew(u, fb, {0, 0}, 0.4, Side::Exterior);
    REQUIRE(ext.found);
    CHECK(ext.point.y < 0);
    CHECK(std::abs(ext.clearance - in.clearance) <= 3 * h);

    CHECK_FALSE(corkscrew(u, fb, {0, 0}, 1.5 * h, Side::Interior).found);
}

TEST_CASE("corkscrew clearance is scale coherent on the half plane") {
    Grid g = box(1.0, 401);
    const double h = g.spacing;
    ScalarField u = half_plane(g);
    FreeBoundary fb = extract_boundary(u);
    for (double r : {0.1, 0.2, 0.4}) {
        CorkscrewResult cs = corkscrew(u, fb, {0, 0}, r, Side::Interior);
        REQUIRE(cs.found);
        CHECK(std::abs(cs.clearance / r - 0.5) <= 2 * h / r + 1e-9);
    }
}

TEST_CASE("harnack chains on the half plane") {
    Grid g = box(1.0, 401);
    ScalarField u = half_plane(g);
    FreeBoundary fb = extract_boundary(u);

    SUBCASE("straight-line oracle at height 0.2") {
        HarnackChainResult hc = harnack_chain(u, fb, {-0.3, 0.2}, {0.3, 0.2});
        REQUIRE(hc.found);
        CHECK(hc.length <= 12);
        CHECK(hc.c2 <= 4.0);
        CHECK_FALSE(hc.retried);
    }

    SUBCASE("coincident endpoints") {
        HarnackChainResult hc = harnack_chain(u, fb, {0.1, 0.2}, {0.1, 0.2});
        CHECK(hc.found);
        CHECK(hc.length == 1);
    }

    SUBCASE("one ball nearly suffices when separation is small") {
        // delta = 0.2 on both ends, |x-y| = 0.1
        HarnackChainResult hc = harnack_chain(u, fb, {-0.05, 0.2}, {0.05, 0.2});
        REQUIRE(hc.found);
        CHECK(hc.length <= 3);
    }

    SUBCASE("chain length law") {
        for (double y : {0.05, 0.1, 0.2}) {
            HarnackChainResult hc = harnack_chain(u, fb, {-0.2, y}, {0.2, y});
            REQUIRE(hc.found);
            int ell = harnack_ell({-0.2, y}, {0.2, y}, y, y);
            CHECK(hc.length <= 40 * ell + 1);
            CHECK(hc.c2 <= 8.0);
        }
    }

    SUBCASE("endpoints must be inside the positivity set") {
        CHECK_THROWS_AS(harnack_chain(u, fb, {0, -0.2}, {0.3, 0.2}), std::invalid_argument);
    }
}

TEST_CASE("ahlfors ratio") {
    Grid g = box(1.0, 401);
    ScalarField u = half_plane(g);
    FreeBoundary fb = extract_boundary(u);
    for (double r : {0.05, 0.1, 0.2})
        CHECK(ahlfors_ratio(fb, {0, 0}, r) == doctest::Approx(1.0).epsilon(0.02));

    ScalarField uc = ScalarField::sample(
        g, [](const Point& p) { return std::max(norm(p) - 0.5, 0.0); });
    FreeBoundary fbc = extract_boundary(uc);
    // locally flat at small radius relative to curvature
    Point on_circle(0.5, 0);
    CHECK(ahlfors_ratio(fbc, on_circle, 0.1) == doctest::Approx(1.0).epsilon(0.03));

    // no intersection scores 0
    CHECK(ahlfors_ratio(fb, {0, 0.5}, 0.1) == 0.0);
}

TEST_CASE("hausdorff flatness") {
    Grid g = box(1.0, 401);
    const double h = g.spacing;
    ScalarField u = half_plane(g);
    FreeBoundary fb = extract_boundary(u);
    double r = 0.2;

    double flat = hausdorff_flatness(fb, {0, 0}, r, {0, 1}, h / 2);
    CHECK(flat <= 1.5 * h / r);

    for (double phi : {0.1, 0.3}) {
        Point e(-std::sin(phi), std::cos(phi));
        double tilted = hausdorff_flatness(fb, {0, 0}, r, e, h / 2);
        CHECK(tilted == doctest::Approx(std::sin(phi)).epsilon(0.10));
    }

    // curvature term r/(2R) for a circle of radius R
    ScalarField uc = ScalarField::sample(
        g, [](const Point& p) { return std::max(norm(p) - 0.5, 0.0); });
    FreeBoundary fbc = extract_boundary(uc);
    double curved = hausdorff_flatness(fbc, {0.5, 0}, 0.1, {1, 0}, h / 2);
    CHECK(curved == doctest::Approx(0.1 / (2 * 0.5)).epsilon(0.20));

    CHECK_THROWS_AS(hausdorff_flatness(fb, {0, 0.5}, 0.1, {0, 1}, h / 2), std::domain_error);
}

TEST_CASE("verify_almost_min on exact fields") {
    Grid g = box(1.0, 401);
    WeightField w = unit_weights(g);
    ScalarField u = half_plane(g);
    AlmostMinParams exact{0.0, 1.0};
    for (double r : {0.1, 0.2}) {
        AlmostMinReport rep = verify_almost_min(u, w, exact, {0.1, 0}, r, 5e-3);
        CHECK(!rep.degenerate);
        CHECK(rep.pass);
        CHECK(rep.defect <= 5e-3);
    }
    // a ball where u vanishes identically is degenerate
    AlmostMinReport deg = verify_almost_min(u, w, exact, {0, -0.6}, 0.1, 5e-3);
    CHECK(deg.degenerate);
}
