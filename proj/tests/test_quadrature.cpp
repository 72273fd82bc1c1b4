#include <doctest.h>

#include "fblab/quadrature.hpp"
#include "helpers.hpp"

using namespace fblab;
using namespace fblab::testing;

// Closed forms for the half-plane (x2)_+ on B(0,r): the Dirichlet integral and
// the positive area are both pi r^2 / 2.

TEST_CASE("phase parts on the half plane, kink between nodes") {
    Grid g = box(1.0, 512);  // zero line falls midway between node rows
    ScalarField u = half_plane(g);
    for (double r : {0.05, 0.1, 0.3}) {
        PhaseParts pp = phase_parts(u, {{0, 0}, r});
        CHECK(pp.dir_plus == doctest::Approx(M_PI * r * r / 2).epsilon(4e-3));
        CHECK(pp.vol_plus == doctest::Approx(M_PI * r * r / 2).epsilon(4e-3));
        CHECK(pp.dir_minus == 0.0);
        CHECK(pp.vol_minus == 0.0);
    }
}

TEST_CASE("phase parts on the half plane, kink on nodes") {
    Grid g = box(1.0, 513);  // zero line lies exactly on a node row
    ScalarField u = half_plane(g);
    for (double r : {0.05, 0.1, 0.3}) {
        PhaseParts pp = phase_parts(u, {{0, 0}, r});
        CHECK(pp.dir_plus == doctest::Approx(M_PI * r * r / 2).epsilon(4e-3));
        CHECK(pp.vol_plus == doctest::Approx(M_PI * r * r / 2).epsilon(4e-3));
    }
}

TEST_CASE("phase parts on a tilted half plane") {
    Grid g = box(1.0, 512);
    double phi = 0.37;  // radians
    ScalarField u = tilted_plane(g, 1.3, phi);
    double r = 0.2;
    PhaseParts pp = phase_parts(u, {{0, 0}, r});
    CHECK(pp.dir_plus == doctest::Approx(1.3 * 1.3 * M_PI * r * r / 2).epsilon(5e-3));
    CHECK(pp.vol_plus == doctest::Approx(M_PI * r * r / 2).epsilon(5e-3));
}

TEST_CASE("phase parts on the two-plane field") {
    Grid g = box(1.0, 512);
    ScalarField u = two_plane(g, 1.0, 1.0);  // u = x2
    double r = 0.25;
    PhaseParts pp = phase_parts(u, {{0, 0}, r});
    CHECK(pp.dir_plus == doctest::Approx(M_PI * r * r / 2).epsilon(5e-3));
    CHECK(pp.dir_minus == doctest::Approx(M_PI * r * r / 2).epsilon(5e-3));
    CHECK(pp.vol_plus == doctest::Approx(M_PI * r * r / 2).epsilon(5e-3));
    CHECK(pp.vol_minus == doctest::Approx(M_PI * r * r / 2).epsilon(5e-3));
}

TEST_CASE("reconstructed samples recover the sharp profile inside kink cells") {
    Grid g = box(1.0, 512);
    ScalarField u = half_plane(g);
    double h = g.spacing;
    // probe points straddling the zero line inside the kink band
    for (double y : {-0.4 * h, -0.1 * h, 0.1 * h, 0.4 * h}) {
        FieldSample fs = recon_sample(u, {0.123, y});
        CHECK(fs.value == doctest::Approx(std::max(y, 0.0)).epsilon(1e-10));
        if (y > 0) {
            CHECK(fs.grad.x == doctest::Approx(0.0).epsilon(1e-10));
            CHECK(fs.grad.y == doctest::Approx(1.0).epsilon(1e-10));
        } else {
            CHECK(fs.value == 0.0);
        }
    }
    // bulk: plain bilinear
    FieldSample deep = recon_sample(u, {0.0, 0.5});
    CHECK(deep.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(deep.grad.y == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("onesided gradient avoids the kink") {
    Grid g = box(1.0, 513);
    ScalarField u = half_plane(g);
    int j0 = 256;  // node row at y = 0
    Point grad_above = onesided_node_gradient(u, 100, j0 + 1);
    CHECK(grad_above.y == doctest::Approx(1.0).epsilon(1e-12));
    Point grad_zero = onesided_node_gradient(u, 100, j0 - 1);
    CHECK(grad_zero.y == doctest::Approx(0.0).epsilon(1e-12));
}
