#pragma once

#include <cmath>
#include <random>

#include "fblab/field.hpp"
#include "fblab/problem.hpp"

namespace fblab::testing {

// [-half, half]^2 with n nodes per axis
inline Grid box(double half = 1.0, int n = 257) { return Grid::square(half, n); }

inline ScalarField half_plane(const Grid& g, double lambda = 1.0) {
    return ScalarField::sample(g, [&](const Point& p) { return lambda * std::max(p.y, 0.0); });
}

inline ScalarField tilted_plane(const Grid& g, double lambda, double phi, Point c = {}) {
    Point nu(-std::sin(phi), std::cos(phi));
    return ScalarField::sample(
        g, [&](const Point& p) { return lambda * std::max(dot(p - c, nu), 0.0); });
}

inline ScalarField two_plane(const Grid& g, double lp = 1.0, double lm = 1.0) {
    return ScalarField::sample(g, [&](const Point& p) {
        return lp * std::max(p.y, 0.0) - lm * std::max(-p.y, 0.0);
    });
}

inline WeightField unit_weights(const Grid& g) { return make_constant_weights(g, 1.0, 0.0); }

}  // namespace fblab::testing
