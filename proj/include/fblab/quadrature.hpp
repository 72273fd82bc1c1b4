#pragma once

// Phase-aware quadrature for fields with a free boundary.
//
// Sampled one-phase fields look like (a <x,nu> - c)_+ near the zero set: the
// kink falls inside a grid cell and plain bilinear interpolation smears both
// the Dirichlet density and the positivity indicator over an O(h) band, which
// is too coarse for percent-level energy audits at small radii. Cells that mix
// exact zeros with positive samples are therefore resampled from a linear
// profile extended from the positive side; cells with a transversal sign
// change (two-phase) keep the bilinear interpolant, which is accurate there.

#include "fblab/field.hpp"

namespace fblab {

enum class CellKind {
    Zero,          // all corners == 0
    BulkPositive,  // all corners > 0
    BulkNegative,  // all corners < 0
    KinkPositive,  // corners mix 0 and > 0
    KinkNegative,  // corners mix 0 and < 0
    Transversal,   // corners of both strict signs
};

CellKind classify_cell(const ScalarField& u, int ci, int cj);

// One-sided gradient at a node: differences step away from exact zeros so the
// estimate never straddles the kink.
Point onesided_node_gradient(const ScalarField& u, int i, int j);

struct FieldSample {
    double value = 0;
    Point grad;
};

// Boundary-aware point sample (value and gradient of the reconstruction).
FieldSample recon_sample(const ScalarField& u, const Point& p);

struct PhaseParts {
    double dir_plus = 0;   // integral of |grad u|^2 over {u>0}
    double dir_minus = 0;  // integral of |grad u|^2 over {u<0}
    double vol_plus = 0;   // |{u>0} ∩ B|
    double vol_minus = 0;  // |{u<0} ∩ B|
};

// Cell loop over B with rim/kink subsampling.
PhaseParts phase_parts(const ScalarField& u, const Ball& b);

}  // namespace fblab
