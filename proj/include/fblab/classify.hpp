#pragma once

// Blow-up extraction, flatness measurement, regular-point classification via
// the Weiss density, normal-derivative checks, and the flatness-decay audit.

#include "fblab/geometry.hpp"
#include "fblab/monotone.hpp"

namespace fblab {

struct FlatnessReport {
    Point x0;
    double r = 0;
    double sigma = 1;  // minimal flatness over the searched directions
    Point direction{0, 1, 0};
    double hausdorff_sigma = -1;  // filled when a boundary is supplied
};

// Minimal sigma such that u vanishes on the slab <x-x0,e> <= -sigma r and
// dominates the tilted plane beyond +sigma r; bisection per direction.
FlatnessReport flatness(const ScalarField& u, const WeightField& w, const Point& x0, double r,
                        int n_dir = 360, const FreeBoundary* fb = nullptr);

// Same search restricted to one direction.
double flatness_in_direction(const ScalarField& u, const WeightField& w, const Point& x0,
                             double r, const Point& e);

struct BlowupResult {
    ScalarField rescaled;   // unit-ball frame at 128^2 resolution
    double slope = 0;       // fitted a
    Point direction{0, 1, 0};
    double misfit = 0;      // sup-norm against a<x,nu>_+ on the unit ball
};

BlowupResult blowup_fit(const ScalarField& u, const WeightField& w, const Point& x0, double r);

struct Classification {
    Point x0;
    double W0 = 0;
    double gap_ratio = 0;
    double fit_residual = 0;
    bool regular = false;
    std::string label;  // "regular" | "unresolved"
};

Classification classify_point(const ScalarField& u, const WeightField& w, const Point& x0,
                              const std::vector<double>& ladder, double eps_gap = 0.15);

// Least-squares slope of t -> u(z + t nu) over t in [2h, 8h].
double normal_derivative(const ScalarField& u, const Point& z, const Point& nu);

struct WeakIdentityRow {
    double lhs = 0;       // -int <grad h, grad zeta>
    double rhs = 0;       // int_Gamma zeta d+h/dnu dH1
    double residual = 0;  // relative
};

struct WeakIdentityReport {
    std::vector<WeakIdentityRow> rows;
    double median_residual = 0;
};

WeakIdentityReport weak_identity_check(const ScalarField& h, const FreeBoundary& fb, const Ball& b,
                                       int n_trials, std::uint64_t seed = 0x5eedu);

struct DecayStep {
    double r = 0;
    double sigma = 0;
    Point direction;
    double floor = 0;      // 4h/r
    bool above_floor = false;
    bool improved = true;  // sigma_{k+1} <= max(theta sigma_k, floor)
    double drift = 0;      // |e_{k+1} - e_k|
};

struct DecayReport {
    std::vector<DecayStep> steps;
    double alpha_tilde = 0;  // fitted decay exponent over above-floor steps
    bool alpha_measurable = false;
    double drift_constant = 0;  // fitted C in |de| <= C sigma
    bool truncated = false;     // ladder ran out of resolution
};

DecayReport decay_audit(const ScalarField& u, const WeightField& w, const Point& x0, double theta,
                        double eta, double r0, int max_steps = 8, int n_dir = 360);

}  // namespace fblab
