#pragma once

// Minimization of the discrete functional J / J+ and the Laplace solves used
// for harmonic replacement and harmonic measure.

#include <optional>

#include "fblab/problem.hpp"

namespace fblab {

struct SolveConfig {
    std::vector<double> eps_ladder{8, 4, 2, 1};  // multiples of h, strictly decreasing
    double step0 = 0.25;
    double shrink = 0.5;
    double armijo_c = 1e-4;
    double stop_rel = 1e-10;  // relative energy decrease over stop_window iterations
    int stop_window = 50;
    int max_iter = 50000;  // per epsilon stage
    bool project_nonneg = true;  // forced on for one-phase problems
    bool polish = true;          // final Laplace solve on the frozen positivity set
    double polish_tol = 1e-11;
    int polish_max_sweeps = 50000;

    void validate(double h) const;
};

struct TraceRow {
    int stage = 0;
    int iteration = 0;
    double eps = 0;
    double energy = 0;
};

struct SolveResult {
    ScalarField u;
    std::vector<TraceRow> energy_trace;
    double sharp_energy = 0;
    bool converged = false;
    int iterations = 0;
    WeightField weights;      // the weights the audits measure against
    WeightField weights_eff;  // perturbed weights the solver actually minimized
    AlmostMinParams amp;      // kappa = 0 for exact-minimizer runs
};

// Forward-difference edge energy + weighted phase volume. sharp selects the
// exact indicator; otherwise the ramp H_eps(u) = clamp(u/eps, 0, 1).
double energy(const ScalarField& u, const WeightField& w, const std::optional<Ball>& region,
              bool sharp, double eps = 0);

SolveResult minimize(const ProblemSpec& spec, const SolveConfig& cfg);

// Dirichlet-energy minimizer that agrees with u outside B ∩ {u>0}; harmonic
// (5-point) on the positivity set inside, Gauss-Seidel/SOR to 1e-10 * |u|_inf.
ScalarField harmonic_replace(const ScalarField& u, const WeightField& w, const Ball& b);

// Value at the pole of the harmonic function on {u>0} with boundary data 1 on
// the free boundary inside the target ball and 0 elsewhere.
double harmonic_measure(const ScalarField& u, const Point& pole, const Ball& target);

// SOR sweeps of the 5-point Laplace equation on nodes marked active; values
// elsewhere act as Dirichlet data. Returns sweeps used (max_sweeps if the
// tolerance was not reached).
int sor_laplace(ScalarField& u, const std::vector<std::uint8_t>& active, double omega, double tol,
                int max_sweeps, double clamp_lo, double clamp_hi);

double sor_optimal_omega(const Grid& g);

}  // namespace fblab
