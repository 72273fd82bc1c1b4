#pragma once

// Problem specifications: weight fields with Hölder control, boundary data,
// and the perturbation scheme that manufactures certified almost-minimizers.

#include <cstdint>
#include <optional>
#include <string>

#include "fblab/field.hpp"

namespace fblab {

struct WeightField {
    ScalarField q_plus;
    ScalarField q_minus;  // identically 0 for the one-phase problem
    double c0 = 1.0;
    double alpha = 1.0;
    double holder_seminorm = 0.0;

    bool two_phase() const;
    void validate(std::uint64_t pair_seed = 0xfb1abu, int n_pairs = 100000) const;
};

struct AlmostMinParams {
    double kappa = 0.0;   // 0 means exact minimizer
    double alpha = 1.0;
};

struct HolderNoiseSpec {
    std::uint64_t seed = 0;
    double lambda_pert = 0.0;
    double alpha = 0.5;
};

enum class Phase { OnePhase, TwoPhase };

struct DirichletSpec {
    enum class Kind { HalfPlane, TwoPlane, Tabulated } kind = Kind::HalfPlane;
    // half-plane: lambda <x-c, nu>_+ ; two-plane: lp <x-c,nu>_+ - lm <x-c,nu>_-
    double lambda_plus = 1.0;
    double lambda_minus = 0.0;
    Point center;
    Point normal{0, 1, 0};
    std::vector<double> table;  // boundary trace, counterclockwise from (0,0) corner

    double eval(const Point& p) const;
};

struct WeightSpec {
    enum class Kind { Constant, Holder } kind = Kind::Constant;
    double value = 1.0;  // constant case
    std::uint64_t seed = 0;
    double c0 = 1.0;
    double amplitude = 0.0;
    double alpha = 1.0;
};

struct ProblemSpec {
    Grid grid;
    WeightSpec qplus_spec;
    WeightSpec qminus_spec{WeightSpec::Kind::Constant, 0.0, 0, 0.0, 0.0, 1.0};
    Phase phase = Phase::OnePhase;
    DirichletSpec dirichlet;
    std::optional<HolderNoiseSpec> perturbation;
    std::uint64_t seed = 0;

    void validate() const;
    WeightField build_weights() const;  // unperturbed
    std::string to_json() const;
    static ProblemSpec from_json(const std::string& text);
};

// Weierstrass-type field with a prescribed Hölder exponent at all resolved
// scales. Deterministic in (seed, parameters).
ScalarField make_holder_field(std::uint64_t seed, double c0, double amplitude, double alpha,
                              const Grid& grid);

// Empirical Hölder-alpha seminorm over seeded random node pairs.
double holder_seminorm_estimate(const ScalarField& f, double alpha, std::uint64_t seed,
                                int n_pairs);

// Multiplies q^2 by (1+eps) with eps a mean-zero Hölder field of seminorm
// lambda_pert; the exact minimizer for the new weights is an almost-minimizer
// for the old ones with kappa = 2^(alpha+2) * lambda_pert.
std::pair<WeightField, AlmostMinParams> perturbed_weights(const WeightField& w,
                                                          std::uint64_t seed, double lambda_pert,
                                                          double alpha);

WeightField make_constant_weights(const Grid& g, double lambda_plus, double lambda_minus = 0.0);

}  // namespace fblab
