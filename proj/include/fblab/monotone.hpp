#pragma once

// Weiss energies W and W-tilde, the dissipation term, the ACF two-phase
// functional, and ladder audits of almost-monotonicity.

#include "fblab/problem.hpp"
#include "fblab/quadrature.hpp"

namespace fblab {

struct WeissSample {
    Point x0;
    double r = 0;
    double W = 0;
    double W_tilde = 0;
    double dirichlet_part = 0;  // int_B |grad u|^2 (unnormalized)
    double volume_part = 0;     // int_B q+(x0)^2 chi+ + q-(x0)^2 chi-
    double sphere_part = 0;     // int_{dB} u^2 dsigma
    double normal_part = 0;     // int_0^r t^(1-n) int_{dB_t} (grad u . nu)^2 dsigma dt
    double dissipation = 0;     // filled by ladder audits (s -> r step)
};

// Center value test: u(x0) must vanish within 2h * Lip(u).
bool on_zero_set(const ScalarField& u, const Point& x0);

WeissSample weiss(const ScalarField& u, const WeightField& w, const Point& x0, double r);

// int_s^r t^-(n+2) int_{dB(x0,t)} (u - grad u . (x - x0))^2 dsigma dt
double dissipation(const ScalarField& u, const Point& x0, double s, double r);

struct MonotoneStep {
    double r_hi = 0, r_lo = 0;
    double W_hi = 0, W_lo = 0;
    double defect = 0;       // W(r_lo) - W(r_hi)
    double dissipation = 0;  // over [r_lo, r_hi]
    bool pass_drift = false;
    bool pass_dissipation = false;
};

struct MonotoneAudit {
    std::vector<double> ladder;
    std::vector<WeissSample> samples;
    std::vector<MonotoneStep> steps;
    double C_hat = 0;  // fitted drift constant
    double W0 = 0;     // extrapolated density W(u, x0, 0)
    double W0_residual = 0;
    bool all_pass = true;
};

std::vector<double> default_ladder(double r_max, double r_min, double gamma = 0.8);

MonotoneAudit audit_monotone(const ScalarField& u, const WeightField& w,
                             const AlmostMinParams& amp, const Point& x0,
                             const std::vector<double>& ladder, double tau_disc = 5e-3);

struct AcfSample {
    double R = 0;
    double phi_f = 0;
    double phi_g = 0;
    double F = 0;
};

// phi(R) = R^-2 int_B(x0,R) |grad u_pm|^2 (the n=2 kernel is identically 1)
std::vector<AcfSample> acf(const ScalarField& u, const Point& x0,
                           const std::vector<double>& R_ladder);

}  // namespace fblab
