#include "fblab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fblab {

void SolveConfig::validate(double h) const {
    if (eps_ladder.empty()) throw std::invalid_argument("eps ladder must be nonempty");
    for (std::size_t i = 0; i + 1 < eps_ladder.size(); ++i)
        if (eps_ladder[i] <= eps_ladder[i + 1])
            throw std::invalid_argument("eps ladder must be strictly decreasing");
    if (eps_ladder.back() * h < h * (1 - 1e-12))
        throw std::invalid_argument("eps ladder entries must be >= h");
    if (!(step0 > 0) || !(shrink > 0 && shrink < 1))
        throw std::invalid_argument("bad step rule parameters");
}

namespace {

inline double ramp(double v, double eps) { return std::clamp(v / eps, 0.0, 1.0); }

struct InRegion {
    const std::optional<Ball>& b;
    bool operator()(const Point& p) const {
        if (!b) return true;
        return sqr(p.x - b->center.x) + sqr(p.y - b->center.y) +
                   sqr(p.z - b->center.z) <=
               sqr(b->radius);
    }
};

}  // namespace

double energy(const ScalarField& u, const WeightField& w, const std::optional<Ball>& region,
              bool sharp, double eps) {
    const Grid& g = u.grid;
    if (region && !g.contains_ball(*region)) throw std::domain_error("energy region exits grid");
    if (!sharp && !(eps > 0)) throw std::invalid_argument("smoothed energy needs eps > 0");
    InRegion in{region};
    const double h = g.spacing;
    const double edge_w = std::pow(h, g.rank - 2);
    const double cell_w = std::pow(h, g.rank);
    double dir = 0, vol = 0;
    const int nk = g.rank == 3 ? g.dims[2] : 1;
    for (int i = 0; i < g.dims[0]; ++i)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int k = 0; k < nk; ++k) {
                Point p = g.node(i, j, k);
                double uv = u.at(i, j, k);
                if (in(p)) {
                    double qp = w.q_plus.at(i, j, k), qm = w.q_minus.at(i, j, k);
                    double ip = sharp ? (uv > 0 ? 1.0 : 0.0) : ramp(uv, eps);
                    double im = sharp ? (uv < 0 ? 1.0 : 0.0) : ramp(-uv, eps);
                    vol += qp * qp * ip + qm * qm * im;
                }
                for (int a = 0; a < g.rank; ++a) {
                    int ii = i + (a == 0), jj = j + (a == 1), kk = k + (a == 2);
                    if (ii >= g.dims[0] || jj >= g.dims[1] || (g.rank == 3 && kk >= g.dims[2]))
                        continue;
                    Point q = g.node(ii, jj, kk);
                    Point mid{(p.x + q.x) / 2, (p.y + q.y) / 2, (p.z + q.z) / 2};
                    if (!in(mid)) continue;
                    dir += sqr(u.at(ii, jj, kk) - uv);
                }
            }
    return edge_w * dir + cell_w * vol;
}

double sor_optimal_omega(const Grid& g) {
    double L = std::max(g.extent(0), g.extent(1));
    return 2.0 / (1.0 + std::sin(M_PI * g.spacing / L));
}

int sor_laplace(ScalarField& u, const std::vector<std::uint8_t>& active, double omega, double tol,
                int max_sweeps, double clamp_lo, double clamp_hi) {
    const Grid& g = u.grid;
    if (g.rank != 2) throw std::invalid_argument("sor_laplace requires rank 2");
    const int nx = g.dims[0], ny = g.dims[1];
    // restrict sweeps to the bounding box of the active set
    int blo = nx, bhi = -1, clo = ny, chi = -1;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            if (active[g.index(i, j)]) {
                blo = std::min(blo, i);
                bhi = std::max(bhi, i);
                clo = std::min(clo, j);
                chi = std::max(chi, j);
            }
    if (bhi < 0) return 0;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double max_delta = 0;
        for (int i = blo; i <= bhi; ++i)
            for (int j = clo; j <= chi; ++j) {
                std::size_t id = g.index(i, j);
                if (!active[id]) continue;
                double s = 0;
                int cnt = 0;
                if (i > 0) { s += u.at(i - 1, j); ++cnt; }
                if (i < nx - 1) { s += u.at(i + 1, j); ++cnt; }
                if (j > 0) { s += u.at(i, j - 1); ++cnt; }
                if (j < ny - 1) { s += u.at(i, j + 1); ++cnt; }
                double target = s / cnt;
                double next = u.values[id] + omega * (target - u.values[id]);
                next = std::clamp(next, clamp_lo, clamp_hi);
                max_delta = std::max(max_delta, std::abs(next - u.values[id]));
                u.values[id] = next;
            }
        if (max_delta < tol) return sweep;
    }
    return max_sweeps;
}

namespace {

std::vector<std::uint8_t> interior_mask(const Grid& g) {
    std::vector<std::uint8_t> m(g.size(), 0);
    for (int i = 1; i < g.dims[0] - 1; ++i)
        for (int j = 1; j < g.dims[1] - 1; ++j) m[g.index(i, j)] = 1;
    return m;
}

// boundary-node visit order: counterclockwise from the (0,0) corner
template <class F>
void for_boundary_nodes(const Grid& g, F&& fn) {
    int nx = g.dims[0], ny = g.dims[1];
    for (int i = 0; i < nx; ++i) fn(i, 0);
    for (int j = 1; j < ny; ++j) fn(nx - 1, j);
    for (int i = nx - 2; i >= 0; --i) fn(i, ny - 1);
    for (int j = ny - 2; j >= 1; --j) fn(0, j);
}

ScalarField initial_iterate(const ProblemSpec& spec) {
    const Grid& g = spec.grid;
    if (spec.dirichlet.kind != DirichletSpec::Kind::Tabulated) {
        ScalarField u =
            ScalarField::sample(g, [&](const Point& p) { return spec.dirichlet.eval(p); });
        return u;
    }
    // tabulated trace: fill the boundary, then harmonic extension
    ScalarField u = ScalarField::zeros(g);
    std::size_t idx = 0;
    for_boundary_nodes(g, [&](int i, int j) { u.at(i, j) = spec.dirichlet.table[idx++]; });
    auto mask = interior_mask(g);
    sor_laplace(u, mask, sor_optimal_omega(g), 1e-12 * std::max(1.0, u.max_abs()), 100000,
                -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
    return u;
}

}  // namespace

namespace {

// Laplace solve on the frozen sign sets; returns false if a solve hit its
// sweep cap.
bool polish_pass(ScalarField& u, const WeightField& w, const SolveConfig& cfg, bool one_phase,
                 double tol_relax = 1.0) {
    (void)w;
    const Grid& g = u.grid;
    const int nx = g.dims[0], ny = g.dims[1];
    double scale = std::max(u.max_abs(), 1e-12);
    bool ok = true;
    std::vector<std::uint8_t> act(g.size(), 0);
    bool any = false;
    for (int i = 1; i < nx - 1; ++i)
        for (int j = 1; j < ny - 1; ++j)
            if (u.at(i, j) > 0) {
                act[g.index(i, j)] = 1;
                any = true;
            }
    if (any) {
        int sw = sor_laplace(u, act, sor_optimal_omega(g), cfg.polish_tol * scale * tol_relax,
                             cfg.polish_max_sweeps, 0.0,
                             std::numeric_limits<double>::infinity());
        ok = ok && sw < cfg.polish_max_sweeps;
    }
    if (!one_phase) {
        std::fill(act.begin(), act.end(), 0);
        any = false;
        for (int i = 1; i < nx - 1; ++i)
            for (int j = 1; j < ny - 1; ++j)
                if (u.at(i, j) < 0) {
                    act[g.index(i, j)] = 1;
                    any = true;
                }
        if (any) {
            int sw = sor_laplace(u, act, sor_optimal_omega(g), cfg.polish_tol * scale * tol_relax,
                                 cfg.polish_max_sweeps,
                                 -std::numeric_limits<double>::infinity(), 0.0);
            ok = ok && sw < cfg.polish_max_sweeps;
        }
    }
    return ok;
}

// One sweep of single-node interface moves against the sharp functional:
// zero out a signed node when that pays, activate a zero node at its
// harmonic value when that pays. Returns the number of accepted moves.
int sharp_interface_sweep(ScalarField& u, const WeightField& w, bool one_phase) {
    const Grid& g = u.grid;
    const int nx = g.dims[0], ny = g.dims[1];
    const double cell = g.spacing * g.spacing;
    int moves = 0;
    for (int i = 1; i < nx - 1; ++i)
        for (int j = 1; j < ny - 1; ++j) {
            double v = u.at(i, j);
            double S = u.at(i - 1, j) + u.at(i + 1, j) + u.at(i, j - 1) + u.at(i, j + 1);
            double qp = w.q_plus.at(i, j), qm = w.q_minus.at(i, j);
            if (v > 0) {
                // zeroing changes the edge part by 2vS - 4v^2 and saves the
                // positive phase cell
                if (2 * v * S - 4 * v * v - cell * qp * qp < -1e-300) {
                    u.at(i, j) = 0;
                    ++moves;
                }
            } else if (v < 0) {
                if (2 * v * S - 4 * v * v - cell * qm * qm < -1e-300) {
                    u.at(i, j) = 0;
                    ++moves;
                }
            } else {
                double m = S / 4;
                if (m > 0 && 4 * m * m > cell * qp * qp) {
                    u.at(i, j) = m;
                    ++moves;
                } else if (!one_phase && m < 0 && 4 * m * m > cell * qm * qm) {
                    u.at(i, j) = m;
                    ++moves;
                }
            }
        }
    return moves;
}

// Trial move of the whole one-node interface shell (advance: activate zero
// nodes adjacent to the positive set at their harmonic average; retreat: zero
// the positive nodes adjacent to the zero set), re-polished and accepted only
// if the sharp functional drops. E_sharp is updated on acceptance.
bool try_shell_move(ScalarField& u, const WeightField& w, const SolveConfig& cfg, bool one_phase,
                    bool advance, double& E_sharp) {
    const Grid& g = u.grid;
    const int nx = g.dims[0], ny = g.dims[1];
    ScalarField trial = u;
    int touched = 0;
    for (int i = 1; i < nx - 1; ++i)
        for (int j = 1; j < ny - 1; ++j) {
            double v = u.at(i, j);
            bool zero_nbr = u.at(i - 1, j) == 0 || u.at(i + 1, j) == 0 || u.at(i, j - 1) == 0 ||
                            u.at(i, j + 1) == 0;
            bool pos_nbr = u.at(i - 1, j) > 0 || u.at(i + 1, j) > 0 || u.at(i, j - 1) > 0 ||
                           u.at(i, j + 1) > 0;
            if (advance && v == 0 && pos_nbr) {
                double m = (u.at(i - 1, j) + u.at(i + 1, j) + u.at(i, j - 1) + u.at(i, j + 1)) / 4;
                if (m > 0) {
                    trial.at(i, j) = m;
                    ++touched;
                }
            } else if (!advance && v > 0 && zero_nbr) {
                trial.at(i, j) = 0;
                ++touched;
            }
        }
    if (!touched) return false;
    polish_pass(trial, w, cfg, one_phase, 100.0);
    double E_trial = energy(trial, w, std::nullopt, true);
    if (E_trial < E_sharp - 1e-300) {
        u = std::move(trial);
        E_sharp = E_trial;
        return true;
    }
    return false;
}

}  // namespace

SolveResult minimize(const ProblemSpec& spec, const SolveConfig& cfg_in) {
    spec.validate();
    SolveConfig cfg = cfg_in;
    const Grid& g = spec.grid;
    cfg.validate(g.spacing);
    const bool one_phase = spec.phase == Phase::OnePhase;
    cfg.project_nonneg = one_phase;

    SolveResult res;
    res.weights = spec.build_weights();
    res.amp = AlmostMinParams{0.0, res.weights.alpha};
    res.weights_eff = res.weights;
    if (spec.perturbation && spec.perturbation->lambda_pert > 0) {
        auto [weff, amp] = perturbed_weights(res.weights, spec.perturbation->seed,
                                             spec.perturbation->lambda_pert,
                                             spec.perturbation->alpha);
        res.weights_eff = weff;
        res.amp = amp;
    }
    const WeightField& w = res.weights_eff;

    ScalarField u = initial_iterate(spec);
    if (cfg.project_nonneg)
        for (double& v : u.values) v = std::max(v, 0.0);

    const int nx = g.dims[0], ny = g.dims[1];
    const double h = g.spacing;
    const double cell_w = h * h;
    auto boundary = [&](int i, int j) { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; };

    std::vector<double> grad(g.size(), 0.0);
    ScalarField trial = u;
    bool all_stages_converged = true;
    int total_iters = 0;

    for (std::size_t stage = 0; stage < cfg.eps_ladder.size(); ++stage) {
        const double eps = cfg.eps_ladder[stage] * h;
        double E = energy(u, w, std::nullopt, false, eps);
        res.energy_trace.push_back({int(stage), 0, eps, E});
        double step = cfg.step0;
        std::vector<double> window;
        bool stage_converged = false;
        for (int iter = 1; iter <= cfg.max_iter; ++iter) {
            // gradient of the smoothed energy
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j < ny; ++j) {
                    std::size_t id = g.index(i, j);
                    if (boundary(i, j)) {
                        grad[id] = 0;
                        continue;
                    }
                    double uv = u.values[id];
                    double s = 2 * (4 * uv - u.at(i - 1, j) - u.at(i + 1, j) - u.at(i, j - 1) -
                                    u.at(i, j + 1));
                    double qp = w.q_plus.values[id], qm = w.q_minus.values[id];
                    if (uv > 0 && uv < eps) s += cell_w * qp * qp / eps;
                    if (uv < 0 && uv > -eps) s -= cell_w * qm * qm / eps;
                    grad[id] = s;
                }
            // projected backtracking step
            double accepted = -1;
            for (double tau = step; tau > 1e-18; tau *= cfg.shrink) {
                double gd = 0;
                for (std::size_t id = 0; id < grad.size(); ++id) {
                    double v = u.values[id] - tau * grad[id];
                    if (cfg.project_nonneg) v = std::max(v, 0.0);
                    trial.values[id] = v;
                    gd += grad[id] * (v - u.values[id]);
                }
                double Et = energy(trial, w, std::nullopt, false, eps);
                if (Et <= E + cfg.armijo_c * gd) {
                    accepted = tau;
                    u.values.swap(trial.values);
                    E = Et;
                    break;
                }
            }
            ++total_iters;
            res.energy_trace.push_back({int(stage), iter, eps, E});
            if (accepted < 0) {
                stage_converged = true;  // no descent direction left at this smoothing
                break;
            }
            step = std::min(accepted * 2.0, 1e3 * cfg.step0);
            window.push_back(E);
            if (int(window.size()) > cfg.stop_window) {
                double past = window[window.size() - 1 - cfg.stop_window];
                double rel = (past - E) / std::max(std::abs(E), 1e-300);
                if (rel < cfg.stop_rel) {
                    stage_converged = true;
                    break;
                }
            }
        }
        if (!stage_converged) all_stages_converged = false;
    }

    if (cfg.polish) {
        // The annealed ramp leaves an O(eps/q) toe below the true interface,
        // and descent stalls on smooth error modes long before the interior is
        // harmonic to audit precision. Alternate Laplace polish on the frozen
        // sign sets with sharp trim/grow sweeps (the exact discrete optimality
        // test for moving the interface by one node). Every accepted move
        // lowers the sharp functional, so the loop terminates.
        bool ok = polish_pass(u, w, cfg, one_phase);
        double E_sharp = energy(u, w, std::nullopt, true);
        for (int round = 0; round < 16; ++round) {
            int moves = 0;
            while (sharp_interface_sweep(u, w, one_phase) > 0) ++moves;
            if (moves) {
                ok = polish_pass(u, w, cfg, one_phase) && ok;
                E_sharp = energy(u, w, std::nullopt, true);
            }
            // collective front moves: translation-invariant fronts cannot be
            // improved one node at a time
            bool advanced = try_shell_move(u, w, cfg, one_phase, true, E_sharp);
            bool retreated = try_shell_move(u, w, cfg, one_phase, false, E_sharp);
            if (!moves && !advanced && !retreated) break;
        }
        ok = polish_pass(u, w, cfg, one_phase) && ok;
        if (!ok) all_stages_converged = false;
    }

    res.u = u;
    res.sharp_energy = energy(u, w, std::nullopt, true);
    res.converged = all_stages_converged;
    res.iterations = total_iters;
    return res;
}

ScalarField harmonic_replace(const ScalarField& u, const WeightField& w, const Ball& b) {
    (void)w;  // the replacement only sees the geometry of {u>0}
    const Grid& g = u.grid;
    if (g.rank != 2) throw std::invalid_argument("harmonic_replace requires rank 2");
    if (!g.contains_ball(b)) throw std::domain_error("replacement ball exits grid");
    ScalarField out = u;
    std::vector<std::uint8_t> act(g.size(), 0);
    bool any = false;
    for (int i = 1; i < g.dims[0] - 1; ++i)
        for (int j = 1; j < g.dims[1] - 1; ++j) {
            Point p = g.node(i, j);
            if (u.at(i, j) > 0 &&
                sqr(p.x - b.center.x) + sqr(p.y - b.center.y) < sqr(b.radius)) {
                act[g.index(i, j)] = 1;
                any = true;
            }
        }
    if (!any) return out;
    double tol = 1e-10 * std::max(u.max_abs(), 1e-300);
    sor_laplace(out, act, sor_optimal_omega(g), tol, 200000, -std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity());
    // discrete maximum principle: clear solver dust on one-phase inputs
    bool one_phase = true;
    for (double v : u.values)
        if (v < 0) { one_phase = false; break; }
    if (one_phase)
        for (std::size_t id = 0; id < out.values.size(); ++id)
            if (act[id] && out.values[id] < 0) out.values[id] = 0;
    return out;
}

double harmonic_measure(const ScalarField& u, const Point& pole, const Ball& target) {
    const Grid& g = u.grid;
    if (g.rank != 2) throw std::invalid_argument("harmonic_measure requires rank 2");
    if (!(eval_bilinear(u, pole) > 0)) throw std::invalid_argument("pole outside positivity set");
    ScalarField om = ScalarField::zeros(g);
    std::vector<std::uint8_t> act(g.size(), 0);
    const int nx = g.dims[0], ny = g.dims[1];
    const double h = g.spacing;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            std::size_t id = g.index(i, j);
            bool pos = u.values[id] > 0;
            bool edge = (i == 0 || j == 0 || i == nx - 1 || j == ny - 1);
            if (pos && !edge) {
                act[id] = 1;
                continue;
            }
            // Dirichlet data on the whole boundary of the discrete positivity
            // set (free boundary and outer walls alike): 1 inside the target,
            // 0 elsewhere, with a one-cell ramp so the target radius is
            // resolved below h.
            Point p = g.node(i, j);
            double d = std::sqrt(sqr(p.x - target.center.x) + sqr(p.y - target.center.y));
            om.values[id] = std::clamp((target.radius - d) / h + 0.5, 0.0, 1.0);
        }
    sor_laplace(om, act, sor_optimal_omega(g), 1e-10, 200000, 0.0, 1.0);
    return std::clamp(eval_bilinear(om, pole), 0.0, 1.0);
}

}  // namespace fblab
