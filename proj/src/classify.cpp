#include "fblab/classify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fblab {

namespace {

struct BallNodes {
    std::vector<double> dx, dy, val;
};

BallNodes gather_nodes(const ScalarField& u, const Point& x0, double r) {
    const Grid& g = u.grid;
    BallNodes out;
    int ilo = std::max(0, int(std::ceil((x0.x - r - g.origin.x) / g.spacing)));
    int ihi = std::min(g.dims[0] - 1, int(std::floor((x0.x + r - g.origin.x) / g.spacing)));
    int jlo = std::max(0, int(std::ceil((x0.y - r - g.origin.y) / g.spacing)));
    int jhi = std::min(g.dims[1] - 1, int(std::floor((x0.y + r - g.origin.y) / g.spacing)));
    for (int i = ilo; i <= ihi; ++i)
        for (int j = jlo; j <= jhi; ++j) {
            Point p = g.node(i, j);
            double ddx = p.x - x0.x, ddy = p.y - x0.y;
            if (ddx * ddx + ddy * ddy > r * r) continue;
            out.dx.push_back(ddx);
            out.dy.push_back(ddy);
            out.val.push_back(u.at(i, j));
        }
    return out;
}

bool feasible(const BallNodes& nodes, double ex, double ey, double sigma, double r, double q,
              double u_tol) {
    const double lo = -sigma * r, hi = sigma * r;
    for (std::size_t k = 0; k < nodes.val.size(); ++k) {
        double d = ex * nodes.dx[k] + ey * nodes.dy[k];
        if (d <= lo) {
            if (nodes.val[k] > u_tol) return false;
        } else if (d >= hi) {
            if (nodes.val[k] < q * (d - sigma * r) - u_tol) return false;
        }
    }
    return true;
}

double bisect_sigma(const BallNodes& nodes, double ex, double ey, double r, double q, double u_tol,
                    double tol) {
    if (feasible(nodes, ex, ey, 0.0, r, q, u_tol)) return 0.0;
    double lo = 0.0, hi = 1.0;
    if (!feasible(nodes, ex, ey, hi, r, q, u_tol)) return 1.0;
    while (hi - lo > tol) {
        double mid = (lo + hi) / 2;
        if (feasible(nodes, ex, ey, mid, r, q, u_tol))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace

double flatness_in_direction(const ScalarField& u, const WeightField& w, const Point& x0,
                             double r, const Point& e) {
    if (!u.grid.contains_ball({x0, r})) throw std::domain_error("flatness ball exits grid");
    BallNodes nodes = gather_nodes(u, x0, r);
    double q = eval_bilinear(w.q_plus, x0);
    double u_tol = 1e-9 * u.max_abs();
    double en = norm(e);
    double tol = u.grid.spacing / (4 * r);
    return bisect_sigma(nodes, e.x / en, e.y / en, r, q, u_tol, tol);
}

FlatnessReport flatness(const ScalarField& u, const WeightField& w, const Point& x0, double r,
                        int n_dir, const FreeBoundary* fb) {
    if (!u.grid.contains_ball({x0, r})) throw std::domain_error("flatness ball exits grid");
    if (!on_zero_set(u, x0)) throw std::invalid_argument("flatness center is off the boundary");
    BallNodes nodes = gather_nodes(u, x0, r);
    double q = eval_bilinear(w.q_plus, x0);
    double u_tol = 1e-9 * u.max_abs();
    double tol = u.grid.spacing / (4 * r);

    FlatnessReport rep;
    rep.x0 = x0;
    rep.r = r;
    rep.sigma = 2.0;
    for (int k = 0; k < n_dir; ++k) {
        double th = 2 * M_PI * k / n_dir;
        double ex = std::cos(th), ey = std::sin(th);
        double s = bisect_sigma(nodes, ex, ey, r, q, u_tol, tol);
        if (s < rep.sigma) {
            rep.sigma = s;
            rep.direction = Point(ex, ey);
        }
    }
    if (rep.sigma > 1.0) rep.sigma = 1.0;
    if (fb && !fb->empty()) {
        try {
            rep.hausdorff_sigma =
                hausdorff_flatness(*fb, x0, r, rep.direction, u.grid.spacing / 2);
        } catch (const std::domain_error&) {
            rep.hausdorff_sigma = -1;
        }
    }
    return rep;
}

BlowupResult blowup_fit(const ScalarField& u, const WeightField& w, const Point& x0, double r) {
    if (!on_zero_set(u, x0)) throw std::invalid_argument("blowup center is off the boundary");
    Grid out = Grid::square(1.0, 129);
    BlowupResult res;
    res.rescaled = rescale(u, x0, r, out);
    double q = eval_bilinear(w.q_plus, x0);

    std::vector<double> px, py, val;
    for (int i = 0; i < out.dims[0]; ++i)
        for (int j = 0; j < out.dims[1]; ++j) {
            Point p = out.node(i, j);
            if (p.x * p.x + p.y * p.y > 1.0) continue;
            px.push_back(p.x);
            py.push_back(p.y);
            val.push_back(res.rescaled.at(i, j));
        }
    auto misfit = [&](double a, double ex, double ey) {
        double m = 0;
        for (std::size_t k = 0; k < val.size(); ++k) {
            double plane = a * std::max(ex * px[k] + ey * py[k], 0.0);
            m = std::max(m, std::abs(val[k] - plane));
        }
        return m;
    };

    double best = std::numeric_limits<double>::infinity();
    double best_th = 0;
    for (int k = 0; k < 360; ++k) {
        double th = 2 * M_PI * k / 360;
        double m = misfit(q, std::cos(th), std::sin(th));
        if (m < best) {
            best = m;
            best_th = th;
        }
    }
    // joint refinement near the optimum
    double best_a = q;
    for (double a = 0.9 * q; a <= 1.1 * q + 1e-15; a += 0.005 * q)
        for (double dth = -2 * M_PI / 180; dth <= 2 * M_PI / 180 + 1e-15;
             dth += 0.1 * M_PI / 180) {
            double th = best_th + dth;
            double m = misfit(a, std::cos(th), std::sin(th));
            if (m < best) {
                best = m;
                best_a = a;
                best_th = th;
            }
        }
    res.slope = best_a;
    res.direction = Point(std::cos(best_th), std::sin(best_th));
    res.misfit = best;
    return res;
}

Classification classify_point(const ScalarField& u, const WeightField& w, const Point& x0,
                              const std::vector<double>& ladder, double eps_gap) {
    AlmostMinParams amp{0.0, w.alpha};
    MonotoneAudit audit = audit_monotone(u, w, amp, x0, ladder);
    Classification c;
    c.x0 = x0;
    c.W0 = audit.W0;
    double q = eval_bilinear(w.q_plus, x0);
    c.gap_ratio = audit.W0 / (q * q * M_PI / 2);  // omega_2 = pi
    c.fit_residual = audit.W0_residual;
    if (c.fit_residual > 0.05 * std::abs(c.W0)) {
        c.regular = false;
        c.label = "unresolved";
    } else if (c.gap_ratio <= 1.0 + eps_gap) {
        c.regular = true;
        c.label = "regular";
    } else {
        c.regular = false;
        c.label = "unresolved";
    }
    return c;
}

double normal_derivative(const ScalarField& u, const Point& z, const Point& nu) {
    const Grid& g = u.grid;
    double nn = norm(nu);
    if (!(nn > 0)) throw std::invalid_argument("normal must be nonzero");
    Point n = nu * (1.0 / nn);
    const double h = g.spacing;
    double s1 = 0, st = 0, stt = 0, su = 0, stu = 0;
    for (int k = 2; k <= 8; ++k) {
        double t = k * h;
        Point p = z + n * t;
        if (!g.contains(p)) throw std::domain_error("normal-derivative samples exit grid");
        double v = eval_bilinear(u, p);
        s1 += 1;
        st += t;
        stt += t * t;
        su += v;
        stu += t * v;
    }
    double det = s1 * stt - st * st;
    return (s1 * stu - st * su) / det;
}

WeakIdentityReport weak_identity_check(const ScalarField& h, const FreeBoundary& fb, const Ball& b,
                                       int n_trials, std::uint64_t seed) {
    const Grid& g = h.grid;
    if (!g.contains_ball(b)) throw std::domain_error("test-bump ball exits grid");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_real_distribution<double> wid(0.2, 0.4);

    WeakIdentityReport rep;
    for (int trial = 0; trial < n_trials; ++trial) {
        // tensor-product cosine bump supported inside b
        double wx = wid(rng) * b.radius, wy = wid(rng) * b.radius;
        double margin = std::sqrt(wx * wx + wy * wy);
        Point c;
        do {
            c = Point(b.center.x + uni(rng) * (b.radius - margin),
                      b.center.y + uni(rng) * (b.radius - margin));
        } while (sqr(c.x - b.center.x) + sqr(c.y - b.center.y) > sqr(b.radius - margin));
        auto zeta = [&](const Point& p) {
            double xi = (p.x - c.x) / wx, et = (p.y - c.y) / wy;
            if (std::abs(xi) >= 1 || std::abs(et) >= 1) return 0.0;
            return sqr(std::cos(M_PI * xi / 2)) * sqr(std::cos(M_PI * et / 2));
        };
        auto grad_zeta = [&](const Point& p) {
            double xi = (p.x - c.x) / wx, et = (p.y - c.y) / wy;
            if (std::abs(xi) >= 1 || std::abs(et) >= 1) return Point(0, 0);
            double fx = sqr(std::cos(M_PI * xi / 2)), fy = sqr(std::cos(M_PI * et / 2));
            double dfx = -M_PI / 2 * std::sin(M_PI * xi) / wx;
            double dfy = -M_PI / 2 * std::sin(M_PI * et) / wy;
            return Point(dfx * fy, fx * dfy);
        };

        // volume side over the bump support, 2x2 subsamples per cell
        double lhs = 0;
        const double hh = g.spacing;
        int ilo = std::max(0, int(std::floor((c.x - wx - g.origin.x) / hh)));
        int ihi = std::min(g.dims[0] - 2, int(std::ceil((c.x + wx - g.origin.x) / hh)));
        int jlo = std::max(0, int(std::floor((c.y - wy - g.origin.y) / hh)));
        int jhi = std::min(g.dims[1] - 2, int(std::ceil((c.y + wy - g.origin.y) / hh)));
        for (int i = ilo; i <= ihi; ++i)
            for (int j = jlo; j <= jhi; ++j)
                for (int si = 0; si < 2; ++si)
                    for (int sj = 0; sj < 2; ++sj) {
                        Point p = g.node(i, j);
                        p.x += (si + 0.5) * hh / 2;
                        p.y += (sj + 0.5) * hh / 2;
                        FieldSample fs = recon_sample(h, p);
                        if (fs.value <= 0) continue;
                        Point gz = grad_zeta(p);
                        lhs -= sqr(hh / 2) * (fs.grad.x * gz.x + fs.grad.y * gz.y);
                    }

        // boundary side: polyline quadrature of zeta * d+h/dnu
        double rhs = 0;
        for (const auto& pl : fb.polylines()) {
            std::size_t nv = pl.verts.size();
            std::size_t nseg = pl.closed ? nv : nv - 1;
            for (std::size_t sgi = 0; sgi < nseg; ++sgi) {
                const FbVertex& A = pl.verts[sgi];
                const FbVertex& B = pl.verts[(sgi + 1) % nv];
                Point mid = (A.p + B.p) * 0.5;
                double zv = zeta(mid);
                if (zv == 0) continue;
                Point nu = (A.normal + B.normal) * 0.5;
                double nn = norm(nu);
                if (!(nn > 0)) continue;
                nu = nu * (1.0 / nn);
                double dnu;
                try {
                    dnu = normal_derivative(h, mid, nu);
                } catch (const std::domain_error&) {
                    continue;
                }
                rhs += zv * dnu * norm(B.p - A.p);
            }
        }
        WeakIdentityRow row;
        row.lhs = lhs;
        row.rhs = rhs;
        double denom = std::max({std::abs(lhs), std::abs(rhs), 1e-12});
        row.residual = std::abs(lhs - rhs) / denom;
        rep.rows.push_back(row);
    }
    std::vector<double> rs;
    for (const auto& r : rep.rows) rs.push_back(r.residual);
    std::sort(rs.begin(), rs.end());
    rep.median_residual = rs.empty() ? 0 : rs[rs.size() / 2];
    return rep;
}

DecayReport decay_audit(const ScalarField& u, const WeightField& w, const Point& x0, double theta,
                        double eta, double r0, int max_steps, int n_dir) {
    if (!(theta > 0 && theta < 1) || !(eta > 0 && eta < 1))
        throw std::invalid_argument("decay_audit needs theta, eta in (0,1)");
    DecayReport rep;
    const double h = u.grid.spacing;
    double r = r0;
    for (int k = 0; k < max_steps; ++k) {
        if (r < 6 * h || !u.grid.contains_ball({x0, r})) {
            rep.truncated = true;
            break;
        }
        FlatnessReport f = flatness(u, w, x0, r, n_dir);
        DecayStep st;
        st.r = r;
        st.sigma = f.sigma;
        st.direction = f.direction;
        st.floor = 4 * h / r;
        st.above_floor = f.sigma > st.floor;
        rep.steps.push_back(st);
        r *= eta;
    }
    for (std::size_t k = 0; k + 1 < rep.steps.size(); ++k) {
        DecayStep& lo = rep.steps[k + 1];
        const DecayStep& hi = rep.steps[k];
        lo.improved = lo.sigma <= std::max(theta * hi.sigma, lo.floor) + 1e-12;
        lo.drift = norm(lo.direction - hi.direction);
        double sref = std::max(hi.sigma, hi.floor);
        rep.drift_constant = std::max(rep.drift_constant, lo.drift / std::max(sref, 1e-12));
    }
    // decay exponent on the above-floor part of the ladder
    double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
    int npts = 0;
    for (const auto& st : rep.steps) {
        if (!st.above_floor || st.sigma <= 0) continue;
        double x = std::log(st.r), y = std::log(st.sigma);
        s1 += 1;
        sx += x;
        sxx += x * x;
        sy += y;
        sxy += x * y;
        ++npts;
    }
    if (npts >= 2 && s1 * sxx - sx * sx > 1e-300) {
        rep.alpha_tilde = (s1 * sxy - sx * sy) / (s1 * sxx - sx * sx);
        rep.alpha_measurable = true;
    }
    return rep;
}

}  // namespace fblab
