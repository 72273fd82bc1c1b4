#include "fblab/monotone.hpp"

#include <algorithm>
#include <cmath>

namespace fblab {

namespace {

// local Lipschitz scale for the center tolerance
double local_lip(const ScalarField& u, const Point& x0) {
    const Grid& g = u.grid;
    double h = g.spacing;
    double m = 0;
    int i0 = std::clamp(int((x0.x - g.origin.x) / h), 1, g.dims[0] - 3);
    int j0 = std::clamp(int((x0.y - g.origin.y) / h), 1, g.dims[1] - 3);
    for (int i = std::max(1, i0 - 3); i <= std::min(g.dims[0] - 2, i0 + 3); ++i)
        for (int j = std::max(1, j0 - 3); j <= std::min(g.dims[1] - 2, j0 + 3); ++j) {
            m = std::max(m, std::abs(u.at(i + 1, j) - u.at(i, j)) / h);
            m = std::max(m, std::abs(u.at(i, j + 1) - u.at(i, j)) / h);
        }
    return m;
}

// trapezoid circle rule over the boundary-aware reconstruction
template <class F>
double circle_sum(const ScalarField& u, const Point& c, double r, F&& integrand) {
    int n = default_circle_samples(r, u.grid.spacing);
    double acc = 0;
    for (int k = 0; k < n; ++k) {
        double th = 2 * M_PI * k / n;
        Point p{c.x + r * std::cos(th), c.y + r * std::sin(th)};
        Point nu{std::cos(th), std::sin(th)};
        acc += integrand(recon_sample(u, p), p, nu);
    }
    return acc * (2 * M_PI * r / n);
}

}  // namespace

bool on_zero_set(const ScalarField& u, const Point& x0) {
    double lip = std::max(local_lip(u, x0), 1e-12);
    return std::abs(eval_bilinear(u, x0)) <= 2 * u.grid.spacing * lip;
}

WeissSample weiss(const ScalarField& u, const WeightField& w, const Point& x0, double r) {
    const Grid& g = u.grid;
    if (g.rank != 2) throw std::invalid_argument("weiss requires rank 2");
    if (!g.contains_ball({x0, r})) throw std::domain_error("weiss ball exits grid");
    if (!on_zero_set(u, x0))
        throw std::invalid_argument("weiss center is not on the zero set of u");

    const double qp = eval_bilinear(w.q_plus, x0);
    const double qm = eval_bilinear(w.q_minus, x0);
    const int n = 2;

    WeissSample s;
    s.x0 = x0;
    s.r = r;
    PhaseParts pp = phase_parts(u, {x0, r});
    s.dirichlet_part = pp.dir_plus + pp.dir_minus;
    s.volume_part = qp * qp * pp.vol_plus + qm * qm * pp.vol_minus;
    s.sphere_part = circle_sum(u, x0, r, [](const FieldSample& fs, const Point&, const Point&) {
        return fs.value * fs.value;
    });
    s.W = (s.dirichlet_part + s.volume_part) / std::pow(r, n) -
          s.sphere_part / std::pow(r, n + 1);

    // radial integral of t^(1-n) * int (grad u . nu)^2; composite Simpson on
    // [head, r] plus a constant extension over the unresolved head
    auto ring = [&](double t) {
        return circle_sum(u, x0, t, [](const FieldSample& fs, const Point&, const Point& nu) {
                   return sqr(fs.grad.x * nu.x + fs.grad.y * nu.y);
               }) /
               t;  // t^(1-n), n = 2
    };
    const double head = std::min(2 * g.spacing, r / 2);
    const int m = 32;  // Simpson intervals
    double simpson = 0;
    double dt = (r - head) / m;
    for (int k = 0; k <= m; ++k) {
        double t = head + k * dt;
        double coef = (k == 0 || k == m) ? 1 : (k % 2 ? 4 : 2);
        simpson += coef * ring(t);
    }
    simpson *= dt / 3;
    s.normal_part = simpson + ring(head) * head;
    s.W_tilde = (s.dirichlet_part + s.volume_part) / std::pow(r, n) - s.normal_part / r;
    return s;
}

double dissipation(const ScalarField& u, const Point& x0, double s, double r) {
    const Grid& g = u.grid;
    if (!(s > 0) || s >= r) throw std::invalid_argument("dissipation needs 0 < s < r");
    if (!g.contains_ball({x0, r})) throw std::domain_error("dissipation annulus exits grid");
    auto ring = [&](double t) {
        return circle_sum(u, x0, t,
                          [&](const FieldSample& fs, const Point& p, const Point&) {
                              double radial = fs.grad.x * (p.x - x0.x) + fs.grad.y * (p.y - x0.y);
                              return sqr(fs.value - radial);
                          }) /
               std::pow(t, 4);  // t^-(n+2), n = 2
    };
    // trapezoid on a fixed radial mesh: endpoints snap to multiples of h/4, so
    // the integral is exactly additive across a shared interior radius
    const double dt = g.spacing / 4;
    long a = std::lround(s / dt), b = std::lround(r / dt);
    if (a < 1) a = 1;
    if (b <= a + 1) b = a + 2;
    double acc = 0;
    for (long k = a; k <= b; ++k) {
        double wgt = (k == a || k == b) ? 0.5 : 1.0;
        acc += wgt * ring(k * dt);
    }
    return std::max(acc * dt, 0.0);
}

std::vector<double> default_ladder(double r_max, double r_min, double gamma) {
    std::vector<double> out;
    for (double r = r_max; r >= r_min; r *= gamma) out.push_back(r);
    return out;
}

MonotoneAudit audit_monotone(const ScalarField& u, const WeightField& w,
                             const AlmostMinParams& amp, const Point& x0,
                             const std::vector<double>& ladder, double tau_disc) {
    MonotoneAudit audit;
    audit.ladder = ladder;
    for (double r : ladder) audit.samples.push_back(weiss(u, w, x0, r));

    const double alpha = amp.alpha > 0 ? amp.alpha : 1.0;
    // fitted drift: least C making every step pass with the tau_disc slack
    double C_hat = 0;
    for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
        double defect = audit.samples[k + 1].W - audit.samples[k].W;
        C_hat = std::max(C_hat, (defect - tau_disc) / std::pow(ladder[k], alpha));
    }
    audit.C_hat = std::max(C_hat, 0.0);

    for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
        MonotoneStep st;
        st.r_hi = ladder[k];
        st.r_lo = ladder[k + 1];
        st.W_hi = audit.samples[k].W;
        st.W_lo = audit.samples[k + 1].W;
        st.defect = st.W_lo - st.W_hi;
        st.dissipation = dissipation(u, x0, st.r_lo, st.r_hi);
        audit.samples[k + 1].dissipation = st.dissipation;
        st.pass_drift = st.defect <= audit.C_hat * std::pow(st.r_hi, alpha) + tau_disc;
        // strengthened form: W(rho) - W(s) + C rho^alpha >= dissipation - tau
        st.pass_dissipation = st.W_hi - st.W_lo + audit.C_hat * std::pow(st.r_hi, alpha) >=
                              st.dissipation - tau_disc;
        audit.all_pass = audit.all_pass && st.pass_drift && st.pass_dissipation;
        audit.steps.push_back(st);
    }

    // W(x0, 0) by least squares W(r) ~ W0 + c r^alpha on the smallest radii
    std::size_t m = std::min<std::size_t>(4, ladder.size());
    double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (std::size_t k = ladder.size() - m; k < ladder.size(); ++k) {
        double x = std::pow(ladder[k], alpha), y = audit.samples[k].W;
        s1 += 1;
        sx += x;
        sxx += x * x;
        sy += y;
        sxy += x * y;
    }
    double det = s1 * sxx - sx * sx;
    if (std::abs(det) > 1e-300) {
        audit.W0 = (sxx * sy - sx * sxy) / det;
        double c = (s1 * sxy - sx * sy) / det;
        double rss = 0;
        for (std::size_t k = ladder.size() - m; k < ladder.size(); ++k) {
            double x = std::pow(ladder[k], alpha), y = audit.samples[k].W;
            rss += sqr(y - audit.W0 - c * x);
        }
        audit.W0_residual = std::sqrt(rss / double(m));
    } else {
        audit.W0 = audit.samples.back().W;
        audit.W0_residual = 0;
    }
    return audit;
}

std::vector<AcfSample> acf(const ScalarField& u, const Point& x0,
                           const std::vector<double>& R_ladder) {
    if (!on_zero_set(u, x0)) throw std::invalid_argument("acf center is not on the zero set");
    std::vector<AcfSample> out;
    for (double R : R_ladder) {
        PhaseParts pp = phase_parts(u, {x0, R});
        AcfSample s;
        s.R = R;
        s.phi_f = pp.dir_plus / (R * R);
        s.phi_g = pp.dir_minus / (R * R);
        s.F = s.phi_f * s.phi_g;
        out.push_back(s);
    }
    return out;
}

}  // namespace fblab
