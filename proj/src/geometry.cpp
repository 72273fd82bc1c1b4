#include "fblab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <unordered_map>

namespace fblab {

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
    Point ab = b - a;
    double l2 = dot(ab, ab);
    if (l2 <= 0) return norm(p - a);
    double t = std::clamp(dot(p - a, ab) / l2, 0.0, 1.0);
    Point proj = a + ab * t;
    return norm(p - proj);
}

FreeBoundary::FreeBoundary(std::vector<Polyline> lines) : lines_(std::move(lines)) {
    for (const auto& pl : lines_) {
        for (std::size_t i = 0; i + 1 < pl.verts.size(); ++i)
            segs_.push_back({pl.verts[i].p, pl.verts[i + 1].p});
        if (pl.closed && pl.verts.size() > 2)
            segs_.push_back({pl.verts.back().p, pl.verts.front().p});
    }
    build_buckets();
}

double FreeBoundary::total_length() const {
    double acc = 0;
    for (const auto& s : segs_) acc += norm(s.b - s.a);
    return acc;
}

void FreeBoundary::build_buckets() {
    if (segs_.empty()) return;
    double xmin = segs_[0].a.x, xmax = xmin, ymin = segs_[0].a.y, ymax = ymin;
    double maxlen = 0;
    for (const auto& s : segs_) {
        for (const Point* p : {&s.a, &s.b}) {
            xmin = std::min(xmin, p->x);
            xmax = std::max(xmax, p->x);
            ymin = std::min(ymin, p->y);
            ymax = std::max(ymax, p->y);
        }
        maxlen = std::max(maxlen, norm(s.b - s.a));
    }
    double span = std::max(xmax - xmin, ymax - ymin);
    cell_ = std::max(maxlen, span / 256 + 1e-300);
    lo_ = Point(xmin, ymin);
    bx_ = std::max(1, int(std::floor((xmax - xmin) / cell_)) + 1);
    by_ = std::max(1, int(std::floor((ymax - ymin) / cell_)) + 1);
    buckets_.assign(std::size_t(bx_) * by_, {});
    for (int s = 0; s < int(segs_.size()); ++s) {
        Point m = (segs_[s].a + segs_[s].b) * 0.5;
        int i = std::clamp(int((m.x - lo_.x) / cell_), 0, bx_ - 1);
        int j = std::clamp(int((m.y - lo_.y) / cell_), 0, by_ - 1);
        buckets_[std::size_t(i) * by_ + j].push_back(s);
    }
}

double FreeBoundary::distance(const Point& p) const {
    if (segs_.empty()) throw std::domain_error("distance from an empty boundary");
    if (segs_.size() < 64) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : segs_) best = std::min(best, point_segment_distance(p, s.a, s.b));
        return best;
    }
    int pi = std::clamp(int((p.x - lo_.x) / cell_), 0, bx_ - 1);
    int pj = std::clamp(int((p.y - lo_.y) / cell_), 0, by_ - 1);
    double best = std::numeric_limits<double>::infinity();
    int max_ring = std::max(bx_, by_);
    for (int ring = 0; ring <= max_ring; ++ring) {
        // once a hit exists, one extra ring guarantees correctness (bucket
        // metric is the Chebyshev distance; segments live in their midpoint
        // bucket but reach half a cell out)
        double ring_lb = (ring - 1.5) * cell_;
        if (best < ring_lb) break;
        for (int i = std::max(0, pi - ring); i <= std::min(bx_ - 1, pi + ring); ++i)
            for (int j = std::max(0, pj - ring); j <= std::min(by_ - 1, pj + ring); ++j) {
                if (std::max(std::abs(i - pi), std::abs(j - pj)) != ring) continue;
                for (int s : buckets_[std::size_t(i) * by_ + j])
                    best = std::min(best, point_segment_distance(p, segs_[s].a, segs_[s].b));
            }
    }
    return best;
}

double fb_distance(const FreeBoundary& fb, const Point& p) { return fb.distance(p); }

namespace {

struct EdgeKey {
    int i, j, axis;
    bool operator<(const EdgeKey& o) const {
        return std::tie(i, j, axis) < std::tie(o.i, o.j, o.axis);
    }
};

struct MsVertex {
    Point p;
};

}  // namespace

FreeBoundary extract_boundary(const ScalarField& u) {
    const Grid& g = u.grid;
    if (g.rank != 2) throw std::invalid_argument("extract_boundary requires rank 2");
    u.validate_finite();
    const int nx = g.dims[0], ny = g.dims[1];

    std::map<EdgeKey, int> vid;
    std::vector<MsVertex> verts;
    // crossing parameter along the edge a->b; when one endpoint sits on the
    // zero plateau of a one-phase field, extrapolate the linear profile from
    // the live side so the vertex lands on the true interface instead of the
    // outermost zero node
    auto crossing = [&](int ai, int aj, int bi, int bj) {
        double va = u.at(ai, aj), vb = u.at(bi, bj);
        if (va == vb) return 0.5;
        double t = va / (va - vb);
        auto beyond = [&](int ci, int cj, int di, int dj) -> double {
            int ei = ci + di, ej = cj + dj;
            if (ei < 0 || ej < 0 || ei >= nx || ej >= ny)
                return std::numeric_limits<double>::quiet_NaN();
            return u.at(ei, ej);
        };
        if (va == 0.0 && vb != 0.0) {
            double vc = beyond(bi, bj, bi - ai, bj - aj);
            if (std::isfinite(vc) && vc != 0.0 && (vc > vb) == (vb > 0)) {
                double slope = vc - vb;  // per edge step, pointing away from a
                t = 1.0 - vb / slope;    // where the extension of (vb, vc) vanishes
            }
        } else if (vb == 0.0 && va != 0.0) {
            double vc = beyond(ai, aj, ai - bi, aj - bj);
            if (std::isfinite(vc) && vc != 0.0 && (vc > va) == (va > 0)) {
                double slope = vc - va;
                t = va / slope;
            }
        }
        return std::clamp(t, 0.0, 1.0);
    };
    auto edge_vertex = [&](int i, int j, int axis) {
        EdgeKey k{i, j, axis};
        auto it = vid.find(k);
        if (it != vid.end()) return it->second;
        double t = axis == 0 ? crossing(i, j, i + 1, j) : crossing(i, j, i, j + 1);
        Point p = g.node(i, j);
        if (axis == 0)
            p.x += t * g.spacing;
        else
            p.y += t * g.spacing;
        int id = int(verts.size());
        verts.push_back({p});
        vid.emplace(k, id);
        return id;
    };

    std::vector<std::pair<int, int>> edges;  // segment endpoints (vertex ids)
    for (int ci = 0; ci < nx - 1; ++ci)
        for (int cj = 0; cj < ny - 1; ++cj) {
            bool p00 = u.at(ci, cj) > 0, p10 = u.at(ci + 1, cj) > 0;
            bool p11 = u.at(ci + 1, cj + 1) > 0, p01 = u.at(ci, cj + 1) > 0;
            int code = int(p00) | int(p10) << 1 | int(p11) << 2 | int(p01) << 3;
            if (code == 0 || code == 15) continue;
            // cell edges: E0 bottom, E1 right, E2 top, E3 left
            auto E0 = [&] { return edge_vertex(ci, cj, 0); };
            auto E1 = [&] { return edge_vertex(ci + 1, cj, 1); };
            auto E2 = [&] { return edge_vertex(ci, cj + 1, 0); };
            auto E3 = [&] { return edge_vertex(ci, cj, 1); };
            auto emit = [&](int a, int b) { edges.emplace_back(a, b); };
            switch (code) {
                case 1: emit(E3(), E0()); break;
                case 2: emit(E0(), E1()); break;
                case 3: emit(E3(), E1()); break;
                case 4: emit(E1(), E2()); break;
                case 6: emit(E0(), E2()); break;
                case 7: emit(E3(), E2()); break;
                case 8: emit(E2(), E3()); break;
                case 9: emit(E0(), E2()); break;
                case 11: emit(E1(), E2()); break;
                case 12: emit(E3(), E1()); break;
                case 13: emit(E0(), E1()); break;
                case 14: emit(E3(), E0()); break;
                case 5: {  // saddle: c00,c11 positive
                    double center = 0.25 * (u.at(ci, cj) + u.at(ci + 1, cj) + u.at(ci, cj + 1) +
                                            u.at(ci + 1, cj + 1));
                    if (center > 0) {
                        emit(E0(), E1());
                        emit(E2(), E3());
                    } else {
                        emit(E3(), E0());
                        emit(E1(), E2());
                    }
                    break;
                }
                case 10: {  // saddle: c10,c01 positive
                    double center = 0.25 * (u.at(ci, cj) + u.at(ci + 1, cj) + u.at(ci, cj + 1) +
                                            u.at(ci + 1, cj + 1));
                    if (center > 0) {
                        emit(E3(), E0());
                        emit(E1(), E2());
                    } else {
                        emit(E0(), E1());
                        emit(E2(), E3());
                    }
                    break;
                }
                default: break;
            }
        }

    // chain segments into polylines
    std::vector<std::vector<std::pair<int, int>>> adj(verts.size());  // (neighbor vid, edge id)
    for (int e = 0; e < int(edges.size()); ++e) {
        adj[edges[e].first].emplace_back(edges[e].second, e);
        adj[edges[e].second].emplace_back(edges[e].first, e);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    std::vector<char> edge_used(edges.size(), 0);

    GradientField gf;
    bool have_grad = g.dims[0] >= 3 && g.dims[1] >= 3;
    if (have_grad) gf = gradient(u);
    auto vertex_normal = [&](const Point& p, const Point& tangent) {
        Point n;
        if (have_grad) n = eval_gradient(gf, p);
        double nn = norm(n);
        if (nn < 1e-12 * std::max(1.0, u.max_abs())) {
            n = Point(-tangent.y, tangent.x);
            nn = norm(n);
        }
        if (nn == 0) return Point(0, 1);
        n = n * (1.0 / nn);
        // orient into {u>0} with a probe on each side
        double d = 0.25 * g.spacing;
        Point pp = p + n * d, pm = p - n * d;
        double up = g.contains(pp) ? eval_bilinear(u, pp) : -1;
        double um = g.contains(pm) ? eval_bilinear(u, pm) : -1;
        if (um > up) n = n * -1.0;
        return n;
    };

    std::vector<Polyline> lines;
    auto walk = [&](int start) {
        std::vector<int> chain{start};
        int cur = start;
        while (true) {
            int next = -1, eid = -1;
            for (auto [nb, e] : adj[cur])
                if (!edge_used[e]) {
                    next = nb;
                    eid = e;
                    break;
                }
            if (next < 0) break;
            edge_used[eid] = 1;
            chain.push_back(next);
            cur = next;
        }
        return chain;
    };
    auto finish = [&](const std::vector<int>& chain) {
        if (chain.size() < 2) return;
        Polyline pl;
        pl.closed = chain.front() == chain.back() && chain.size() > 3;
        std::size_t n = pl.closed ? chain.size() - 1 : chain.size();
        for (std::size_t a = 0; a < n; ++a) {
            Point p = verts[chain[a]].p;
            Point prev = verts[chain[a == 0 ? (pl.closed ? n - 1 : 0) : a - 1]].p;
            Point next = verts[chain[a + 1 < n ? a + 1 : (pl.closed ? 0 : n - 1)]].p;
            Point tangent = next - prev;
            double tn = norm(tangent);
            if (tn > 0) tangent = tangent * (1.0 / tn);
            pl.verts.push_back({p, vertex_normal(p, tangent)});
        }
        lines.push_back(std::move(pl));
    };
    // open chains first (endpoints have odd degree)
    for (int v = 0; v < int(verts.size()); ++v) {
        int free_deg = 0;
        for (auto [nb, e] : adj[v])
            if (!edge_used[e]) ++free_deg;
        if (free_deg == 1) finish(walk(v));
    }
    for (int v = 0; v < int(verts.size()); ++v) {
        bool has_free = false;
        for (auto [nb, e] : adj[v])
            if (!edge_used[e]) has_free = true;
        if (has_free) finish(walk(v));
    }
    return FreeBoundary(std::move(lines));
}

CorkscrewResult corkscrew(const ScalarField& u, const FreeBoundary& fb, const Point& x, double r,
                          Side side) {
    const Grid& g = u.grid;
    if (!g.contains_ball({x, r})) throw std::domain_error("corkscrew ball exits grid");
    CorkscrewResult res;
    if (r < 2 * g.spacing || fb.empty()) return res;
    const double half = r / 2;
    int ilo = std::max(0, int(std::ceil((x.x - half - g.origin.x) / g.spacing)));
    int ihi = std::min(g.dims[0] - 1, int(std::floor((x.x + half - g.origin.x) / g.spacing)));
    int jlo = std::max(0, int(std::ceil((x.y - half - g.origin.y) / g.spacing)));
    int jhi = std::min(g.dims[1] - 1, int(std::floor((x.y + half - g.origin.y) / g.spacing)));
    for (int i = ilo; i <= ihi; ++i)
        for (int j = jlo; j <= jhi; ++j) {
            Point p = g.node(i, j);
            if (sqr(p.x - x.x) + sqr(p.y - x.y) > sqr(half)) continue;
            bool inside = u.at(i, j) > 0;
            if ((side == Side::Interior) != inside) continue;
            double d = fb.distance(p);
            if (d > res.clearance) {
                res.found = true;
                res.clearance = d;
                res.point = p;
            }
        }
    return res;
}

int harnack_ell(const Point& x, const Point& y, double dx, double dy) {
    double d = norm(x - y);
    double m = std::min(dx, dy);
    if (!(m > 0)) return 1;
    double l = std::ceil(std::log2(std::max(d / m, 1.0)));
    return int(std::max(0.0, l)) + 1;
}

namespace {

struct PathSearch {
    const ScalarField& u;
    const FreeBoundary& fb;
    const Grid& g;
    int ilo, ihi, jlo, jhi;
    std::vector<double> dist_cache;  // fb distance per box node, NaN = not computed

    PathSearch(const ScalarField& u_, const FreeBoundary& fb_, const Point& x, const Point& y)
        : u(u_), fb(fb_), g(u_.grid) {
        double dxy = norm(x - y);
        double margin = dxy + 2 * std::max(fb.distance(x), fb.distance(y)) + 8 * g.spacing;
        double xmin = std::min(x.x, y.x) - margin, xmax = std::max(x.x, y.x) + margin;
        double ymin = std::min(x.y, y.y) - margin, ymax = std::max(x.y, y.y) + margin;
        ilo = std::max(0, int(std::floor((xmin - g.origin.x) / g.spacing)));
        ihi = std::min(g.dims[0] - 1, int(std::ceil((xmax - g.origin.x) / g.spacing)));
        jlo = std::max(0, int(std::floor((ymin - g.origin.y) / g.spacing)));
        jhi = std::min(g.dims[1] - 1, int(std::ceil((ymax - g.origin.y) / g.spacing)));
        dist_cache.assign(std::size_t(ihi - ilo + 1) * (jhi - jlo + 1),
                          std::numeric_limits<double>::quiet_NaN());
    }

    int bw() const { return ihi - ilo + 1; }
    int bh() const { return jhi - jlo + 1; }
    int local(int i, int j) const { return (i - ilo) * bh() + (j - jlo); }

    double clearance(int i, int j) {
        double& d = dist_cache[local(i, j)];
        if (std::isnan(d)) d = fb.distance(g.node(i, j));
        return d;
    }

    bool eligible(int i, int j, double c_clear) {
        return u.at(i, j) > 0 && clearance(i, j) >= c_clear;
    }

    int snap(const Point& p, double c_clear) {
        int bi = int(std::lround((p.x - g.origin.x) / g.spacing));
        int bj = int(std::lround((p.y - g.origin.y) / g.spacing));
        int best = -1;
        double bestd = std::numeric_limits<double>::infinity();
        for (int di = -2; di <= 2; ++di)
            for (int dj = -2; dj <= 2; ++dj) {
                int i = bi + di, j = bj + dj;
                if (i < ilo || i > ihi || j < jlo || j > jhi) continue;
                if (!eligible(i, j, c_clear)) continue;
                double d = norm(g.node(i, j) - p);
                if (d < bestd) {
                    bestd = d;
                    best = local(i, j);
                }
            }
        return best;
    }

    // Dijkstra in the clearance-weighted metric ds/delta(s); geodesics arch
    // away from the boundary, which is what keeps chain counts logarithmic.
    std::vector<Point> find(const Point& x, const Point& y, double c_clear) {
        int src = snap(x, c_clear), dst = snap(y, c_clear);
        if (src < 0 || dst < 0) return {};
        const int W = bw(), H = bh();
        std::vector<double> cost(std::size_t(W) * H, std::numeric_limits<double>::infinity());
        std::vector<int> prev(std::size_t(W) * H, -1);
        using QE = std::pair<double, int>;
        std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
        cost[src] = 0;
        pq.push({0.0, src});
        const int di8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
        const int dj8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
        while (!pq.empty()) {
            auto [c, id] = pq.top();
            pq.pop();
            if (c > cost[id]) continue;
            if (id == dst) break;
            int i = ilo + id / H, j = jlo + id % H;
            double da = clearance(i, j);
            for (int d = 0; d < 8; ++d) {
                int ni = i + di8[d], nj = j + dj8[d];
                if (ni < ilo || ni > ihi || nj < jlo || nj > jhi) continue;
                if (!eligible(ni, nj, c_clear)) continue;
                double len = g.spacing * ((d < 4) ? 1.0 : M_SQRT2);
                double db = clearance(ni, nj);
                double wgt = len * 2.0 / (da + db);
                int nid = local(ni, nj);
                if (cost[id] + wgt < cost[nid] - 1e-18) {
                    cost[nid] = cost[id] + wgt;
                    prev[nid] = id;
                    pq.push({cost[nid], nid});
                }
            }
        }
        if (!std::isfinite(cost[dst])) return {};
        std::vector<Point> pts;
        for (int id = dst; id >= 0; id = prev[id])
            pts.push_back(g.node(ilo + id / H, jlo + id % H));
        std::reverse(pts.begin(), pts.end());
        return pts;
    }
};

}  // namespace

HarnackChainResult harnack_chain(const ScalarField& u, const FreeBoundary& fb, const Point& x,
                                 const Point& y) {
    const Grid& g = u.grid;
    if (fb.empty()) throw std::domain_error("harnack_chain needs a nonempty boundary");
    if (!(eval_bilinear(u, x) > 0) || !(eval_bilinear(u, y) > 0))
        throw std::invalid_argument("harnack_chain endpoints must lie in {u>0}");
    double diag = std::sqrt(sqr(g.extent(0)) + sqr(g.extent(1)));
    if (norm(x - y) > diag / 4 + 1e-12)
        throw std::invalid_argument("harnack_chain endpoints too far apart");

    HarnackChainResult res;
    double dx = fb.distance(x), dy = fb.distance(y);
    if (norm(x - y) < 1e-15) {
        res.found = true;
        res.length = 1;
        res.balls.push_back({x, std::max(dx, 1e-300) / 2});
        res.c2 = 2.0;
        return res;
    }
    PathSearch search(u, fb, x, y);
    double c_clear = std::min(dx, dy) / 2;
    std::vector<Point> path = search.find(x, y, c_clear);
    if (path.empty()) {
        res.retried = true;
        c_clear /= 2;
        path = search.find(x, y, c_clear);
    }
    if (path.empty()) return res;
    path.insert(path.begin(), x);
    path.push_back(y);

    // arc-length walk placing balls B(p, delta(p)/2) at spacing delta(p)/4
    std::vector<double> cum{0};
    for (std::size_t i = 1; i < path.size(); ++i)
        cum.push_back(cum.back() + norm(path[i] - path[i - 1]));
    double total = cum.back();
    res.path_length = total;
    auto at = [&](double s) {
        auto it = std::upper_bound(cum.begin(), cum.end(), s);
        std::size_t i = std::min(std::size_t(it - cum.begin()), path.size() - 1);
        if (i == 0) return path[0];
        double seg = cum[i] - cum[i - 1];
        double t = seg > 0 ? (s - cum[i - 1]) / seg : 0.0;
        return path[i - 1] + (path[i] - path[i - 1]) * t;
    };
    double pos = 0;
    double c2 = 1;
    while (true) {
        Point c = at(pos);
        double delta = fb.distance(c);
        double rad = delta / 2;
        res.balls.push_back({c, rad});
        double gap = fb.distance(c) - rad;
        if (gap > 0 && rad > 0) c2 = std::max({c2, 2 * rad / gap, gap / (2 * rad)});
        if (norm(c - y) <= rad || pos >= total) break;
        pos = std::min(pos + delta / 4, total);
        if (int(res.balls.size()) > 100000) break;
    }
    res.found = true;
    res.length = int(res.balls.size());
    res.c2 = c2;
    return res;
}

double ahlfors_ratio(const FreeBoundary& fb, const Point& x, double r) {
    if (r < 1e-300) throw std::invalid_argument("ahlfors_ratio needs r > 0");
    double acc = 0;
    for (const auto& s : fb.segments()) {
        Point d = s.b - s.a;
        double A = dot(d, d);
        if (A <= 0) continue;
        Point f = s.a - x;
        double B = 2 * dot(f, d), C = dot(f, f) - r * r;
        double disc = B * B - 4 * A * C;
        if (disc <= 0) continue;
        double sq = std::sqrt(disc);
        double t0 = std::clamp((-B - sq) / (2 * A), 0.0, 1.0);
        double t1 = std::clamp((-B + sq) / (2 * A), 0.0, 1.0);
        acc += (t1 - t0) * std::sqrt(A);
    }
    return acc / (2 * r);
}

double hausdorff_flatness(const FreeBoundary& fb, const Point& x0, double r, const Point& e,
                          double sample_spacing) {
    if (fb.empty()) throw std::domain_error("hausdorff_flatness needs a nonempty boundary");
    double en = norm(e);
    if (!(en > 0)) throw std::invalid_argument("direction must be nonzero");
    Point nu = e * (1.0 / en);
    Point tang(-nu.y, nu.x);
    Point la = x0 - tang * r, lb = x0 + tang * r;

    std::vector<Point> bd;
    for (const auto& s : fb.segments()) {
        Point d = s.b - s.a;
        double A = dot(d, d);
        if (A <= 0) continue;
        Point f = s.a - x0;
        double B = 2 * dot(f, d), C = dot(f, f) - r * r;
        double disc = B * B - 4 * A * C;
        if (disc <= 0) continue;
        double sq = std::sqrt(disc);
        double t0 = std::clamp((-B - sq) / (2 * A), 0.0, 1.0);
        double t1 = std::clamp((-B + sq) / (2 * A), 0.0, 1.0);
        if (t1 <= t0) continue;
        double len = (t1 - t0) * std::sqrt(A);
        int n = std::max(1, int(std::ceil(len / sample_spacing)));
        for (int k = 0; k <= n; ++k) {
            double t = t0 + (t1 - t0) * k / n;
            bd.push_back(s.a + d * t);
        }
    }
    if (bd.empty()) throw std::domain_error("boundary does not meet the ball");

    double d_bd_line = 0;
    for (const auto& p : bd)
        d_bd_line = std::max(d_bd_line, point_segment_distance(p, la, lb));
    double d_line_bd = 0;
    int n = std::max(2, int(std::ceil(2 * r / sample_spacing)));
    for (int k = 0; k <= n; ++k) {
        Point p = la + (lb - la) * (double(k) / n);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : bd) best = std::min(best, norm(p - q));
        d_line_bd = std::max(d_line_bd, best);
    }
    return std::max(d_bd_line, d_line_bd) / r;
}

AlmostMinReport verify_almost_min(const ScalarField& u, const WeightField& w,
                                  const AlmostMinParams& amp, const Point& x, double r,
                                  double tau_disc) {
    if (!u.grid.contains_ball({x, r})) throw std::domain_error("ball exits grid");
    ScalarField v = harmonic_replace(u, w, {x, r});
    std::optional<Ball> region = Ball{x, r};
    double Ju = energy(u, w, region, true);
    double Jv = energy(v, w, region, true);
    AlmostMinReport rep;
    rep.bound = amp.kappa * std::pow(r, amp.alpha) + tau_disc;
    if (Jv <= 1e-14 * std::max(1.0, Ju)) {
        rep.degenerate = true;
        return rep;
    }
    rep.defect = Ju / Jv - 1.0;
    rep.pass = rep.defect <= rep.bound;
    return rep;
}

}  // namespace fblab
