#include "fblab/field.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace fblab {

void Grid::validate() const {
    if (rank != 2 && rank != 3) throw std::invalid_argument("grid rank must be 2 or 3");
    if (!(spacing > 0)) throw std::invalid_argument("grid spacing must be positive");
    std::size_t total = 1;
    for (int a = 0; a < rank; ++a) {
        if (dims[a] < 2) throw std::invalid_argument("grid needs at least 2 samples per axis");
        if (total > std::numeric_limits<std::size_t>::max() / std::size_t(dims[a]))
            throw std::invalid_argument("grid sample count overflows address space");
        total *= std::size_t(dims[a]);
    }
    if (rank == 2 && dims[2] != 1) throw std::invalid_argument("rank-2 grid must have dims[2]=1");
}

void ScalarField::validate_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("field contains NaN/Inf");
    if (values.size() != grid.size())
        throw std::invalid_argument("field size does not match grid dims");
}

double ScalarField::max_abs() const {
    double m = 0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

namespace {

struct CellLoc {
    int i, j, k;
    double s, t, u;  // local coordinates in [0,1]
};

CellLoc locate(const Grid& g, const Point& p) {
    const double eps = 1e-9 * g.spacing;
    if (!g.contains(p, eps)) throw std::domain_error("point outside grid");
    CellLoc c{};
    double fs[3] = {(p.x - g.origin.x) / g.spacing, (p.y - g.origin.y) / g.spacing,
                    (p.z - g.origin.z) / g.spacing};
    int* idx[3] = {&c.i, &c.j, &c.k};
    double* loc[3] = {&c.s, &c.t, &c.u};
    for (int a = 0; a < 3; ++a) {
        if (a >= g.rank) {
            *idx[a] = 0;
            *loc[a] = 0;
            continue;
        }
        int i = int(std::floor(fs[a]));
        i = std::clamp(i, 0, g.dims[a] - 2);
        *idx[a] = i;
        *loc[a] = std::clamp(fs[a] - i, 0.0, 1.0);
    }
    return c;
}

}  // namespace

double eval_bilinear(const ScalarField& f, const Point& p) {
    const Grid& g = f.grid;
    CellLoc c = locate(g, p);
    if (g.rank == 2) {
        double v00 = f.at(c.i, c.j), v10 = f.at(c.i + 1, c.j);
        double v01 = f.at(c.i, c.j + 1), v11 = f.at(c.i + 1, c.j + 1);
        return v00 * (1 - c.s) * (1 - c.t) + v10 * c.s * (1 - c.t) + v01 * (1 - c.s) * c.t +
               v11 * c.s * c.t;
    }
    double acc = 0;
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk) {
                double w = (di ? c.s : 1 - c.s) * (dj ? c.t : 1 - c.t) * (dk ? c.u : 1 - c.u);
                acc += w * f.at(c.i + di, c.j + dj, c.k + dk);
            }
    return acc;
}

GradientField gradient(const ScalarField& f) {
    const Grid& g = f.grid;
    for (int a = 0; a < g.rank; ++a)
        if (g.dims[a] < 3) throw std::invalid_argument("gradient needs >=3 samples per axis");
    GradientField out;
    out.rank = g.rank;
    for (int a = 0; a < g.rank; ++a) out.comp[a] = ScalarField::zeros(g);
    const double h = g.spacing;
    auto diff = [&](int a, int i, int j, int k) {
        int n = g.dims[a];
        int c = (a == 0 ? i : (a == 1 ? j : k));
        int lo[3] = {i, j, k}, hi[3] = {i, j, k};
        if (c == 0) {
            hi[a] += 1;
            // one-sided, second order: (-3f0 + 4f1 - f2)/(2h)
            int m2[3] = {i, j, k};
            m2[a] += 2;
            return (-3 * f.at(i, j, k) + 4 * f.at(hi[0], hi[1], hi[2]) -
                    f.at(m2[0], m2[1], m2[2])) /
                   (2 * h);
        }
        if (c == n - 1) {
            lo[a] -= 1;
            int m2[3] = {i, j, k};
            m2[a] -= 2;
            return (3 * f.at(i, j, k) - 4 * f.at(lo[0], lo[1], lo[2]) +
                    f.at(m2[0], m2[1], m2[2])) /
                   (2 * h);
        }
        lo[a] -= 1;
        hi[a] += 1;
        return (f.at(hi[0], hi[1], hi[2]) - f.at(lo[0], lo[1], lo[2])) / (2 * h);
    };
    for (int i = 0; i < g.dims[0]; ++i)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int k = 0; k < g.dims[2]; ++k)
                for (int a = 0; a < g.rank; ++a)
                    out.comp[a].values[g.index(i, j, k)] = diff(a, i, j, k);
    return out;
}

Point eval_gradient(const GradientField& g, const Point& p) {
    Point out;
    out.x = eval_bilinear(g.comp[0], p);
    out.y = eval_bilinear(g.comp[1], p);
    if (g.rank == 3) out.z = eval_bilinear(g.comp[2], p);
    return out;
}

int default_circle_samples(double radius, double spacing) {
    return std::max(64, int(std::ceil(2 * M_PI * radius / spacing)));
}

double circle_integral(const ScalarField& f, const Ball& b, int n_theta) {
    if (f.grid.rank != 2) throw std::invalid_argument("circle_integral requires rank 2");
    if (n_theta < 16) throw std::invalid_argument("circle_integral needs n_theta >= 16");
    if (!f.grid.contains_ball(b)) throw std::domain_error("ball exits grid");
    double acc = 0;
    for (int k = 0; k < n_theta; ++k) {
        double th = 2 * M_PI * k / n_theta;
        Point p{b.center.x + b.radius * std::cos(th), b.center.y + b.radius * std::sin(th)};
        acc += eval_bilinear(f, p);
    }
    return acc * (2 * M_PI * b.radius / n_theta);
}

double ball_integral(const ScalarField& f, const Ball& b) {
    const Grid& g = f.grid;
    if (!g.contains_ball(b)) throw std::domain_error("ball exits grid");
    const double h = g.spacing;
    const double r2 = sqr(b.radius);
    auto inside = [&](const Point& p) {
        return sqr(p.x - b.center.x) + sqr(p.y - b.center.y) +
                   (g.rank == 3 ? sqr(p.z - b.center.z) : 0.0) <=
               r2;
    };
    // cell index ranges overlapping the ball
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
        if (a >= g.rank) {
            lo[a] = hi[a] = 0;
            continue;
        }
        double c = (b.center[a] - g.origin[a]) / h;
        lo[a] = std::max(0, int(std::floor(c - b.radius / h)) - 1);
        hi[a] = std::min(g.dims[a] - 2, int(std::ceil(c + b.radius / h)));
    }
    const double half_diag = 0.5 * h * std::sqrt(double(g.rank));
    const int S = 4;
    double acc = 0;
    for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int k = lo[2]; k <= hi[2]; ++k) {
                Point cc = g.node(i, j, k);
                cc.x += 0.5 * h;
                cc.y += 0.5 * h;
                if (g.rank == 3) cc.z += 0.5 * h;
                double dc = norm(Point(cc.x - b.center.x, cc.y - b.center.y,
                                       g.rank == 3 ? cc.z - b.center.z : 0));
                if (dc > b.radius + half_diag) continue;
                if (dc + half_diag <= b.radius) {
                    // whole cell inside: midpoint value
                    double cellv = eval_bilinear(f, cc);
                    acc += std::pow(h, g.rank) * cellv;
                    continue;
                }
                // rim cell: subsample
                double w = std::pow(h / S, g.rank);
                int kmax = (g.rank == 3) ? S : 1;
                for (int si = 0; si < S; ++si)
                    for (int sj = 0; sj < S; ++sj)
                        for (int sk = 0; sk < kmax; ++sk) {
                            Point p = g.node(i, j, k);
                            p.x += (si + 0.5) * h / S;
                            p.y += (sj + 0.5) * h / S;
                            if (g.rank == 3) p.z += (sk + 0.5) * h / S;
                            if (inside(p)) acc += w * eval_bilinear(f, p);
                        }
            }
    return acc;
}

ScalarField rescale(const ScalarField& f, const Point& x0, double r, const Grid& out) {
    if (!(r > 0)) throw std::invalid_argument("rescale needs r > 0");
    out.validate();
    ScalarField o = ScalarField::zeros(out);
    for (int i = 0; i < out.dims[0]; ++i)
        for (int j = 0; j < out.dims[1]; ++j)
            for (int k = 0; k < out.dims[2]; ++k) {
                Point q = out.node(i, j, k);
                Point p = x0 + q * r;
                if (!f.grid.contains(p, 1e-9 * f.grid.spacing))
                    throw std::domain_error("rescale pullback exits source grid");
                o.values[out.index(i, j, k)] = eval_bilinear(f, p) / r;
            }
    return o;
}

void write_field(const ScalarField& f, const std::string& basepath) {
    nlohmann::json j;
    j["schema"] = "fblab-field-1";
    j["rank"] = f.grid.rank;
    j["dims"] = std::vector<int>(f.grid.dims.begin(), f.grid.dims.begin() + f.grid.rank);
    j["origin"] = f.grid.rank == 3
                      ? std::vector<double>{f.grid.origin.x, f.grid.origin.y, f.grid.origin.z}
                      : std::vector<double>{f.grid.origin.x, f.grid.origin.y};
    j["spacing"] = f.grid.spacing;
    j["dtype"] = "f64-le";
    std::ofstream hdr(basepath + ".json");
    if (!hdr) throw std::runtime_error("cannot write " + basepath + ".json");
    hdr << j.dump(2) << "\n";
    std::ofstream raw(basepath + ".raw", std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write " + basepath + ".raw");
    raw.write(reinterpret_cast<const char*>(f.values.data()),
              std::streamsize(f.values.size() * sizeof(double)));
}

ScalarField read_field(const std::string& basepath) {
    std::ifstream hdr(basepath + ".json");
    if (!hdr) throw std::runtime_error("cannot read " + basepath + ".json");
    nlohmann::json j = nlohmann::json::parse(hdr);
    Grid g;
    g.rank = j.at("rank").get<int>();
    auto d = j.at("dims").get<std::vector<int>>();
    auto o = j.at("origin").get<std::vector<double>>();
    g.dims = {d[0], d.size() > 1 ? d[1] : 1, d.size() > 2 ? d[2] : 1};
    g.origin = Point(o[0], o.size() > 1 ? o[1] : 0, o.size() > 2 ? o[2] : 0);
    g.spacing = j.at("spacing").get<double>();
    if (j.at("dtype").get<std::string>() != "f64-le")
        throw std::runtime_error("unsupported field dtype");
    g.validate();
    ScalarField f = ScalarField::zeros(g);
    std::ifstream raw(basepath + ".raw", std::ios::binary);
    if (!raw) throw std::runtime_error("cannot read " + basepath + ".raw");
    raw.read(reinterpret_cast<char*>(f.values.data()),
             std::streamsize(f.values.size() * sizeof(double)));
    if (std::size_t(raw.gcount()) != f.values.size() * sizeof(double))
        throw std::runtime_error("raw file truncated: " + basepath + ".raw");
    f.validate_finite();
    return f;
}

void export_pgm(const ScalarField& f, const std::string& path) {
    if (f.grid.rank != 2) throw std::invalid_argument("pgm export requires rank 2");
    double lo = f.values[0], hi = f.values[0];
    for (double v : f.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double span = hi > lo ? hi - lo : 1.0;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << f.grid.dims[0] << " " << f.grid.dims[1] << "\n255\n";
    // image rows top to bottom = decreasing y
    for (int j = f.grid.dims[1] - 1; j >= 0; --j)
        for (int i = 0; i < f.grid.dims[0]; ++i) {
            double v = (f.at(i, j) - lo) / span;
            out.put(char(std::clamp(int(std::lround(v * 255.0)), 0, 255)));
        }
}

}  // namespace fblab
