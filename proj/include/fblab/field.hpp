#pragma once

// Uniform-grid scalar fields: interpolation, differentiation, and
// ball/circle quadrature. Numeric substrate for everything else.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fblab {

struct Point {
    double x = 0, y = 0, z = 0;
    Point() = default;
    Point(double x_, double y_, double z_ = 0) : x(x_), y(y_), z(z_) {}
    double operator[](int a) const { return a == 0 ? x : (a == 1 ? y : z); }
    Point operator+(const Point& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Point operator-(const Point& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Point operator*(double s) const { return {x * s, y * s, z * s}; }
};

inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }
inline double sqr(double t) { return t * t; }

struct Ball {
    Point center;
    double radius = 0;
    Ball() = default;
    Ball(Point c, double r) : center(c), radius(r) {}
};

struct Grid {
    Point origin;
    double spacing = 1.0;
    std::array<int, 3> dims{2, 2, 1};
    int rank = 2;

    // n nodes per axis on [-half, half]^2
    static Grid square(double half, int n) {
        Grid g;
        g.origin = Point(-half, -half);
        g.spacing = 2.0 * half / (n - 1);
        g.dims = {n, n, 1};
        g.rank = 2;
        return g;
    }

    void validate() const;
    std::size_t size() const {
        return std::size_t(dims[0]) * std::size_t(dims[1]) * std::size_t(dims[2]);
    }
    std::size_t index(int i, int j, int k = 0) const {
        return (std::size_t(i) * dims[1] + j) * dims[2] + k;
    }
    Point node(int i, int j, int k = 0) const {
        return {origin.x + i * spacing, origin.y + j * spacing, origin.z + k * spacing};
    }
    double extent(int a) const { return (dims[a] - 1) * spacing; }
    Point max_corner() const {
        return {origin.x + extent(0), origin.y + extent(1),
                rank == 3 ? origin.z + extent(2) : origin.z};
    }
    bool contains(const Point& p, double margin = 0) const {
        Point hi = max_corner();
        bool ok = p.x >= origin.x - margin && p.x <= hi.x + margin &&
                  p.y >= origin.y - margin && p.y <= hi.y + margin;
        if (rank == 3) ok = ok && p.z >= origin.z - margin && p.z <= hi.z + margin;
        return ok;
    }
    bool contains_ball(const Ball& b, double margin = 0) const {
        Point lo = b.center - Point(b.radius, b.radius, rank == 3 ? b.radius : 0);
        Point hi = b.center + Point(b.radius, b.radius, rank == 3 ? b.radius : 0);
        return contains(lo, margin) && contains(hi, margin);
    }
};

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    static ScalarField zeros(const Grid& g) {
        g.validate();
        ScalarField f;
        f.grid = g;
        f.values.assign(g.size(), 0.0);
        return f;
    }
    template <class F>
    static ScalarField sample(const Grid& g, F&& fn) {
        ScalarField f = zeros(g);
        for (int i = 0; i < g.dims[0]; ++i)
            for (int j = 0; j < g.dims[1]; ++j)
                for (int k = 0; k < g.dims[2]; ++k)
                    f.values[g.index(i, j, k)] = fn(g.node(i, j, k));
        f.validate_finite();
        return f;
    }

    double& at(int i, int j, int k = 0) { return values[grid.index(i, j, k)]; }
    double at(int i, int j, int k = 0) const { return values[grid.index(i, j, k)]; }
    void validate_finite() const;
    double max_abs() const;
};

struct GradientField {
    std::array<ScalarField, 3> comp;
    int rank = 2;
};

// Multilinear interpolation of the 2^n surrounding samples; exact on affine fields.
double eval_bilinear(const ScalarField& f, const Point& p);

// Centered differences interior, one-sided at faces.
GradientField gradient(const ScalarField& f);
Point eval_gradient(const GradientField& g, const Point& p);

// max(64, ceil(2*pi*r/h)); resolves the circle at grid resolution
int default_circle_samples(double radius, double spacing);

// Trapezoid rule over n_theta equispaced angles, returns the full line integral
// over the circle (includes the circumference element).
double circle_integral(const ScalarField& f, const Ball& b, int n_theta);

// Cell-wise midpoint sum with 4x4-per-axis subsampling on rim cells.
double ball_integral(const ScalarField& f, const Ball& b);

// out(x) = f(x0 + r x)/r sampled on out_grid
ScalarField rescale(const ScalarField& f, const Point& x0, double r, const Grid& out);

// Sidecar field files: <base>.json header + <base>.raw little-endian f64.
void write_field(const ScalarField& f, const std::string& basepath);
ScalarField read_field(const std::string& basepath);
void export_pgm(const ScalarField& f, const std::string& path);

}  // namespace fblab
