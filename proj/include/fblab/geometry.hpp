#pragma once

// Free-boundary extraction and metric-geometry audits: distance function,
// corkscrew points, Harnack chains, Ahlfors regularity, Hausdorff flatness,
// and the almost-minimality verifier.

#include "fblab/problem.hpp"
#include "fblab/solver.hpp"

namespace fblab {

struct FbVertex {
    Point p;
    Point normal;  // unit, pointing into {u>0}
};

struct Polyline {
    std::vector<FbVertex> verts;
    bool closed = false;
};

struct Segment {
    Point a, b;
};

class FreeBoundary {
  public:
    FreeBoundary() = default;
    explicit FreeBoundary(std::vector<Polyline> lines);

    const std::vector<Polyline>& polylines() const { return lines_; }
    bool empty() const { return segs_.empty(); }
    const std::vector<Segment>& segments() const { return segs_; }
    double total_length() const;

    // exact point-to-segment distance minimized over all segments
    double distance(const Point& p) const;

  private:
    std::vector<Polyline> lines_;
    std::vector<Segment> segs_;
    // uniform bucket accelerator
    double cell_ = 0;
    Point lo_;
    int bx_ = 0, by_ = 0;
    std::vector<std::vector<int>> buckets_;
    void build_buckets();
};

// Marching squares on the sign of u with linear sub-cell interpolation;
// saddles resolved by the cell-center sample.
FreeBoundary extract_boundary(const ScalarField& u);

double fb_distance(const FreeBoundary& fb, const Point& p);

double point_segment_distance(const Point& p, const Point& a, const Point& b);

enum class Side { Interior, Exterior };

struct CorkscrewResult {
    bool found = false;
    Point point;
    double clearance = 0;
};

// Grid node in B(x, r/2) on the requested side maximizing the boundary
// distance; lexicographic tie-break on the node index.
CorkscrewResult corkscrew(const ScalarField& u, const FreeBoundary& fb, const Point& x, double r,
                          Side side);

struct ChainBall {
    Point center;
    double radius = 0;
};

struct HarnackChainResult {
    bool found = false;
    bool retried = false;  // clearance was halved once after a path failure
    int length = 0;        // N
    double c2 = 0;         // achieved Harnack-chain constant
    double path_length = 0;
    std::vector<ChainBall> balls;
};

HarnackChainResult harnack_chain(const ScalarField& u, const FreeBoundary& fb, const Point& x,
                                 const Point& y);

// chain-length budget exponent: ceil(log2(|x-y| / min(d(x), d(y))))_+ + 1
int harnack_ell(const Point& x, const Point& y, double dx, double dy);

// polyline length inside B(x,r) divided by 2r
double ahlfors_ratio(const FreeBoundary& fb, const Point& x, double r);

// normalized two-sided Hausdorff distance between the boundary and the
// diameter line through x0 orthogonal to e
double hausdorff_flatness(const FreeBoundary& fb, const Point& x0, double r, const Point& e,
                          double sample_spacing);

struct AlmostMinReport {
    bool degenerate = false;  // J(v) = 0
    double defect = 0;        // J(u)/J(v) - 1
    double bound = 0;         // kappa r^alpha + tau_disc
    bool pass = false;
};

AlmostMinReport verify_almost_min(const ScalarField& u, const WeightField& w,
                                  const AlmostMinParams& amp, const Point& x, double r,
                                  double tau_disc);

}  // namespace fblab
