// fblab: solve -> extract -> audit pipelines over reproducible run directories.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "fblab/classify.hpp"
#include "fblab/geometry.hpp"
#include "fblab/monotone.hpp"
#include "fblab/problem.hpp"
#include "fblab/report.hpp"
#include "fblab/solver.hpp"

namespace fs = std::filesystem;
using namespace fblab;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitMissing = 3;
constexpr int kExitInternal = 4;

struct AuditConfig {
    double tau_disc = 5e-3;
    double eps_gap = 0.15;
    int audit_points = 16;
    double ladder_gamma = 0.8;
    int n_dir = 360;
    double decay_theta = 0.75;
    double decay_eta = 0.5;
    double decay_r0 = 0.2;
    double weiss_rmax = 0.4;
    double nta_rmax = 0.25;
    double c1_max = 8, c2_max = 8, c3_max = 40;
    int amin_balls = 50;
    double amin_rmax = 0.2;
    int hm_points = 8;
    std::uint64_t seed = 0;

    json to_json() const {
        return json{{"tau_disc", tau_disc},       {"eps_gap", eps_gap},
                    {"audit_points", audit_points}, {"ladder_gamma", ladder_gamma},
                    {"n_dir", n_dir},             {"decay_theta", decay_theta},
                    {"decay_eta", decay_eta},     {"decay_r0", decay_r0},
                    {"weiss_rmax", weiss_rmax},   {"nta_rmax", nta_rmax},
                    {"c1_max", c1_max},           {"c2_max", c2_max},
                    {"c3_max", c3_max},           {"amin_balls", amin_balls},
                    {"amin_rmax", amin_rmax},     {"hm_points", hm_points},
                    {"seed", seed}};
    }
    static AuditConfig load(const std::string& path) {
        AuditConfig c;
        if (path.empty()) return c;
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open config " + path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(std::string("config parse error: ") + e.what());
        }
        auto get = [&](const char* k, auto& v) {
            if (j.contains(k)) v = j.at(k).get<std::decay_t<decltype(v)>>();
        };
        get("tau_disc", c.tau_disc);
        get("eps_gap", c.eps_gap);
        get("audit_points", c.audit_points);
        get("ladder_gamma", c.ladder_gamma);
        get("n_dir", c.n_dir);
        get("decay_theta", c.decay_theta);
        get("decay_eta", c.decay_eta);
        get("decay_r0", c.decay_r0);
        get("weiss_rmax", c.weiss_rmax);
        get("nta_rmax", c.nta_rmax);
        get("c1_max", c.c1_max);
        get("c2_max", c.c2_max);
        get("c3_max", c.c3_max);
        get("amin_balls", c.amin_balls);
        get("amin_rmax", c.amin_rmax);
        get("hm_points", c.hm_points);
        get("seed", c.seed);
        return c;
    }
};

std::string fd(double v) { return format_double(v); }

void write_boundary_csv(const FreeBoundary& fb, const std::string& path) {
    Csv csv;
    csv.header = {"polyline", "x", "y", "nx", "ny"};
    int id = 0;
    for (const auto& pl : fb.polylines()) {
        for (const auto& v : pl.verts)
            csv.rows.push_back({std::to_string(id), fd(v.p.x), fd(v.p.y), fd(v.normal.x),
                                fd(v.normal.y)});
        ++id;
    }
    csv.write(path);
}

struct RunData {
    ProblemSpec spec;
    ScalarField u;
    WeightField weights;
    AlmostMinParams amp;
    FreeBoundary fb;
};

RunData load_run(const std::string& dir) {
    for (const char* name : {"result.json", "u.json", "u.raw", "spec.json"})
        if (!fs::exists(fs::path(dir) / name))
            throw std::runtime_error(std::string("run directory is missing ") + name);
    RunData rd;
    {
        std::ifstream in(fs::path(dir) / "spec.json");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        rd.spec = ProblemSpec::from_json(text);
    }
    rd.u = read_field(dir + "/u");
    rd.weights = rd.spec.build_weights();
    std::ifstream rin(fs::path(dir) / "result.json");
    json r = json::parse(rin);
    rd.amp.kappa = r.value("kappa", 0.0);
    rd.amp.alpha = r.value("alpha", 1.0);
    rd.fb = extract_boundary(rd.u);
    return rd;
}

// boundary points equispaced by arc length, restricted to the grid rectangle
// shrunk enough that every audit ball stays inside
std::vector<Point> audit_points(const RunData& rd, const AuditConfig& cfg) {
    const Grid& g = rd.u.grid;
    double margin = std::max({0.1 * g.extent(0), 0.1 * g.extent(1),
                              cfg.nta_rmax + 2 * g.spacing});
    Point lo = g.origin, hi = g.max_corner();
    auto in_core = [&](const Point& p) {
        return p.x >= lo.x + margin && p.x <= hi.x - margin && p.y >= lo.y + margin &&
               p.y <= hi.y - margin;
    };
    std::vector<Segment> segs;
    double total = 0;
    for (const auto& s : rd.fb.segments())
        if (in_core(s.a) && in_core(s.b)) {
            segs.push_back(s);
            total += norm(s.b - s.a);
        }
    std::vector<Point> pts;
    if (segs.empty() || total <= 0) return pts;
    int n = cfg.audit_points;
    double step = total / n;
    double next = step / 2, walked = 0;
    for (const auto& s : segs) {
        double len = norm(s.b - s.a);
        while (next <= walked + len && int(pts.size()) < n) {
            double t = (next - walked) / len;
            pts.push_back(s.a + (s.b - s.a) * t);
            next += step;
        }
        walked += len;
    }
    return pts;
}

double max_ball_radius(const Grid& g, const Point& x, double want) {
    double dx = std::min(x.x - g.origin.x, g.max_corner().x - x.x);
    double dy = std::min(x.y - g.origin.y, g.max_corner().y - x.y);
    return std::min(want, std::min(dx, dy) - 2 * g.spacing);
}

void audit_weiss(const RunData& rd, const AuditConfig& cfg, const std::string& out) {
    Csv csv;
    csv.header = {"point", "x0", "y0", "r", "W", "Wtilde", "dirichlet_part", "volume_part",
                  "sphere_part", "normal_part", "dissipation", "defect", "pass", "reason"};
    auto pts = audit_points(rd, cfg);
    const double h = rd.u.grid.spacing;
    for (int pi = 0; pi < int(pts.size()); ++pi) {
        double rmax = max_ball_radius(rd.u.grid, pts[pi], cfg.weiss_rmax);
        if (rmax < 8 * h) continue;
        auto ladder = default_ladder(rmax, 6 * h, cfg.ladder_gamma);
        try {
            MonotoneAudit a = audit_monotone(rd.u, rd.weights, rd.amp, pts[pi], ladder,
                                             cfg.tau_disc);
            for (std::size_t k = 0; k < a.samples.size(); ++k) {
                const WeissSample& s = a.samples[k];
                double defect = k > 0 ? a.steps[k - 1].defect : 0.0;
                bool pass = k > 0 ? (a.steps[k - 1].pass_drift && a.steps[k - 1].pass_dissipation)
                                  : true;
                csv.rows.push_back({std::to_string(pi), fd(s.x0.x), fd(s.x0.y), fd(s.r), fd(s.W),
                                    fd(s.W_tilde), fd(s.dirichlet_part), fd(s.volume_part),
                                    fd(s.sphere_part), fd(s.normal_part), fd(s.dissipation),
                                    fd(defect), pass ? "true" : "false", ""});
            }
        } catch (const std::exception& e) {
            csv.rows.push_back({std::to_string(pi), fd(pts[pi].x), fd(pts[pi].y), "", "", "", "",
                                "", "", "", "", "", "false", e.what()});
        }
    }
    csv.write(out);
}

void audit_acf(const RunData& rd, const AuditConfig& cfg, const std::string& out) {
    Csv csv;
    csv.header = {"point", "x0", "y0", "R", "phi_f", "phi_g", "F"};
    auto pts = audit_points(rd, cfg);
    const double h = rd.u.grid.spacing;
    for (int pi = 0; pi < int(pts.size()); ++pi) {
        double rmax = max_ball_radius(rd.u.grid, pts[pi], cfg.nta_rmax);
        if (rmax < 8 * h) continue;
        std::vector<double> ladder;
        for (double r = 8 * h; r <= rmax; r *= 1.25) ladder.push_back(r);
        for (const AcfSample& s : acf(rd.u, pts[pi], ladder))
            csv.rows.push_back({std::to_string(pi), fd(pts[pi].x), fd(pts[pi].y), fd(s.R),
                                fd(s.phi_f), fd(s.phi_g), fd(s.F)});
    }
    csv.write(out);
}

std::vector<double> dyadic_radii(double lo, double hi) {
    std::vector<double> out;
    for (double r = hi; r >= lo; r /= 2) out.push_back(r);
    std::reverse(out.begin(), out.end());
    return out;
}

void audit_nta(const RunData& rd, const AuditConfig& cfg, const std::string& out_json,
               const std::string& out_csv) {
    auto pts = audit_points(rd, cfg);
    const Grid& g = rd.u.grid;
    const double h = g.spacing;
    json rows = json::array();
    Csv csv;
    csv.header = {"kind", "point", "x", "y", "r", "value", "pass"};
    auto radii = dyadic_radii(8 * h, cfg.nta_rmax);

    struct CsPoint {
        Point p;
        double clearance;
    };
    std::map<std::pair<int, int>, CsPoint> interior;  // (point, radius idx) -> corkscrew

    for (int pi = 0; pi < int(pts.size()); ++pi)
        for (int ri = 0; ri < int(radii.size()); ++ri) {
            double r = radii[ri];
            if (max_ball_radius(g, pts[pi], r) < r) continue;
            for (Side side : {Side::Interior, Side::Exterior}) {
                CorkscrewResult cs = corkscrew(rd.u, rd.fb, pts[pi], r, side);
                double c1 = cs.found && cs.clearance > 0 ? r / cs.clearance : -1;
                bool pass = cs.found && c1 > 0 && c1 <= cfg.c1_max;
                const char* kind = side == Side::Interior ? "corkscrew_int" : "corkscrew_ext";
                rows.push_back({{"kind", kind},
                                {"point", pi},
                                {"x", pts[pi].x},
                                {"y", pts[pi].y},
                                {"r", r},
                                {"value", c1},
                                {"pass", pass}});
                csv.rows.push_back({kind, std::to_string(pi), fd(pts[pi].x), fd(pts[pi].y), fd(r),
                                    fd(c1), pass ? "true" : "false"});
                if (side == Side::Interior && cs.found)
                    interior[{pi, ri}] = {cs.point, cs.clearance};
            }
        }

    double pair_limit = std::max(g.extent(0), g.extent(1)) / 4;
    for (int ri = 0; ri < int(radii.size()); ++ri)
        for (int a = 0; a < int(pts.size()); ++a)
            for (int b = a + 1; b < int(pts.size()); ++b) {
                auto ia = interior.find({a, ri}), ib = interior.find({b, ri});
                if (ia == interior.end() || ib == interior.end()) continue;
                const Point &xa = ia->second.p, &xb = ib->second.p;
                if (norm(xa - xb) > pair_limit) continue;
                HarnackChainResult hc = harnack_chain(rd.u, rd.fb, xa, xb);
                int ell = harnack_ell(xa, xb, ia->second.clearance, ib->second.clearance);
                bool pass = hc.found && hc.length <= cfg.c3_max * ell + 1 && hc.c2 <= cfg.c2_max;
                rows.push_back({{"kind", "harnack"},
                                {"point", a},
                                {"point_b", b},
                                {"x", xa.x},
                                {"y", xa.y},
                                {"r", radii[ri]},
                                {"value", hc.length},
                                {"ell", ell},
                                {"c2", hc.c2},
                                {"retried", hc.retried},
                                {"pass", pass}});
                csv.rows.push_back({"harnack", std::to_string(a) + ":" + std::to_string(b),
                                    fd(xa.x), fd(xa.y), fd(radii[ri]),
                                    std::to_string(hc.length), pass ? "true" : "false"});
            }

    std::ofstream jf(out_json);
    jf << rows.dump(2) << "\n";
    csv.write(out_csv);
}

void audit_ahlfors(const RunData& rd, const AuditConfig& cfg, const std::string& out) {
    Csv csv;
    csv.header = {"point", "x", "y", "r", "ratio", "pass"};
    auto pts = audit_points(rd, cfg);
    const double h = rd.u.grid.spacing;
    for (int pi = 0; pi < int(pts.size()); ++pi) {
        double rmax = max_ball_radius(rd.u.grid, pts[pi], cfg.nta_rmax);
        for (double r = 8 * h; r <= rmax; r *= 1.5) {
            double ratio = ahlfors_ratio(rd.fb, pts[pi], r);
            bool pass = ratio >= 0.5 && ratio <= 2.0;
            csv.rows.push_back({std::to_string(pi), fd(pts[pi].x), fd(pts[pi].y), fd(r), fd(ratio),
                                pass ? "true" : "false"});
        }
    }
    csv.write(out);
}

void audit_amin(const RunData& rd, const AuditConfig& cfg, const std::string& out_json,
                const std::string& out_csv) {
    json rows = json::array();
    Csv csv;
    csv.header = {"x", "y", "r", "defect", "bound", "pass"};
    std::mt19937_64 rng(cfg.seed ^ 0xa817u);
    const double h = rd.u.grid.spacing;
    const auto& segs = rd.fb.segments();
    if (!segs.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, segs.size() - 1);
        std::uniform_real_distribution<double> uni(0, 1);
        int made = 0, guard = 0;
        while (made < cfg.amin_balls && guard++ < 50 * cfg.amin_balls) {
            const Segment& s = segs[pick(rng)];
            Point x = s.a + (s.b - s.a) * uni(rng);
            double rmax = max_ball_radius(rd.u.grid, x, cfg.amin_rmax);
            if (rmax < 8 * h) continue;
            double r = 8 * h + (rmax - 8 * h) * uni(rng);
            AlmostMinReport rep = verify_almost_min(rd.u, rd.weights, rd.amp, x, r, cfg.tau_disc);
            if (rep.degenerate) continue;
            rows.push_back({{"x", x.x},
                            {"y", x.y},
                            {"r", r},
                            {"kind", "almost_min_defect"},
                            {"value", rep.defect},
                            {"bound", rep.bound},
                            {"pass", rep.pass}});
            csv.rows.push_back({fd(x.x), fd(x.y), fd(r), fd(rep.defect), fd(rep.bound),
                                rep.pass ? "true" : "false"});
            ++made;
        }
    }
    std::ofstream jf(out_json);
    jf << rows.dump(2) << "\n";
    csv.write(out_csv);
}

void audit_classify(const RunData& rd, const AuditConfig& cfg, const std::string& out) {
    json rows = json::array();
    auto pts = audit_points(rd, cfg);
    const double h = rd.u.grid.spacing;
    for (int pi = 0; pi < int(pts.size()); ++pi) {
        double rmax = max_ball_radius(rd.u.grid, pts[pi], cfg.weiss_rmax);
        if (rmax < 8 * h) continue;
        auto ladder = default_ladder(rmax, 6 * h, cfg.ladder_gamma);
        json row;
        row["point"] = pi;
        row["x"] = pts[pi].x;
        row["y"] = pts[pi].y;
        try {
            Classification c = classify_point(rd.u, rd.weights, pts[pi], ladder, cfg.eps_gap);
            row["W0"] = c.W0;
            row["gap_ratio"] = c.gap_ratio;
            row["residual"] = c.fit_residual;
            row["label"] = c.label;
            row["pass"] = c.regular;
        } catch (const std::exception& e) {
            row["label"] = "error";
            row["reason"] = e.what();
            row["pass"] = false;
        }
        rows.push_back(row);
    }
    std::ofstream jf(out);
    jf << rows.dump(2) << "\n";
}

void audit_decay(const RunData& rd, const AuditConfig& cfg, const std::string& out) {
    Csv csv;
    csv.header = {"point", "r", "sigma", "ex", "ey", "floor", "above_floor", "improved", "drift",
                  "alpha_tilde", "truncated"};
    auto pts = audit_points(rd, cfg);
    for (int pi = 0; pi < int(pts.size()); ++pi) {
        double r0 = max_ball_radius(rd.u.grid, pts[pi], cfg.decay_r0);
        if (r0 < 8 * rd.u.grid.spacing) continue;
        DecayReport rep;
        try {
            rep = decay_audit(rd.u, rd.weights, pts[pi], cfg.decay_theta, cfg.decay_eta, r0, 8,
                              cfg.n_dir);
        } catch (const std::exception&) {
            continue;
        }
        for (const auto& st : rep.steps)
            csv.rows.push_back({std::to_string(pi), fd(st.r), fd(st.sigma), fd(st.direction.x),
                                fd(st.direction.y), fd(st.floor),
                                st.above_floor ? "true" : "false",
                                st.improved ? "true" : "false", fd(st.drift),
                                rep.alpha_measurable ? fd(rep.alpha_tilde) : "",
                                rep.truncated ? "true" : "false"});
    }
    csv.write(out);
}

int cmd_solve(const std::string& spec_path, const std::string& out_dir,
              const std::string& config_path) {
    std::ifstream in(spec_path);
    if (!in) {
        std::cerr << "error: cannot open spec " << spec_path << "\n";
        return kExitInput;
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ProblemSpec spec;
    try {
        spec = ProblemSpec::from_json(text);
    } catch (const std::exception& e) {
        std::cerr << "error: invalid spec: " << e.what() << "\n";
        return kExitInput;
    }
    AuditConfig cfg;
    try {
        cfg = AuditConfig::load(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    fs::create_directories(out_dir);
    auto t0 = std::chrono::steady_clock::now();
    SolveConfig scfg;
    SolveResult res = minimize(spec, scfg);
    auto t1 = std::chrono::steady_clock::now();

    // spec echo makes the run directory self-describing
    {
        std::ofstream sf(fs::path(out_dir) / "spec.json");
        sf << spec.to_json() << "\n";
    }
    write_field(res.u, out_dir + "/u");
    FreeBoundary fb = extract_boundary(res.u);
    write_boundary_csv(fb, out_dir + "/boundary.csv");
    {
        Csv trace;
        trace.header = {"stage", "iteration", "eps", "energy"};
        for (const auto& row : res.energy_trace)
            trace.rows.push_back({std::to_string(row.stage), std::to_string(row.iteration),
                                  fd(row.eps), fd(row.energy)});
        trace.write(out_dir + "/trace.csv");
    }
    {
        json r;
        r["schema"] = "fblab-result-1";
        r["sharp_energy"] = res.sharp_energy;
        r["converged"] = res.converged;
        r["iterations"] = res.iterations;
        r["kappa"] = res.amp.kappa;
        r["alpha"] = res.amp.alpha;
        std::ofstream rf(fs::path(out_dir) / "result.json");
        rf << r.dump(2) << "\n";
    }
    auto t2 = std::chrono::steady_clock::now();

    RunManifest man;
    man.tool_version = kToolVersion;
    man.spec_hash = hex64(fnv64_bytes(text.data(), text.size()));
    std::string cfg_text = cfg.to_json().dump();
    man.config_hash = hex64(fnv64_bytes(cfg_text.data(), cfg_text.size()));
    man.seed = spec.seed;
    for (const char* name :
         {"spec.json", "u.json", "u.raw", "boundary.csv", "trace.csv", "result.json"})
        man.add_artifact(out_dir, name);
    man.wall_clock["solve"] = std::chrono::duration<double>(t1 - t0).count();
    man.wall_clock["extract"] = std::chrono::duration<double>(t2 - t1).count();
    man.write(out_dir + "/manifest.json");
    if (!res.converged) std::cerr << "warning: solver did not converge; see result.json\n";
    return kExitOk;
}

int cmd_audit(const std::string& run_dir, const std::string& which, const std::string& out_dir,
              const std::string& config_path) {
    if (!fs::exists(fs::path(run_dir) / "manifest.json")) {
        std::cerr << "error: " << run_dir << " has no manifest.json\n";
        return kExitMissing;
    }
    AuditConfig cfg;
    RunData rd;
    try {
        cfg = AuditConfig::load(config_path);
        rd = load_run(run_dir);
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    fs::create_directories(out_dir);
    RunManifest man;
    man.tool_version = kToolVersion;
    std::string cfg_text = cfg.to_json().dump();
    man.config_hash = hex64(fnv64_bytes(cfg_text.data(), cfg_text.size()));
    man.seed = cfg.seed;
    auto stage = [&](const std::string& name, auto&& fn) {
        auto a = std::chrono::steady_clock::now();
        fn();
        auto b = std::chrono::steady_clock::now();
        man.wall_clock[name] = std::chrono::duration<double>(b - a).count();
    };
    bool all = which == "all";
    if (all || which == "weiss")
        stage("weiss", [&] {
            audit_weiss(rd, cfg, out_dir + "/weiss.csv");
            man.add_artifact(out_dir, "weiss.csv");
        });
    if (all || which == "acf")
        stage("acf", [&] {
            audit_acf(rd, cfg, out_dir + "/acf.csv");
            man.add_artifact(out_dir, "acf.csv");
        });
    if (all || which == "nta")
        stage("nta", [&] {
            audit_nta(rd, cfg, out_dir + "/nta.json", out_dir + "/nta.csv");
            man.add_artifact(out_dir, "nta.json");
            man.add_artifact(out_dir, "nta.csv");
        });
    if (all || which == "ahlfors")
        stage("ahlfors", [&] {
            audit_ahlfors(rd, cfg, out_dir + "/ahlfors.csv");
            man.add_artifact(out_dir, "ahlfors.csv");
        });
    if (all || which == "amin")
        stage("amin", [&] {
            audit_amin(rd, cfg, out_dir + "/amin.json", out_dir + "/amin.csv");
            man.add_artifact(out_dir, "amin.json");
            man.add_artifact(out_dir, "amin.csv");
        });
    if (all || which == "classify")
        stage("classify", [&] {
            audit_classify(rd, cfg, out_dir + "/classify.json");
            man.add_artifact(out_dir, "classify.json");
        });
    if (all || which == "decay")
        stage("decay", [&] {
            audit_decay(rd, cfg, out_dir + "/decay.csv");
            man.add_artifact(out_dir, "decay.csv");
        });
    man.write(out_dir + "/audit_manifest.json");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"free-boundary laboratory"};
    app.require_subcommand(1);

    std::string spec_path, run_dir, out_path, config_path, which = "all";
    std::string field_path, weights_path, point_str, ladder_str;
    double rmax = 0.4;

    auto* solve = app.add_subcommand("solve", "minimize a problem spec into a run directory");
    solve->add_option("--spec", spec_path)->required();
    solve->add_option("--out", out_path)->required();
    solve->add_option("--config", config_path);

    auto* audit = app.add_subcommand("audit", "run audits over a solved run");
    audit->add_option("--run", run_dir)->required();
    audit->add_option("--which", which)
        ->check(CLI::IsMember({"all", "weiss", "acf", "nta", "ahlfors", "amin", "classify",
                               "decay"}));
    audit->add_option("--out", out_path)->required();
    audit->add_option("--config", config_path);

    auto* weiss_cmd = app.add_subcommand("weiss", "Weiss ladder at one point");
    weiss_cmd->add_option("--field", field_path)->required();
    weiss_cmd->add_option("--weights", weights_path)->required();
    weiss_cmd->add_option("--point", point_str)->required();
    weiss_cmd->add_option("--rmax", rmax);
    weiss_cmd->add_option("--out", out_path)->required();
    weiss_cmd->add_option("--config", config_path);

    auto* flat_cmd = app.add_subcommand("flatness", "flatness decay ladder over a run");
    flat_cmd->add_option("--run", run_dir)->required();
    flat_cmd->add_option("--ladder", ladder_str, "eta,theta,r0");
    flat_cmd->add_option("--out", out_path)->required();
    flat_cmd->add_option("--config", config_path);

    auto* cls_cmd = app.add_subcommand("classify", "classify audit points of a run");
    cls_cmd->add_option("--run", run_dir)->required();
    cls_cmd->add_option("--out", out_path)->required();
    cls_cmd->add_option("--config", config_path);

    auto* nta_cmd = app.add_subcommand("nta-report", "corkscrew and Harnack-chain audit");
    nta_cmd->add_option("--run", run_dir)->required();
    nta_cmd->add_option("--out", out_path)->required();
    nta_cmd->add_option("--config", config_path);

    auto* ahl_cmd = app.add_subcommand("ahlfors-report", "Ahlfors-ratio audit");
    ahl_cmd->add_option("--run", run_dir)->required();
    ahl_cmd->add_option("--out", out_path)->required();
    ahl_cmd->add_option("--config", config_path);

    auto* amin_cmd = app.add_subcommand("verify-amin", "almost-minimality audit");
    amin_cmd->add_option("--run", run_dir)->required();
    amin_cmd->add_option("--out", out_path)->required();
    amin_cmd->add_option("--config", config_path);

    auto* pgm_cmd = app.add_subcommand("export-pgm", "8-bit min-max scaled preview");
    pgm_cmd->add_option("--field", field_path)->required();
    pgm_cmd->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (solve->parsed()) return cmd_solve(spec_path, out_path, config_path);
        if (audit->parsed()) return cmd_audit(run_dir, which, out_path, config_path);
        if (weiss_cmd->parsed()) {
            ScalarField u = read_field(field_path);
            WeightField w;
            w.q_plus = read_field(weights_path);
            w.q_minus = ScalarField::sample(w.q_plus.grid, [](const Point&) { return 0.0; });
            w.c0 = *std::min_element(w.q_plus.values.begin(), w.q_plus.values.end());
            double px = 0, py = 0;
            if (std::sscanf(point_str.c_str(), "%lf,%lf", &px, &py) != 2) {
                std::cerr << "error: --point expects x,y\n";
                return kExitInput;
            }
            AuditConfig cfg = AuditConfig::load(config_path);
            auto ladder = default_ladder(rmax, 6 * u.grid.spacing, cfg.ladder_gamma);
            MonotoneAudit a =
                audit_monotone(u, w, AlmostMinParams{0, 1}, Point(px, py), ladder, cfg.tau_disc);
            Csv csv;
            csv.header = {"r", "W", "Wtilde", "dirichlet_part", "volume_part", "sphere_part",
                          "normal_part", "dissipation", "defect", "pass"};
            for (std::size_t k = 0; k < a.samples.size(); ++k) {
                const WeissSample& s = a.samples[k];
                double defect = k > 0 ? a.steps[k - 1].defect : 0.0;
                bool pass = k > 0 ? a.steps[k - 1].pass_drift : true;
                csv.rows.push_back({fd(s.r), fd(s.W), fd(s.W_tilde), fd(s.dirichlet_part),
                                    fd(s.volume_part), fd(s.sphere_part), fd(s.normal_part),
                                    fd(s.dissipation), fd(defect), pass ? "true" : "false"});
            }
            csv.write(out_path);
            return kExitOk;
        }
        if (flat_cmd->parsed()) {
            AuditConfig cfg = AuditConfig::load(config_path);
            if (!ladder_str.empty()) {
                double eta, theta, r0;
                if (std::sscanf(ladder_str.c_str(), "%lf,%lf,%lf", &eta, &theta, &r0) != 3) {
                    std::cerr << "error: --ladder expects eta,theta,r0\n";
                    return kExitInput;
                }
                cfg.decay_eta = eta;
                cfg.decay_theta = theta;
                cfg.decay_r0 = r0;
            }
            RunData rd = load_run(run_dir);
            audit_decay(rd, cfg, out_path);
            return kExitOk;
        }
        if (cls_cmd->parsed()) {
            AuditConfig cfg = AuditConfig::load(config_path);
            RunData rd = load_run(run_dir);
            audit_classify(rd, cfg, out_path);
            return kExitOk;
        }
        if (nta_cmd->parsed()) {
            AuditConfig cfg = AuditConfig::load(config_path);
            RunData rd = load_run(run_dir);
            audit_nta(rd, cfg, out_path,
                      out_path + (out_path.ends_with(".json") ? ".csv" : "_mirror.csv"));
            return kExitOk;
        }
        if (ahl_cmd->parsed()) {
            AuditConfig cfg = AuditConfig::load(config_path);
            RunData rd = load_run(run_dir);
            audit_ahlfors(rd, cfg, out_path);
            return kExitOk;
        }
        if (amin_cmd->parsed()) {
            AuditConfig cfg = AuditConfig::load(config_path);
            RunData rd = load_run(run_dir);
            audit_amin(rd, cfg, out_path,
                       out_path + (out_path.ends_with(".json") ? ".csv" : "_mirror.csv"));
            return kExitOk;
        }
        if (pgm_cmd->parsed()) {
            export_pgm(read_field(field_path), out_path);
            return kExitOk;
        }
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissing;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
