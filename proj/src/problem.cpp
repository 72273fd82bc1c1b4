#include "fblab/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

namespace fblab {

bool WeightField::two_phase() const {
    for (double v : q_minus.values)
        if (v != 0.0) return true;
    return false;
}

void WeightField::validate(std::uint64_t pair_seed, int n_pairs) const {
    q_plus.validate_finite();
    q_minus.validate_finite();
    for (double v : q_plus.values)
        if (v < c0) throw std::invalid_argument("q_plus drops below c0");
    bool tp = two_phase();
    if (tp) {
        bool above = true, between = true;
        for (std::size_t i = 0; i < q_minus.values.size(); ++i) {
            if (q_minus.values[i] < c0) above = false;
            if (q_minus.values[i] < 0 || q_minus.values[i] > q_plus.values[i]) between = false;
        }
        if (!above && !between)
            throw std::invalid_argument("q_minus violates the two-phase ordering hypotheses");
    }
    if (holder_seminorm > 0) {
        double emp = holder_seminorm_estimate(q_plus, alpha, pair_seed, n_pairs);
        if (emp > 1.05 * holder_seminorm)
            throw std::invalid_argument("empirical Holder quotient exceeds 1.05 * seminorm");
    }
}

double DirichletSpec::eval(const Point& p) const {
    switch (kind) {
        case Kind::HalfPlane: {
            double d = dot(p - center, normal);
            return lambda_plus * std::max(d, 0.0);
        }
        case Kind::TwoPlane: {
            double d = dot(p - center, normal);
            return lambda_plus * std::max(d, 0.0) - lambda_minus * std::max(-d, 0.0);
        }
        case Kind::Tabulated:
            throw std::logic_error("tabulated trace is evaluated per boundary node, not per point");
    }
    return 0;
}

namespace {

struct WeierstrassNoise {
    std::vector<double> cx, cy, phase, weight;
    double wsum = 0;

    WeierstrassNoise(std::uint64_t seed, double alpha, int K) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uni(0.0, 2 * M_PI);
        for (int k = 0; k <= K; ++k) {
            double th = uni(rng);
            double ph = uni(rng);
            double w = std::pow(2.0, -alpha * k);
            double freq = std::pow(2.0, k);
            cx.push_back(freq * std::cos(th));
            cy.push_back(freq * std::sin(th));
            phase.push_back(ph);
            weight.push_back(w);
            wsum += w;
        }
    }
    // normalized to [-1, 1]
    double operator()(const Point& p) const {
        double acc = 0;
        for (std::size_t k = 0; k < weight.size(); ++k)
            acc += weight[k] * std::cos(cx[k] * p.x + cy[k] * p.y + phase[k]);
        return acc / wsum;
    }
};

int octave_count(const Grid& g) {
    double L = std::max(g.extent(0), g.extent(1));
    return std::max(1, int(std::ceil(std::log2(L / g.spacing))));
}

}  // namespace

ScalarField make_holder_field(std::uint64_t seed, double c0, double amplitude, double alpha,
                              const Grid& grid) {
    if (amplitude >= c0) throw std::invalid_argument("amplitude must stay below c0");
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("alpha must lie in (0,1]");
    if (amplitude == 0.0) return ScalarField::sample(grid, [&](const Point&) { return c0; });
    WeierstrassNoise noise(seed, alpha, octave_count(grid));
    double floor = 0.999 * (c0 - amplitude);
    return ScalarField::sample(grid, [&](const Point& p) {
        return std::max(c0 + amplitude * noise(p), floor);
    });
}

double holder_seminorm_estimate(const ScalarField& f, double alpha, std::uint64_t seed,
                                int n_pairs) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> di(0, f.grid.dims[0] - 1), dj(0, f.grid.dims[1] - 1);
    double best = 0;
    for (int t = 0; t < n_pairs; ++t) {
        int i0 = di(rng), j0 = dj(rng), i1 = di(rng), j1 = dj(rng);
        if (i0 == i1 && j0 == j1) continue;
        double dist = f.grid.spacing * std::sqrt(sqr(double(i0 - i1)) + sqr(double(j0 - j1)));
        double q = std::abs(f.at(i0, j0) - f.at(i1, j1)) / std::pow(dist, alpha);
        best = std::max(best, q);
    }
    return best;
}

std::pair<WeightField, AlmostMinParams> perturbed_weights(const WeightField& w,
                                                          std::uint64_t seed, double lambda_pert,
                                                          double alpha) {
    if (lambda_pert < 0) throw std::invalid_argument("lambda_pert must be >= 0");
    if (lambda_pert == 0.0) return {w, AlmostMinParams{0.0, alpha}};
    WeierstrassNoise noise(seed, alpha, octave_count(w.q_plus.grid));
    ScalarField raw = ScalarField::sample(w.q_plus.grid, [&](const Point& p) { return noise(p); });
    double mean = 0;
    for (double v : raw.values) mean += v;
    mean /= double(raw.values.size());
    for (double& v : raw.values) v -= mean;
    double measured = holder_seminorm_estimate(raw, alpha, seed ^ 0x9e3779b97f4a7c15ull, 100000);
    if (measured <= 0) throw std::runtime_error("degenerate perturbation noise");
    double scale = lambda_pert / measured;
    WeightField out = w;
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        double eps = std::clamp(scale * raw.values[i], -0.5, 0.5);
        double fac = std::sqrt(1.0 + eps);
        out.q_plus.values[i] = w.q_plus.values[i] * fac;
        if (w.q_minus.values[i] != 0.0) out.q_minus.values[i] = w.q_minus.values[i] * fac;
    }
    // q may dip below the old c0 by the perturbation factor
    out.c0 = w.c0 * std::sqrt(0.5);
    for (double v : out.q_plus.values) out.c0 = std::min(out.c0, v);
    AlmostMinParams amp;
    amp.alpha = alpha;
    amp.kappa = std::pow(2.0, alpha + 2.0) * lambda_pert;
    return {out, amp};
}

WeightField make_constant_weights(const Grid& g, double lambda_plus, double lambda_minus) {
    WeightField w;
    w.q_plus = ScalarField::sample(g, [&](const Point&) { return lambda_plus; });
    w.q_minus = ScalarField::sample(g, [&](const Point&) { return lambda_minus; });
    w.c0 = lambda_plus;
    w.alpha = 1.0;
    w.holder_seminorm = 0.0;
    return w;
}

void ProblemSpec::validate() const {
    grid.validate();
    if (grid.rank != 2) throw std::invalid_argument("solver problems are rank 2");
    if (qplus_spec.kind == WeightSpec::Kind::Holder && qplus_spec.amplitude >= qplus_spec.c0)
        throw std::invalid_argument("holder weight amplitude must stay below c0");
    if (phase == Phase::OnePhase) {
        if (dirichlet.kind == DirichletSpec::Kind::TwoPlane && dirichlet.lambda_minus != 0)
            throw std::invalid_argument("one-phase boundary data must be nonnegative");
        if (dirichlet.kind == DirichletSpec::Kind::Tabulated)
            for (double v : dirichlet.table)
                if (v < 0) throw std::invalid_argument("one-phase boundary data must be nonnegative");
    }
    if (dirichlet.kind == DirichletSpec::Kind::Tabulated) {
        std::size_t need = 2 * std::size_t(grid.dims[0]) + 2 * std::size_t(grid.dims[1]) - 4;
        if (dirichlet.table.size() != need)
            throw std::invalid_argument("tabulated trace length does not match grid boundary");
    }
}

WeightField ProblemSpec::build_weights() const {
    WeightField w;
    auto build = [&](const WeightSpec& s) {
        if (s.kind == WeightSpec::Kind::Constant)
            return ScalarField::sample(grid, [&](const Point&) { return s.value; });
        return make_holder_field(s.seed, s.c0, s.amplitude, s.alpha, grid);
    };
    w.q_plus = build(qplus_spec);
    w.q_minus = (phase == Phase::TwoPhase)
                    ? build(qminus_spec)
                    : ScalarField::sample(grid, [](const Point&) { return 0.0; });
    if (qplus_spec.kind == WeightSpec::Kind::Constant) {
        w.c0 = qplus_spec.value;
        w.alpha = 1.0;
        w.holder_seminorm = 0.0;
    } else {
        w.c0 = qplus_spec.c0 - qplus_spec.amplitude;
        w.alpha = qplus_spec.alpha;
        w.holder_seminorm =
            holder_seminorm_estimate(w.q_plus, qplus_spec.alpha, qplus_spec.seed ^ 0x5eedull,
                                     100000);
    }
    if (phase == Phase::TwoPhase && qminus_spec.kind == WeightSpec::Kind::Constant)
        w.c0 = std::min(w.c0, qminus_spec.value > 0 ? qminus_spec.value : w.c0);
    return w;
}

namespace {

nlohmann::json weight_to_json(const WeightSpec& s) {
    nlohmann::json j;
    if (s.kind == WeightSpec::Kind::Constant) {
        j["kind"] = "constant";
        j["value"] = s.value;
    } else {
        j["kind"] = "holder";
        j["seed"] = s.seed;
        j["c0"] = s.c0;
        j["amplitude"] = s.amplitude;
        j["alpha"] = s.alpha;
    }
    return j;
}

WeightSpec weight_from_json(const nlohmann::json& j) {
    WeightSpec s;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        s.kind = WeightSpec::Kind::Constant;
        s.value = j.at("value").get<double>();
    } else if (kind == "holder") {
        s.kind = WeightSpec::Kind::Holder;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.c0 = j.at("c0").get<double>();
        s.amplitude = j.at("amplitude").get<double>();
        s.alpha = j.at("alpha").get<double>();
    } else {
        throw std::invalid_argument("unknown weight kind '" + kind + "'");
    }
    return s;
}

}  // namespace

std::string ProblemSpec::to_json() const {
    nlohmann::json j;
    j["schema"] = "fblab-spec-1";
    j["grid"] = {{"origin", {grid.origin.x, grid.origin.y}},
                 {"spacing", grid.spacing},
                 {"dims", {grid.dims[0], grid.dims[1]}}};
    j["qplus"] = weight_to_json(qplus_spec);
    j["qminus"] = weight_to_json(qminus_spec);
    j["phase"] = phase == Phase::OnePhase ? "one-phase" : "two-phase";
    nlohmann::json d;
    switch (dirichlet.kind) {
        case DirichletSpec::Kind::HalfPlane:
            d["kind"] = "half-plane";
            d["lambda"] = dirichlet.lambda_plus;
            d["center"] = {dirichlet.center.x, dirichlet.center.y};
            d["normal"] = {dirichlet.normal.x, dirichlet.normal.y};
            break;
        case DirichletSpec::Kind::TwoPlane:
            d["kind"] = "two-plane";
            d["lambda_plus"] = dirichlet.lambda_plus;
            d["lambda_minus"] = dirichlet.lambda_minus;
            d["center"] = {dirichlet.center.x, dirichlet.center.y};
            d["normal"] = {dirichlet.normal.x, dirichlet.normal.y};
            break;
        case DirichletSpec::Kind::Tabulated:
            d["kind"] = "tabulated";
            d["table"] = dirichlet.table;
            break;
    }
    j["dirichlet"] = d;
    if (perturbation) {
        j["perturbation"] = {{"seed", perturbation->seed},
                             {"lambda_pert", perturbation->lambda_pert},
                             {"alpha", perturbation->alpha}};
    }
    j["seed"] = seed;
    return j.dump(2);
}

ProblemSpec ProblemSpec::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("spec JSON parse error: ") + e.what());
    }
    ProblemSpec s;
    try {
        auto jg = j.at("grid");
        auto o = jg.at("origin").get<std::vector<double>>();
        auto d = jg.at("dims").get<std::vector<int>>();
        s.grid.origin = Point(o.at(0), o.at(1));
        s.grid.spacing = jg.at("spacing").get<double>();
        s.grid.dims = {d.at(0), d.at(1), 1};
        s.grid.rank = 2;
        s.qplus_spec = weight_from_json(j.at("qplus"));
        if (j.contains("qminus")) s.qminus_spec = weight_from_json(j.at("qminus"));
        std::string ph = j.at("phase").get<std::string>();
        if (ph == "one-phase")
            s.phase = Phase::OnePhase;
        else if (ph == "two-phase")
            s.phase = Phase::TwoPhase;
        else
            throw std::invalid_argument("unknown phase '" + ph + "'");
        auto jd = j.at("dirichlet");
        std::string kind = jd.at("kind").get<std::string>();
        if (kind == "half-plane") {
            s.dirichlet.kind = DirichletSpec::Kind::HalfPlane;
            s.dirichlet.lambda_plus = jd.at("lambda").get<double>();
        } else if (kind == "two-plane") {
            s.dirichlet.kind = DirichletSpec::Kind::TwoPlane;
            s.dirichlet.lambda_plus = jd.at("lambda_plus").get<double>();
            s.dirichlet.lambda_minus = jd.at("lambda_minus").get<double>();
        } else if (kind == "tabulated") {
            s.dirichlet.kind = DirichletSpec::Kind::Tabulated;
            s.dirichlet.table = jd.at("table").get<std::vector<double>>();
        } else {
            throw std::invalid_argument("unknown dirichlet kind '" + kind + "'");
        }
        if (kind != "tabulated") {
            if (jd.contains("center")) {
                auto c = jd.at("center").get<std::vector<double>>();
                s.dirichlet.center = Point(c.at(0), c.at(1));
            }
            if (jd.contains("normal")) {
                auto n = jd.at("normal").get<std::vector<double>>();
                Point nu(n.at(0), n.at(1));
                double nn = norm(nu);
                if (!(nn > 0)) throw std::invalid_argument("dirichlet normal must be nonzero");
                s.dirichlet.normal = nu * (1.0 / nn);
            }
        }
        if (j.contains("perturbation") && !j.at("perturbation").is_null()) {
            HolderNoiseSpec p;
            p.seed = j.at("perturbation").at("seed").get<std::uint64_t>();
            p.lambda_pert = j.at("perturbation").at("lambda_pert").get<double>();
            p.alpha = j.at("perturbation").at("alpha").get<double>();
            s.perturbation = p;
        }
        if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::out_of_range& e) {
        throw std::invalid_argument(std::string("spec JSON missing key: ") + e.what());
    } catch (const nlohmann::json::type_error& e) {
        throw std::invalid_argument(std::string("spec JSON bad type: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace fblab
