#include <doctest.h>

#include "fblab/problem.hpp"
#include "helpers.hpp"

using namespace fblab;
using namespace fblab::testing;

TEST_CASE("holder field generator") {
    Grid g = box(1.0, 129);
    ScalarField flat = make_holder_field(3, 1.0, 0.0, 0.5, g);
    for (double v : flat.values) CHECK(v == 1.0);

    ScalarField a = make_holder_field(7, 1.0, 0.2, 0.5, g);
    ScalarField b = make_holder_field(7, 1.0, 0.2, 0.5, g);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t k = 0; k < a.values.size(); ++k) CHECK(a.values[k] == b.values[k]);

    ScalarField c = make_holder_field(8, 1.0, 0.2, 0.5, g);
    bool differs = false;
    for (std::size_t k = 0; k < a.values.size(); ++k)
        if (a.values[k] != c.values[k]) differs = true;
    CHECK(differs);

    for (double v : a.values) {
        CHECK(v >= 0.999 * 0.8);
        CHECK(v <= 1.2 + 1e-12);
    }
    CHECK_THROWS_AS(make_holder_field(1, 1.0, 1.0, 0.5, g), std::invalid_argument);
}

TEST_CASE("empirical Holder seminorm is an upper bound over resampled pairs") {
    Grid g = box(1.0, 257);
    ScalarField q = make_holder_field(7, 1.0, 0.2, 0.5, g);
    double reported = holder_seminorm_estimate(q, 0.5, 0x5eed, 100000);
    double probe = holder_seminorm_estimate(q, 0.5, 12345, 100000);
    CHECK(probe <= 1.05 * reported);
    CHECK(reported > 0);
}

TEST_CASE("weight field validation") {
    Grid g = box(1.0, 65);
    WeightField w = make_constant_weights(g, 1.0, 0.0);
    CHECK_NOTHROW(w.validate());
    CHECK(!w.two_phase());

    WeightField bad = w;
    bad.q_plus.values[10] = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    WeightField tp = make_constant_weights(g, 1.0, 0.7);
    CHECK(tp.two_phase());
    CHECK_NOTHROW(tp.validate());
}

TEST_CASE("perturbed weights") {
    Grid g = box(1.0, 257);
    WeightField w = make_constant_weights(g, 1.0, 0.0);

    auto [same, amp0] = perturbed_weights(w, 11, 0.0, 0.5);
    CHECK(amp0.kappa == 0.0);
    for (std::size_t k = 0; k < w.q_plus.values.size(); ++k)
        CHECK(same.q_plus.values[k] == w.q_plus.values[k]);

    auto [pert, amp] = perturbed_weights(w, 11, 0.1, 0.5);
    CHECK(amp.kappa == doctest::Approx(std::pow(2.0, 2.5) * 0.1).epsilon(1e-12));
    CHECK(amp.alpha == 0.5);

    // q~^2 = q^2 (1+eps) with |eps| <= 1/2 and a mean-zero noise
    double mean_eps = 0;
    for (std::size_t k = 0; k < pert.q_plus.values.size(); ++k) {
        double eps = sqr(pert.q_plus.values[k]) / sqr(w.q_plus.values[k]) - 1.0;
        CHECK(std::abs(eps) <= 0.5 + 1e-12);
        mean_eps += eps;
    }
    mean_eps /= double(pert.q_plus.values.size());
    CHECK(std::abs(mean_eps) < 0.02);

    // the prescribed seminorm is realized empirically
    ScalarField eps_field = ScalarField::zeros(g);
    for (std::size_t k = 0; k < eps_field.values.size(); ++k)
        eps_field.values[k] = sqr(pert.q_plus.values[k]) - 1.0;
    double semi = holder_seminorm_estimate(eps_field, 0.5, 999, 100000);
    CHECK(semi == doctest::Approx(0.1).epsilon(0.15));

    // one-phase stays one-phase
    CHECK(!pert.two_phase());

    // two-phase ordering is preserved
    WeightField tp = make_constant_weights(g, 1.0, 0.5);
    auto [ptp, amp2] = perturbed_weights(tp, 5, 0.1, 0.5);
    for (std::size_t k = 0; k < ptp.q_plus.values.size(); ++k)
        CHECK(ptp.q_minus.values[k] <= ptp.q_plus.values[k] + 1e-14);
}

TEST_CASE("problem spec json round trip") {
    ProblemSpec s;
    s.grid = box(1.0, 129);
    s.qplus_spec = {WeightSpec::Kind::Constant, 1.0, 0, 1.0, 0.0, 1.0};
    s.phase = Phase::OnePhase;
    s.dirichlet.kind = DirichletSpec::Kind::HalfPlane;
    s.dirichlet.lambda_plus = 1.0;
    s.perturbation = HolderNoiseSpec{17, 0.1, 0.5};
    s.seed = 42;
    std::string text = s.to_json();
    ProblemSpec back = ProblemSpec::from_json(text);
    CHECK(back.grid.dims[0] == 129);
    CHECK(back.perturbation.has_value());
    CHECK(back.perturbation->lambda_pert == 0.1);
    CHECK(back.seed == 42);

    CHECK_THROWS_AS(ProblemSpec::from_json("{ not json"), std::invalid_argument);
    CHECK_THROWS_AS(ProblemSpec::from_json("{\"schema\":\"fblab-spec-1\"}"),
                    std::invalid_argument);
}

TEST_CASE("dirichlet data menu") {
    DirichletSpec hp;
    hp.kind = DirichletSpec::Kind::HalfPlane;
    hp.lambda_plus = 2.0;
    hp.center = Point(0, 0.25);
    CHECK(hp.eval({0.3, 0.75}) == doctest::Approx(1.0));
    CHECK(hp.eval({0.3, -0.75}) == 0.0);

    DirichletSpec tp;
    tp.kind = DirichletSpec::Kind::TwoPlane;
    tp.lambda_plus = 1.0;
    tp.lambda_minus = 1.0;
    CHECK(tp.eval({0.2, 0.3}) == doctest::Approx(0.3));
    CHECK(tp.eval({0.2, -0.3}) == doctest::Approx(-0.3));
}
