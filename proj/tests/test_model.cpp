#include <cmath>

#include "doctest.h"
#include "slq/errors.hpp"
#include "slq/model.hpp"
#include "support/corpus.hpp"

using namespace slq;
using corpus::mat;
using corpus::scalar;

TEST_SUITE("model") {

TEST_CASE("scalar1 passes validation with unit margins") {
    const auto r = validate_problem(corpus::scalar1());
    CHECK(r.ok);
    CHECK(r.generator_ok);
    REQUIRE(r.a3_margins.size() == 1);
    CHECK(r.a3_margins[0].r_min == doctest::Approx(1.0));
    CHECK(r.a3_margins[0].schur_min == doctest::Approx(1.0));
    CHECK(r.messages.empty());
}

TEST_CASE("negative R is reported against R") {
    const auto r = validate_problem(corpus::example31());
    CHECK_FALSE(r.ok);
    REQUIRE_FALSE(r.messages.empty());
    CHECK(r.messages.front().find("R(1) not positive definite") != std::string::npos);
    CHECK(r.a3_margins[0].r_min == doctest::Approx(-1.0));
}

TEST_CASE("generator checks name the offending row and entry") {
    auto p = corpus::tworeg();
    CHECK(validate_problem(p).generator_ok);

    LQProblem bad(p.dims(), p.coeffs(), p.cost(), {mat({{-1, 1.1}, {1, -1}})});
    auto r = validate_problem(bad);
    CHECK_FALSE(r.ok);
    CHECK_FALSE(r.generator_ok);
    REQUIRE(r.messages.size() == 1);
    CHECK(r.messages[0].find("row 1") != std::string::npos);

    LQProblem zero_rate(p.dims(), p.coeffs(), p.cost(), {mat({{0, 0}, {1, -1}})});
    r = validate_problem(zero_rate);
    CHECK_FALSE(r.generator_ok);
    CHECK(r.messages[0].find("(1,2)") != std::string::npos);
}

TEST_CASE("convexity margins") {
    auto margin = [](double q, double s, double rr) {
        return convexity_margin(scalar_problem(0, 1, 0, 0, q, s, rr).cost())[0];
    };
    CHECK(margin(1, 0, 1).r_min == doctest::Approx(1));
    CHECK(margin(1, 0, 1).schur_min == doctest::Approx(1));
    CHECK(margin(2, 1, 1).schur_min == doctest::Approx(1));
    CHECK(margin(1, 1, 1).schur_min == doctest::Approx(0).epsilon(1e-14));
    CHECK_FALSE(validate_problem(scalar_problem(0, 1, 0, 0, 1, 1, 1)).ok);

    const auto sing = scalar_problem(0, 1, 0, 0, 1, 0, 0);
    CHECK_THROWS_AS(convexity_margin(sing.cost()), NumericalError);
    const auto r = validate_problem(sing);
    CHECK_FALSE(r.ok);
    CHECK(std::isnan(r.a3_margins[0].schur_min));
}

TEST_CASE("structural errors on construction") {
    Dimensions d{2, 1, 1};
    RegimeCoefficients co{{Matrix::Zero(2, 2)}, {Matrix::Zero(2, 1)}, {Matrix::Zero(2, 2)}, {Matrix::Zero(2, 1)}};
    CostWeights cw{{Matrix::Identity(2, 2)}, {Matrix::Zero(1, 2)}, {scalar(1)}};
    CHECK_NOTHROW(LQProblem(d, co, cw, {scalar(0)}));

    auto bad = co;
    bad.A[0] = Matrix::Zero(3, 2);
    CHECK_THROWS_AS(LQProblem(d, bad, cw, {scalar(0)}), StructuralError);
    bad = co;
    bad.B.push_back(Matrix::Zero(2, 1));
    CHECK_THROWS_AS(LQProblem(d, bad, cw, {scalar(0)}), StructuralError);
    bad = co;
    bad.C[0](0, 1) = std::nan("");
    CHECK_THROWS_AS(LQProblem(d, bad, cw, {scalar(0)}), StructuralError);

    auto asym = cw;
    asym.Q[0](0, 1) = 1e-3;
    CHECK_THROWS_AS(LQProblem(d, co, asym, {scalar(0)}), StructuralError);
    asym.Q[0](0, 1) = 1e-14;
    const LQProblem ok(d, co, asym, {scalar(0)});
    CHECK(ok.Q(0)(0, 1) == ok.Q(0)(1, 0));

    CHECK_THROWS_AS(LQProblem(d, co, cw, {Matrix::Zero(2, 2)}), StructuralError);
    CHECK_THROWS_AS(LQProblem(Dimensions{0, 1, 1}, co, cw, {scalar(0)}), StructuralError);
}

TEST_CASE("feedback shift") {
    const auto p = corpus::scalar1();
    const auto same = apply_feedback_shift(p, zero_gains(p));
    CHECK(same.A(0)(0, 0) == 0.0);
    CHECK(same.Q(0)(0, 0) == 1.0);
    CHECK(same.S(0)(0, 0) == 0.0);
    const auto sh = apply_feedback_shift(p, {scalar(-1)});
    CHECK(sh.A(0)(0, 0) == doctest::Approx(-1));
    CHECK(sh.Q(0)(0, 0) == doctest::Approx(2));
    CHECK(sh.S(0)(0, 0) == doctest::Approx(-1));
    CHECK(sh.R(0)(0, 0) == 1.0);
    CHECK_THROWS_AS(apply_feedback_shift(p, {Matrix::Zero(2, 1)}), StructuralError);
}

TEST_CASE("property: Schur complement is invariant under feedback shifts") {
    corpus::Gen g(11);
    for (int trial = 0; trial < 30; ++trial) {
        const auto p = g.problem();
        const auto th = g.family(p.m(), p.n(), p.regimes(), 2.0);
        const auto q = apply_feedback_shift(p, th);
        for (std::size_t i = 0; i < p.regimes(); ++i) {
            const Matrix d = corpus::schur(q, i) - corpus::schur(p, i);
            CHECK(d.cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, corpus::schur(p, i).norm()));
        }
        const auto a = convexity_margin(p.cost()), b = convexity_margin(q.cost());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i].schur_min - b[i].schur_min) <= 1e-10);
    }
}

TEST_CASE("stage cost") {
    const auto p = corpus::scalar1();
    CHECK(stage_cost(p, Vector::Zero(1), 0, Vector::Zero(1)) == 0.0);
    CHECK(stage_cost(p, Vector::Constant(1, 2), 0, Vector::Constant(1, 3)) == doctest::Approx(6.5));
    const auto q = scalar_problem(0, 1, 0, 0, 1, 1, 1);
    CHECK(stage_cost(q, Vector::Ones(1), 0, Vector::Ones(1)) == doctest::Approx(2));
    CHECK_THROWS_AS(stage_cost(p, Vector::Zero(2), 0, Vector::Zero(1)), StructuralError);
    CHECK_THROWS_AS(stage_cost(p, Vector::Zero(1), 1, Vector::Zero(1)), StructuralError);
}

TEST_CASE("property: stage cost is bounded below by the joint convexity constant") {
    corpus::Gen g(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = g.problem();
        REQUIRE(uniform_convexity(p.cost()) > 0.0);
        for (std::size_t i = 0; i < p.regimes(); ++i) {
            Matrix J(p.n() + p.m(), p.n() + p.m());
            J << p.Q(i), p.S(i).transpose(), p.S(i), p.R(i);
            const double joint = min_eigenvalue(J);
            CHECK(joint > 0.0);
            for (int s = 0; s < 20; ++s) {
                const Vector x = g.vector(p.n()), u = g.vector(p.m());
                CHECK(stage_cost(p, x, i, u) >= 0.5 * joint * (x.squaredNorm() + u.squaredNorm()) - 1e-12);
            }
        }
    }
}

TEST_CASE("the smaller convexity margin alone is not a pointwise lower bound") {
    // Q=2, S=1, R=1: both margins equal 1, yet g(x, -x) = x²/2 < (x² + x²)/2
    const auto p = scalar_problem(0, 1, 0, 0, 2, 1, 1);
    CHECK(uniform_convexity(p.cost()) == doctest::Approx(1.0));
    CHECK(stage_cost(p, Vector::Ones(1), 0, -Vector::Ones(1)) == doctest::Approx(0.5));
}

TEST_CASE("validation is pure") {
    const auto p = corpus::mimo2();
    const auto a = validate_problem(p), b = validate_problem(p);
    CHECK(a.ok == b.ok);
    CHECK(a.messages == b.messages);
    for (std::size_t i = 0; i < a.a3_margins.size(); ++i) {
        CHECK(a.a3_margins[i].r_min == b.a3_margins[i].r_min);
        CHECK(a.a3_margins[i].schur_min == b.a3_margins[i].schur_min);
    }
}

}
