#include <cmath>

#include "doctest.h"
#include "slq/errors.hpp"
#include "slq/riccati.hpp"
#include "slq/stability.hpp"
#include "slq/symmetric.hpp"
#include "support/corpus.hpp"

using namespace slq;
using corpus::mat;
using corpus::scalar;

namespace {

double pairing(const MatrixFamily& sigma, const MatrixFamily& Y) {
    double s = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) s += (sigma[i] * Y[i]).trace();
    return s;
}

} // namespace

TEST_SUITE("stability") {

TEST_CASE("closed loop matrices") {
    const auto p = corpus::mimo2();
    const MatrixFamily theta{mat({{1.0, -2.0}}), mat({{0.5, 0.0}})};
    const auto cl = closed_loop(p, theta);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK((cl.A[i] - (p.A(i) + p.B(i) * theta[i])).isZero());
        CHECK((cl.C[i] - (p.C(i) + p.D(i) * theta[i])).isZero());
    }
    CHECK_THROWS_AS(closed_loop(p, {theta[0]}), StructuralError);
    CHECK_THROWS_AS(closed_loop(p, {scalar(1), scalar(1)}), StructuralError);
}

TEST_CASE("spectral abscissa closed forms") {
    CHECK(moment_spectral_abscissa(corpus::scalar1(), {scalar(-1)}) == doctest::Approx(-2.0));
    CHECK(moment_spectral_abscissa(corpus::scalar1(), {scalar(0)}) == doctest::Approx(0.0));
    const double th = -(std::sqrt(5.0) - 1.0) / 2.0;
    CHECK(moment_spectral_abscissa(corpus::scalar2(), {scalar(th)}) == doctest::Approx(2 * th + th * th));

    // scalar two-regime: diag(2a + c²) + Λᵀ
    const auto p = corpus::tworeg();
    const Matrix op = moment_operator(p, {scalar(-1), scalar(-0.5)});
    const Matrix want = mat({{-2.0 - 1.0, 1.0}, {1.0, -3.0 - 1.0}});
    CHECK((op - want).cwiseAbs().maxCoeff() <= 1e-14);
    const double ev = (-7.0 + std::sqrt(1.0 + 4.0)) / 2.0;
    CHECK(moment_spectral_abscissa(p, {scalar(-1), scalar(-0.5)}) == doctest::Approx(ev));
}

TEST_CASE("dissipativity certificates") {
    const auto p = corpus::scalar1();
    const DissipativityCertificate good{{scalar(1.0)}, 1.0};
    const auto v = check_dissipativity(p, {scalar(-1)}, good);
    CHECK(v.valid);
    CHECK(v.slack[0] == doctest::Approx(1.0));
    CHECK_FALSE(check_dissipativity(p, {scalar(-1)}, {{scalar(1.0)}, 3.0}).valid);
    CHECK_FALSE(check_dissipativity(p, {{scalar(1.0)}, 0.1}).valid); // open loop A = 0
    CHECK_THROWS_AS(check_dissipativity(p, {scalar(-1)}, {{scalar(-1.0)}, 1.0}), StructuralError);
}

TEST_CASE("stationary gain certifies itself through P_inf") {
    // quadratic_generator(Θ∞, P∞) = −(Q + ΘᵀS + SᵀΘ + ΘᵀRΘ) is the ARE in closed-loop form
    for (const auto& inst : corpus::all()) {
        CAPTURE(inst.name);
        const auto& p = inst.problem;
        const auto a = solve_are(p);
        const auto G = quadratic_generator(p, a.theta, a.P);
        for (std::size_t i = 0; i < p.regimes(); ++i) {
            const Matrix& T = a.theta[i];
            const Matrix cost = p.Q(i) + T.transpose() * p.S(i) + p.S(i).transpose() * T + T.transpose() * p.R(i) * T;
            CHECK((G[i] + cost).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
}

TEST_CASE("property: moment_rhs is the adjoint of quadratic_generator") {
    corpus::Gen g(51);
    for (int trial = 0; trial < 40; ++trial) {
        const auto p = g.problem(g.index(1, 3), g.index(1, 2), g.index(1, 3), trial % 2 == 0);
        const auto theta = g.family(p.m(), p.n(), p.regimes());
        MatrixFamily sigma, Y;
        for (std::size_t i = 0; i < p.regimes(); ++i) {
            sigma.push_back(g.symmetric(p.n()));
            Y.push_back(g.symmetric(p.n()));
        }
        const double lhs = pairing(sigma, moment_rhs(p, theta, Y));
        const double rhs = pairing(quadratic_generator(p, theta, sigma), Y);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("moment ODE closed form, single regime") {
    const auto p = scalar_problem(-0.3, 1.0, 0.4, 0.2, 1, 0, 1);
    const double th = -0.5, a = -0.3 + th, c = 0.4 + 0.2 * th;
    const auto traj = propagate_second_moment(p, GainSchedule::constant({scalar(th)}),
                                              point_mass_moment(Vector::Constant(1, 2.0), 0, 1),
                                              uniform_grid(0.0, 3.0, 31), 1e-11);
    REQUIRE(traj.size() == 31);
    for (const auto& st : traj) CHECK(st.mean_square() == doctest::Approx(4.0 * std::exp((2 * a + c * c) * st.t)).epsilon(1e-9));
}

TEST_CASE("moment trajectories stay PSD and decay under the stationary gain") {
    for (const auto& inst : corpus::all()) {
        CAPTURE(inst.name);
        const auto& p = inst.problem;
        const auto a = solve_are(p);
        const auto traj = propagate_second_moment(p, GainSchedule::constant(a.theta),
                                                  point_mass_moment(inst.x, 0, p.regimes()),
                                                  uniform_grid(0.0, 20.0, 41), 1e-10);
        for (const auto& st : traj)
            for (const auto& Yi : st.Y) CHECK(min_eigenvalue(Yi) >= -1e-10);
        CHECK(traj.back().mean_square() < 1e-3 * traj.front().mean_square());
        // tail decay rate is the spectral abscissa
        const double slope = std::log(traj.back().mean_square() / traj[30].mean_square()) / (traj.back().t - traj[30].t);
        CHECK(slope == doctest::Approx(a.closed_loop_rate).epsilon(0.05));
    }
}

TEST_CASE("input checks") {
    const auto p = corpus::tworeg();
    CHECK_THROWS_AS(point_mass_moment(Vector::Ones(1), 2, 2), StructuralError);
    CHECK_THROWS_AS(propagate_second_moment(p, GainSchedule::constant({scalar(0), scalar(0)}),
                                            point_mass_moment(Vector::Ones(1), 0, 2), {1.0, 0.5}, 1e-8),
                    StructuralError);
    SecondMomentState bad{0.0, {scalar(-1), scalar(0)}};
    CHECK_THROWS_AS(propagate_second_moment(p, GainSchedule::constant({scalar(0), scalar(0)}), bad, {0.0, 1.0}, 1e-8),
                    StructuralError);
}

TEST_CASE("duality: d/dt Σ tr(ΣY) equals Σ tr(quadratic_generator(Σ) Y) on tworeg") {
    const auto p = corpus::tworeg();
    const auto a = solve_are(p);
    const MatrixFamily sigma{scalar(1.3), scalar(0.4)};
    const double h = 1e-4;
    std::vector<double> grid;
    for (int k = 0; k < 20; ++k) {
        const double s = 0.25 + 0.2 * k;
        grid.insert(grid.end(), {s - h, s, s + h});
    }
    const auto traj = propagate_second_moment(p, GainSchedule::constant(a.theta),
                                              point_mass_moment(Vector::Ones(1), 0, 2), grid, 1e-12);
    const auto G = quadratic_generator(p, a.theta, sigma);
    for (int k = 0; k < 20; ++k) {
        const double fd = (pairing(sigma, traj[3 * k + 2].Y) - pairing(sigma, traj[3 * k].Y)) / (2 * h);
        const double exact = pairing(G, traj[3 * k + 1].Y);
        CAPTURE(traj[3 * k + 1].t);
        CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
    }
}

}
