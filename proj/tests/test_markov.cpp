#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <set>

#include "doctest.h"
#include "slq/errors.hpp"
#include "slq/markov.hpp"
#include "support/corpus.hpp"

using namespace slq;
using corpus::mat;
using corpus::scalar;

namespace {

const SwitchingGenerator kTwoThree{mat({{-2, 2}, {3, -3}})};

double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected) {
    double stat = 0.0;
    std::size_t df = 0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        if (expected[k] <= 0.0) continue;
        stat += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
        ++df;
    }
    if (df < 2) return 1.0;
    boost::math::chi_squared dist(static_cast<double>(df - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

} // namespace

TEST_SUITE("markov") {

TEST_CASE("lambda_apply") {
    const SwitchingGenerator one{scalar(0)};
    CHECK(lambda_apply(one, {Matrix::Identity(2, 2)})[0].isZero());

    const SwitchingGenerator sym{mat({{-1, 1}, {1, -1}})};
    const Matrix s1 = mat({{1, 2}, {2, 5}}), s2 = mat({{3, 0}, {0, 1}});
    const auto out = lambda_apply(sym, {s1, s2});
    CHECK((out[0] - (s2 - s1)).isZero());
    CHECK((out[1] - (s1 - s2)).isZero());
}

TEST_CASE("property: lambda_apply is linear and annihilates constant families") {
    corpus::Gen g(21);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m0 = g.index(1, 4), n = g.index(1, 3);
        const SwitchingGenerator gen{g.generator(m0)};
        MatrixFamily a, b, c;
        const Matrix k = g.symmetric(n);
        for (std::size_t i = 0; i < m0; ++i) {
            a.push_back(g.symmetric(n));
            b.push_back(g.symmetric(n));
            c.push_back(k);
        }
        const double alpha = g.normal();
        MatrixFamily comb;
        for (std::size_t i = 0; i < m0; ++i) comb.push_back(a[i] + alpha * b[i]);
        const auto la = lambda_apply(gen, a), lb = lambda_apply(gen, b), lc = lambda_apply(gen, comb);
        const auto lk = lambda_apply(gen, c);
        for (std::size_t i = 0; i < m0; ++i) {
            CHECK((lc[i] - la[i] - alpha * lb[i]).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(lk[i].cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, k.norm()) * 10);
            CHECK((la[i] - la[i].transpose()).isZero());
        }
    }
}

TEST_CASE("seeding") {
    CHECK(splitmix64(1) != splitmix64(2));
    CHECK(derive_seed(7, 0) == derive_seed(7, 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(derive_seed(42, k));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(derive_seed(42, 3), kChainStream) != derive_seed(derive_seed(42, 3), kBrownianStream));
}

TEST_CASE("chain paths: structure and determinism") {
    const SwitchingGenerator one{scalar(0)};
    CHECK(sample_chain_path(one, 0, 0.0, 10.0, 1).jumps() == 0);

    const SwitchingGenerator three{mat({{-1, 0.5, 0.5}, {2, -3, 1}, {0.1, 0.2, -0.3}})};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto path = sample_chain_path(three, seed % 3, 1.0, 6.0, seed);
        REQUIRE(path.states.size() == path.jump_times.size() + 1);
        for (std::size_t k = 0; k < path.jumps(); ++k) {
            CHECK(path.jump_times[k] > 1.0);
            CHECK(path.jump_times[k] <= 6.0);
            if (k > 0) CHECK(path.jump_times[k] > path.jump_times[k - 1]);
            CHECK(path.states[k + 1] != path.states[k]);
            CHECK(path.state_at(path.jump_times[k]) == path.states[k + 1]);
        }
        CHECK(path.state_at(1.0) == seed % 3);
    }
    const auto a = sample_chain_path(three, 1, 0.0, 20.0, 99), b = sample_chain_path(three, 1, 0.0, 20.0, 99);
    CHECK(a.jump_times == b.jump_times);
    CHECK(a.states == b.states);

    const SwitchingGenerator absorbing{mat({{0, 0}, {1, -1}})};
    CHECK(sample_chain_path(absorbing, 0, 0.0, 100.0, 5).jumps() == 0);
    CHECK_THROWS_AS(sample_chain_path(three, 0, 1.0, 1.0, 1), StructuralError);
    CHECK_THROWS_AS(sample_chain_path(three, 3, 0.0, 1.0, 1), StructuralError);
}

TEST_CASE("mean holding time in regime 1 is 1/2") {
    // first exit from regime 1 on independent paths: exact Exp(2) draws, no censoring
    const std::size_t N = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        const auto path = sample_chain_path(kTwoThree, 0, 0.0, 20.0, derive_seed(2024, k));
        REQUIRE(path.jumps() > 0);
        const double h = path.jump_times[0];
        sum += h;
        sumsq += h * h;
    }
    const double mean = sum / N;
    const double se = std::sqrt((sumsq / N - mean * mean) / N);
    CHECK(std::abs(mean - 0.5) <= 3.0 * se);
}

TEST_CASE("occupation of regime 1 approaches 3/5") {
    const std::size_t N = 100000;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < N; ++k) hits += sample_chain_path(kTwoThree, k % 2, 0.0, 20.0, derive_seed(5, k)).state_at(20.0) == 0;
    const double p = static_cast<double>(hits) / N;
    const double se = std::sqrt(0.6 * 0.4 / N);
    CHECK(std::abs(p - 0.6) <= 3.0 * se);
}

TEST_CASE("sampler matches the transition matrix (chi-square)") {
    const std::size_t N = 100000;
    for (double t : {0.1, 1.0, 5.0}) {
        const Matrix P = transition_matrix(kTwoThree, t);
        for (std::size_t start = 0; start < 2; ++start) {
            std::vector<double> obs(2, 0.0), exp(2, 0.0);
            for (std::size_t k = 0; k < N; ++k) {
                obs[sample_chain_path(kTwoThree, start, 0.0, t, derive_seed(77 + start, k)).state_at(t)] += 1.0;
            }
            for (std::size_t j = 0; j < 2; ++j) exp[j] = N * P(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(j));
            CAPTURE(t);
            CAPTURE(start);
            CHECK(chi_square_p(obs, exp) > 0.001);
        }
    }
}

TEST_CASE("transition matrix") {
    const SwitchingGenerator sym{mat({{-1, 1}, {1, -1}})};
    CHECK(transition_matrix(sym, 0.0).isIdentity());
    for (double t : {0.01, 0.3, 1.0, 4.0, 40.0}) {
        const double e = std::exp(-2 * t);
        const Matrix want = 0.5 * mat({{1 + e, 1 - e}, {1 - e, 1 + e}});
        CHECK((transition_matrix(sym, t) - want).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((transition_matrix(kTwoThree, t) - corpus::two_state_transition(2, 3, t)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    corpus::Gen g(22);
    for (int trial = 0; trial < 20; ++trial) {
        const SwitchingGenerator gen{g.generator(g.index(2, 5))};
        const Matrix P = transition_matrix(gen, g.uniform(0.0, 10.0));
        CHECK((P.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);
        CHECK(P.minCoeff() >= -1e-14);
        const Matrix far = transition_matrix(gen, 200.0);
        const Vector pi = stationary_distribution(gen);
        for (Eigen::Index r = 0; r < far.rows(); ++r) CHECK((far.row(r).transpose() - pi).cwiseAbs().maxCoeff() <= 1e-9);
    }
    CHECK_THROWS_AS(transition_matrix(sym, -1.0), StructuralError);
}

TEST_CASE("stationary distribution") {
    const Vector pi = stationary_distribution(kTwoThree);
    CHECK(pi(0) == doctest::Approx(0.6));
    CHECK(pi(1) == doctest::Approx(0.4));
}

}
