// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <array>
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "slq/config.hpp"
#include "slq/markov.hpp"
#include "slq/riccati.hpp"
#include "slq/simulate.hpp"
#include "slq/stability.hpp"
#include "slq/turnpike.hpp"
#include "support/corpus.hpp"

using namespace slq;
using corpus::mat;
using corpus::scalar;

namespace {

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            passed = false;
            detail << " FAILED(" << what << ")";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_abs(const MatrixFamily& a, const MatrixFamily& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
    return m;
}

void analytic_dre(Outcome& o) {
    const auto t0 = Clock::now();
    const auto sol = solve_dre(corpus::scalar1(), 5.0, uniform_grid(0.0, 5.0, 501), 1e-10);
    const double secs = seconds_since(t0);
    double err = 0.0;
    for (std::size_t k = 0; k < sol.grid.size(); ++k)
        err = std::max(err, std::abs(sol.P[k][0](0, 0) - std::tanh(5.0 - sol.grid[k])));
    o.detail << "max|P_T - tanh(T-t)| = " << err << ", runtime " << secs << " s";
    o.require(err <= 1e-8, "error > 1e-8");
    o.require(secs < 1.0, "runtime >= 1 s");
}

void analytic_are(Outcome& o) {
    const auto a1 = solve_are(corpus::scalar1());
    const auto a2 = solve_are(corpus::scalar2());
    const double e1 = std::max(std::abs(a1.P[0](0, 0) - 1.0), std::abs(a1.theta[0](0, 0) + 1.0));
    const double e2 = std::max(std::abs(a2.P[0](0, 0) - corpus::kGolden),
                               std::abs(a2.theta[0](0, 0) + (std::sqrt(5.0) - 1.0) / 2.0));
    o.detail << "scalar1 err " << e1 << " residual " << a1.residual_norm << "; scalar2 err " << e2 << " residual "
             << a2.residual_norm;
    o.require(e1 <= 1e-10 && e2 <= 1e-10, "closed form");
    o.require(a1.residual_norm <= 1e-10 && a2.residual_norm <= 1e-10, "residual");
}

void semigroup(Outcome& o) {
    const double tol = 1e-10;
    double worst = 0.0;
    for (const auto& p : {corpus::scalar1(), corpus::tworeg()})
        for (const auto& [T, t] : {std::pair{5.0, 2.0}, std::pair{8.0, 3.0}}) worst = std::max(worst, semigroup_check(p, T, t, tol));
    o.detail << "max discrepancy " << worst << " (limit " << 10 * tol << ")";
    o.require(worst <= 10 * tol, "discrepancy");
}

void monotone_limit(Outcome& o) {
    double worst = 0.0; // most negative eigenvalue found
    for (const auto& inst : corpus::all()) {
        const auto are = solve_are(inst.problem);
        MatrixFamily prev;
        for (double T : {1.0, 2.0, 4.0, 8.0}) {
            const auto sol = solve_dre(inst.problem, T, {0.0, T}, 1e-10);
            for (std::size_t i = 0; i < inst.problem.regimes(); ++i) {
                const Matrix I = Matrix::Identity(sol.P[0][i].rows(), sol.P[0][i].cols());
                worst = std::min(worst, min_eigenvalue(are.P[i] + 1e-9 * I - sol.P[0][i]));
                if (!prev.empty()) worst = std::min(worst, min_eigenvalue(sol.P[0][i] - prev[i]));
            }
            prev = sol.P[0];
        }
    }
    o.detail << "most negative eigenvalue " << worst << " over 4 instances x T in {1,2,4,8}";
    o.require(worst >= -1e-9, "ordering");
}

void exponential_gaps(Outcome& o) {
    const auto grid = uniform_grid(0.0, 10.0, 1001);
    const auto r = riccati_gap_series(corpus::scalar1(), 10.0, grid);
    const auto g = gain_gap_series(corpus::scalar1(), 10.0, grid);
    o.detail << "riccati delta " << r.fit.delta_hat << " r2 " << r.fit.r_squared << "; gain delta " << g.fit.delta_hat
             << " r2 " << g.fit.r_squared;
    for (const auto* f : {&r.fit, &g.fit}) {
        o.require(f->delta_hat >= 1.9 && f->delta_hat <= 2.1, "delta range");
        o.require(f->r_squared >= 0.999, "r2");
    }
}

void turnpike_bound(Outcome& o) {
    for (const auto& inst : corpus::all()) {
        const double T = 10.0;
        const auto grid = uniform_grid(0.0, T, 1001);
        const auto are = solve_are(inst.problem);
        const auto dre = solve_dre(inst.problem, T, grid, 1e-10);
        const auto b = verify_turnpike_bound(inst.problem, are, dre, inst.x, inst.x, 0, 0.0, grid);
        o.detail << inst.name << " (" << b.state_verdict.delta << ", " << b.control_verdict.delta << ") ";
        o.require(b.state_verdict.passed && b.state_verdict.delta > 0.0, inst.name + " state");
        o.require(b.control_verdict.passed && b.control_verdict.delta > 0.0, inst.name + " control");
    }
    const auto p = corpus::scalar1();
    const auto are = solve_are(p);
    double worst = 0.0;
    for (double T : {10.0, 12.0, 15.0}) {
        const auto dre = solve_dre(p, T, uniform_grid(0.0, T, 201), 1e-10);
        const Vector x = Vector::Ones(1);
        const auto b = verify_turnpike_bound(p, are, dre, x, x, 0, 0.0, {0.0, T / 2, T});
        worst = std::max({worst, b.state.values[1], b.control.values[1]});
    }
    o.detail << "; scalar1 mid-horizon gap/|x|^2 " << worst;
    o.require(worst <= 1e-6, "mid-horizon gap");
}

void integral(Outcome& o) {
    const auto p = corpus::scalar1();
    const auto ig = integral_gap(p, solve_are(p), Vector::Ones(1), 0, {6.0, 8.0, 10.0, 12.0});
    bool dec = true;
    for (std::size_t k = 0; k + 1 < ig.values.size(); ++k) dec = dec && ig.values[k + 1] < ig.values[k];
    o.detail << "integral gap at T=6 " << ig.values[0] << ", at T=12 " << ig.values.back();
    o.require(dec, "not decreasing");
    o.require(ig.values[0] <= 1e-3, "too large at T=6");
}

void monte_carlo(Outcome& o) {
    const double T = 3.0;
    for (const auto& inst : corpus::all()) {
        const auto t0 = Clock::now();
        const auto& p = inst.problem;
        const auto are = solve_are(p);
        const auto dre = solve_dre(p, T, uniform_grid(0.0, T, 601), 1e-10);
        SimulationConfig cfg;
        cfg.dt = 1e-3;
        cfg.n_paths = 10000;
        cfg.out_intervals = 30;
        cfg.seed = 2024;
        InitialTriple init;
        init.x = inst.x;
        const auto gI = GainSchedule::constant(are.theta);
        const auto gT = dre.gain_schedule();
        const auto mc = simulate_closed_loop(p, gI, init, T, cfg);
        const auto cg = simulate_coupled(p, gT, gI, inst.x, inst.x, 0, 0.0, T, cfg);
        std::vector<McProbe> pm, ps, pc;
        for (double factor : {2.0, 4.0}) {
            SimulationConfig probe = cfg;
            probe.dt = factor * cfg.dt;
            pm.push_back({simulate_closed_loop(p, gI, init, T, probe).mean_sq_state, probe.dt});
            const auto cgp = simulate_coupled(p, gT, gI, inst.x, inst.x, 0, 0.0, T, probe);
            ps.push_back({cgp.gap_state, probe.dt});
            pc.push_back({cgp.gap_control, probe.dt});
        }
        const auto mom = propagate_second_moment(p, gI, point_mass_moment(inst.x, 0, p.regimes()), mc.times, 1e-11);
        std::vector<double> exact;
        for (const auto& st : mom) exact.push_back(st.mean_square());
        const auto ex = verify_turnpike_bound(p, are, dre, inst.x, inst.x, 0, 0.0, cg.times);
        const auto a1 = check_mc_agreement(exact, mc.mean_sq_state, cfg.dt, pm);
        const auto a2 = check_mc_agreement(ex.state.values, cg.gap_state, cfg.dt, ps);
        const auto a3 = check_mc_agreement(ex.control.values, cg.gap_control, cfg.dt, pc);
        const double secs = seconds_since(t0);
        o.detail << inst.name << " ratios " << a1.worst_ratio << "/" << a2.worst_ratio << "/" << a3.worst_ratio << " in "
                 << secs << " s; ";
        o.require(a1.passed, inst.name + " moment");
        o.require(a2.passed, inst.name + " state gap");
        o.require(a3.passed, inst.name + " control gap");
        o.require(secs < 60.0, inst.name + " runtime");
    }
}

void shift_invariance(Outcome& o) {
    corpus::Gen g(909);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const auto p = g.problem();
        for (int j = 0; j < 10; ++j) {
            MatrixFamily theta;
            for (std::size_t i = 0; i < p.regimes(); ++i) theta.push_back(g.matrix(p.m(), p.n()));
            const auto q = apply_feedback_shift(p, theta);
            for (std::size_t i = 0; i < p.regimes(); ++i)
                worst = std::max(worst, (corpus::schur(q, i) - corpus::schur(p, i)).cwiseAbs().maxCoeff());
        }
    }
    o.detail << "max entrywise Schur difference " << worst << " over 100 gains";
    o.require(worst <= 1e-10, "difference");
}

void chain_sampler(Outcome& o) {
    const SwitchingGenerator gen{mat({{-2, 2}, {3, -3}})};
    const std::size_t N = 100000;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < N; ++k) hits += sample_chain_path(gen, k % 2, 0.0, 20.0, derive_seed(5, k)).state_at(20.0) == 0;
    const double frac = static_cast<double>(hits) / N, se = std::sqrt(0.24 / N);
    o.detail << "occupation " << frac << " (3 SE = " << 3 * se << ")";
    o.require(std::abs(frac - 0.6) <= 3 * se, "occupation");
    double min_p = 1.0;
    for (double t : {0.1, 1.0, 5.0}) {
        const Matrix P = transition_matrix(gen, t);
        for (std::size_t s = 0; s < 2; ++s) {
            std::array<double, 2> obs{0.0, 0.0};
            for (std::size_t k = 0; k < N; ++k) obs[sample_chain_path(gen, s, 0.0, t, derive_seed(77 + s, k)).state_at(t)] += 1.0;
            double stat = 0.0;
            for (std::size_t j = 0; j < 2; ++j) {
                const double e = N * P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j));
                stat += (obs[j] - e) * (obs[j] - e) / e;
            }
            const boost::math::chi_squared dist(1.0);
            min_p = std::min(min_p, boost::math::cdf(boost::math::complement(dist, stat)));
        }
    }
    o.detail << ", smallest chi-square p " << min_p;
    o.require(min_p > 0.001, "chi-square");
}

void negative_case(Outcome& o) {
    const auto r = validate_problem(corpus::example31());
    bool names_r = false;
    for (const auto& m : r.messages) names_r = names_r || m.find("R(1)") != std::string::npos;
    o.require(!r.ok && names_r, "in-process validation");

    const std::string cmd = std::string(SLQ_CLI_PATH) + " validate --problem " + SLQ_CONFIG_DIR +
                            "/example31.json --out " + SLQ_ACCEPT_OUT + " 2>&1";
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        o.require(false, "cannot run cli");
        return;
    }
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
    const int status = pclose(pipe);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.detail << "cli exit code " << code;
    o.require(code == 1, "exit code");
    o.require(out.find("R(1)") != std::string::npos, "diagnostic names R");
}

void duality(Outcome& o) {
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
    auto pair = [](const MatrixFamily& s, const MatrixFamily& Y) {
        double v = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) v += (s[i] * Y[i]).trace();
        return v;
    };
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double fd = (pair(sigma, traj[3 * k + 2].Y) - pair(sigma, traj[3 * k].Y)) / (2 * h);
        const double exact = pair(G, traj[3 * k + 1].Y);
        worst = std::max(worst, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
    }
    o.detail << "max relative difference " << worst << " at 20 times";
    o.require(worst <= 1e-6, "difference");
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"analytic DRE (scalar1)", analytic_dre},
        {"analytic ARE (scalar1, scalar2)", analytic_are},
        {"semigroup identity", semigroup},
        {"monotone limit", monotone_limit},
        {"exponential Riccati and gain gaps", exponential_gaps},
        {"turnpike bound", turnpike_bound},
        {"integral gap", integral},
        {"Monte Carlo vs moment ODE", monte_carlo},
        {"feedback shift invariance", shift_invariance},
        {"chain sampler", chain_sampler},
        {"negative case (unbounded cost)", negative_case},
        {"moment duality", duality},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            criteria[k].second(o);
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail << " exception: " << e.what();
        }
        failed += !o.passed;
        std::cout << (o.passed ? "PASS " : "FAIL ") << k + 1 << ". " << criteria[k].first << ": " << o.detail.str()
                  << " [" << seconds_since(t0) << " s]" << std::endl;
    }
    std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - static_cast<std::size_t>(failed) << "/"
              << criteria.size() << std::endl;
    return failed ? 1 : 0;
}
