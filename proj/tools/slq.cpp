// slq: command-line front end for the switched LQ toolkit.
//
// Exit status: 0 success, 1 failed check or solver error, 2 usage or config error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "slq/config.hpp"
#include "slq/errors.hpp"
#include "slq/markov.hpp"
#include "slq/report.hpp"
#include "slq/riccati.hpp"
#include "slq/simulate.hpp"
#include "slq/stability.hpp"
#include "slq/turnpike.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Args {
    std::string problem;
    double horizon = 0.0; // 0 selects the command default
    std::size_t grid = 0;
    double tol = 1e-10;
    std::size_t paths = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string policy = "are";
};

fs::path out_dir(const Args& a) {
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec || !fs::is_directory(a.out)) throw UsageError("output directory " + a.out + " is not writable");
    return fs::path(a.out);
}

void emit(const fs::path& path, const std::string& content) {
    try {
        slq::write_text_file(path, content);
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
}

slq::InitialTriple initial_of(const slq::ProblemConfig& cfg) {
    if (cfg.initial) return *cfg.initial;
    slq::InitialTriple init;
    init.x = slq::Vector::Ones(static_cast<Eigen::Index>(cfg.problem.n()));
    return init;
}

// Domain checks before any solver runs; prints the failures.
bool precheck(const slq::ProblemConfig& cfg) {
    const slq::ValidationReport r = slq::validate_problem(cfg.problem);
    if (!r.ok) {
        std::cerr << "problem " << cfg.id << " fails validation:\n";
        for (const auto& m : r.messages) std::cerr << "  " << m << '\n';
    }
    return r.ok;
}

int cmd_validate(const Args& a) {
    const auto cfg = slq::load_problem_config(a.problem);
    const slq::ValidationReport r = slq::validate_problem(cfg.problem);
    const std::string text = slq::validation_text(cfg.id, r);
    std::cout << text;
    emit(out_dir(a) / (slq::artifact_stem(cfg) + ".validation.txt"), text);
    return r.ok ? kOk : kDomain;
}

int cmd_dre(const Args& a) {
    const auto cfg = slq::load_problem_config(a.problem);
    if (!precheck(cfg)) return kDomain;
    const double T = a.horizon > 0.0 ? a.horizon : 5.0;
    const std::size_t N = a.grid > 0 ? a.grid : 501;
    const auto sol = slq::solve_dre(cfg.problem, T, slq::uniform_grid(0.0, T, N), a.tol);
    const fs::path dir = out_dir(a);
    const std::string stem = slq::artifact_stem(cfg);
    emit(dir / (stem + ".P.csv"), slq::dre_P_csv(sol));
    emit(dir / (stem + ".Theta.csv"), slq::dre_theta_csv(sol));
    const std::string text = slq::dre_summary_text(cfg.id, sol);
    emit(dir / (stem + ".dre.txt"), text);
    std::cout << text;
    return kOk;
}

slq::ARESolution solve_are(const slq::ProblemConfig& cfg, const Args& a) {
    slq::AreOptions ao;
    ao.tol = a.tol;
    if (a.horizon > 0.0) ao.t_max = a.horizon;
    return slq::solve_are(cfg.problem, ao);
}

int cmd_are(const Args& a) {
    const auto cfg = slq::load_problem_config(a.problem);
    if (!precheck(cfg)) return kDomain;
    const auto sol = solve_are(cfg, a);
    const std::string text = slq::are_text(cfg.id, sol);
    emit(out_dir(a) / (slq::artifact_stem(cfg) + ".Pinf.txt"), text);
    std::cout << text;
    return kOk;
}

int cmd_simulate(const Args& a) {
    const auto cfg = slq::load_problem_config(a.problem);
    if (!precheck(cfg)) return kDomain;
    const slq::InitialTriple init = initial_of(cfg);
    const double T = a.horizon > 0.0 ? a.horizon : init.t + 5.0;
    if (!(T > init.t)) throw UsageError("--horizon must exceed the initial time");
    slq::SimulationConfig sc;
    sc.dt = a.dt > 0.0 ? a.dt : 1e-3;
    sc.n_paths = a.paths > 0 ? a.paths : 1000;
    sc.seed = a.seed;

    slq::AreOptions ao;
    ao.tol = a.tol;
    std::optional<slq::DRESolution> dre;
    std::optional<slq::GainSchedule> gains;
    if (a.policy == "dre") {
        const std::size_t N = a.grid > 0 ? a.grid : 1001;
        dre = slq::solve_dre(cfg.problem, T, slq::uniform_grid(init.t, T, N), a.tol);
        gains = dre->gain_schedule();
    } else {
        gains = slq::GainSchedule::constant(slq::solve_are(cfg.problem, ao).theta);
    }
    const auto stats = slq::simulate_closed_loop(cfg.problem, *gains, init, T, sc);
    const auto moments = slq::propagate_second_moment(
        cfg.problem, *gains, slq::point_mass_moment(init.x, init.regime, cfg.problem.regimes(), init.t),
        stats.times, a.tol);
    // the regime paths actually driven in the first few simulated paths
    std::vector<slq::ChainPath> chains;
    for (std::uint64_t k = 0; k < std::min<std::size_t>(sc.n_paths, 10); ++k) {
        const std::uint64_t seed = slq::derive_seed(slq::derive_seed(sc.seed, k), slq::kChainStream);
        chains.push_back(slq::sample_chain_path(cfg.problem.generator(), init.regime, init.t, T, seed));
    }
    const fs::path dir = out_dir(a);
    const std::string stem = slq::artifact_stem(cfg);
    emit(dir / (stem + ".mean_sq_state.csv"), slq::estimate_csv(stats.times, stats.mean_sq_state));
    emit(dir / (stem + ".moment.csv"), slq::moment_csv(moments));
    emit(dir / (stem + ".mean_sq_exact.csv"), slq::mean_square_csv(moments));
    emit(dir / (stem + ".chain_paths.csv"), slq::chain_paths_csv(chains));
    const std::string text = slq::path_stats_text(cfg.id, stats, sc);
    emit(dir / (stem + ".simulation.txt"), text);
    std::cout << text;
    return kOk;
}

int cmd_turnpike(const Args& a) {
    const auto cfg = slq::load_problem_config(a.problem);
    if (!precheck(cfg)) return kDomain;
    const slq::InitialTriple init = initial_of(cfg);
    slq::TurnpikeOptions to;
    to.tol = a.tol;
    if (a.horizon > 0.0) to.horizon = a.horizon;
    if (a.grid > 0) to.grid_points = a.grid;
    to.mc_paths = a.paths;
    if (a.dt > 0.0) to.mc_dt = a.dt;
    to.seed = a.seed;
    const auto rep = slq::run_turnpike(cfg.problem, cfg.id, init.x, init.regime, to);

    const fs::path dir = out_dir(a);
    const std::string stem = slq::artifact_stem(cfg);
    emit(dir / (stem + ".riccati_gap.csv"), slq::gap_series_csv(rep.riccati.series));
    emit(dir / (stem + ".gain_gap.csv"), slq::gap_series_csv(rep.gain.series));
    emit(dir / (stem + ".state_gap.csv"), slq::gap_series_csv(rep.bound.state));
    emit(dir / (stem + ".control_gap.csv"), slq::gap_series_csv(rep.bound.control));
    if (!rep.integral.values.empty()) emit(dir / (stem + ".integral_gap.csv"), slq::gap_series_csv(rep.integral));
    if (rep.mc_ran) {
        emit(dir / (stem + ".mc_state_gap.csv"), slq::estimate_csv(rep.mc_times, rep.mc_state));
        emit(dir / (stem + ".mc_control_gap.csv"), slq::estimate_csv(rep.mc_times, rep.mc_control));
    }
    const std::string text = slq::turnpike_text(rep);
    emit(dir / (stem + ".turnpike.txt"), text);
    std::cout << text;
    return rep.all_passed() ? kOk : kDomain;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Switched stochastic LQ control: Riccati solvers, stability, simulation, turnpike checks"};
    app.set_version_flag("--version", SLQ_VERSION);
    app.require_subcommand(1);
    Args a;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--problem", a.problem, "problem file (JSON)")->required();
        sub->add_option("--out", a.out, "output directory")->capture_default_str();
    };
    auto add_tol = [&](CLI::App* sub) {
        sub->add_option("--tol", a.tol, "solver tolerance (> 0)")->capture_default_str();
    };

    auto* v = app.add_subcommand("validate", "check shapes, convexity and the generator");
    add_common(v);

    auto* d = app.add_subcommand("dre", "solve the differential Riccati equation on [0, T]");
    add_common(d);
    add_tol(d);
    d->add_option("--horizon", a.horizon, "horizon T (default 5)");
    d->add_option("--grid", a.grid, "number of output grid points (default 501)");

    auto* r = app.add_subcommand("are", "solve the algebraic Riccati equation");
    add_common(r);
    add_tol(r);
    r->add_option("--horizon", a.horizon, "cap on the backward integration length");

    auto* s = app.add_subcommand("simulate", "Monte Carlo simulation of the closed loop");
    add_common(s);
    add_tol(s);
    s->add_option("--horizon", a.horizon, "end time T (default t0 + 5)");
    s->add_option("--grid", a.grid, "DRE grid points for --policy dre (default 1001)");
    s->add_option("--paths", a.paths, "number of paths (default 1000)");
    s->add_option("--dt", a.dt, "base step (default 1e-3)");
    s->add_option("--seed", a.seed, "base seed")->capture_default_str();
    s->add_option("--policy", a.policy, "feedback: are (stationary) or dre (finite horizon)")
        ->check(CLI::IsMember({"are", "dre"}))
        ->capture_default_str();

    auto* t = app.add_subcommand("turnpike", "run the turnpike checks and write the report");
    add_common(t);
    add_tol(t);
    t->add_option("--horizon", a.horizon, "horizon T (default 10)");
    t->add_option("--grid", a.grid, "DRE grid points (default 1001)");
    t->add_option("--paths", a.paths, "Monte Carlo paths for the cross-check (default 0: skip)");
    t->add_option("--dt", a.dt, "Monte Carlo step (default 1e-3)");
    t->add_option("--seed", a.seed, "base seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (!(a.tol > 0.0)) throw UsageError("--tol must be positive");
        if (a.horizon < 0.0) throw UsageError("--horizon must be positive");
        if (a.dt < 0.0) throw UsageError("--dt must be positive");
        if (*v) return cmd_validate(a);
        if (*d) return cmd_dre(a);
        if (*r) return cmd_are(a);
        if (*s) return cmd_simulate(a);
        if (*t) return cmd_turnpike(a);
    } catch (const slq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const slq::StructuralError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kUsage;
    } catch (const slq::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    }
    return kUsage;
}
