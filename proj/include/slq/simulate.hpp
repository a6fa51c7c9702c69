#pragma once

#include <cstdint>
#include <vector>

#include "slq/gains.hpp"
#include "slq/model.hpp"

namespace slq {

// Euler–Maruyama for dX = (A + BΘ)X ds + (C + DΘ)X dW under a Markov regime
// chain. Steps are split exactly at chain jumps, so the regime is constant on
// every substep. Path k uses the chain stream derive(derive(seed, k), 1) and
// the Brownian stream derive(derive(seed, k), 2).

struct SimulationConfig {
    double dt = 1e-3;            ///< base step; the grid is refined so outputs land on steps
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    std::size_t out_intervals = 100; ///< statistics are reported on out_intervals + 1 times
    bool keep_paths = false;         ///< retain every substep of every path (memory heavy)
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// States and controls at every substep boundary. A chain jump at τ shows up
/// as two consecutive samples at τ: the old regime, then the new one.
struct SampledTrajectory {
    std::vector<double> times;
    std::vector<std::size_t> regimes;
    std::vector<Vector> X;
    std::vector<Vector> u;
};

struct PathStats {
    std::vector<double> times;
    std::vector<Estimate> mean_sq_state; ///< E|X(t)|² per output time
    Estimate mean_cost;                  ///< trapezoid rule on the stage cost
    std::vector<Estimate> occupation;    ///< fraction of [t, T] spent in each regime
    std::size_t n_paths = 0;
    std::size_t steps = 0;               ///< base steps per path
    std::vector<SampledTrajectory> paths; ///< filled when keep_paths
};

struct CoupledGapStats {
    std::vector<double> times;
    std::vector<Estimate> gap_state;   ///< E|X_T(s) − X_∞(s)|²
    std::vector<Estimate> gap_control; ///< E|u_T(s) − u_∞(s)|²
    std::size_t n_paths = 0;
};

/// How the two systems of simulate_coupled are driven.
enum class Coupling {
    common,      ///< same chain path and same Brownian increments
    independent, ///< separate streams; only useful as a variance baseline
};

/// Throws NumericalError(unstable_simulation) when a path overflows.
PathStats simulate_closed_loop(const LQProblem& p, const GainSchedule& gains,
                               const InitialTriple& init, double T, const SimulationConfig& cfg);

CoupledGapStats simulate_coupled(const LQProblem& p, const GainSchedule& gains_T,
                                 const GainSchedule& gains_inf, const Vector& xT,
                                 const Vector& xInf, std::size_t regime, double t, double T,
                                 const SimulationConfig& cfg, Coupling coupling = Coupling::common);

/// Path average of the trapezoid rule applied to the stage cost on [t, T].
Estimate estimate_cost(const LQProblem& p, const std::vector<SampledTrajectory>& paths, double t,
                       double T);

/// Worker threads for Monte Carlo: hardware concurrency, capped by SLQ_THREADS.
std::size_t simulation_threads();

} // namespace slq
