#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slq/model.hpp"
#include "slq/riccati.hpp"
#include "slq/simulate.hpp"

namespace slq {

enum class GapKind { riccati_gap, gain_gap, state_gap, control_gap, integral_gap };

std::string to_string(GapKind kind);

/// Nonnegative gap magnitudes against a strictly increasing abscissa:
/// τ = T − t for the Riccati and gain gaps, s − t for the state and control
/// gaps, and the horizon T for the integral gap.
struct GapSeries {
    GapKind kind = GapKind::riccati_gap;
    std::vector<double> abscissa;
    std::vector<double> values;
};

/// Values outside [lo, hi] (and zeros) are left out of a fit.
struct FitWindow {
    double lo = 1e-10;
    double hi = 1e-1;
    static FitWindow all();
};

/// log v ≈ log K − δ τ by least squares.
struct RateFit {
    double K_hat = 0.0;
    double delta_hat = 0.0;
    double r_squared = 0.0;
    double tau_lo = 0.0; ///< abscissa range actually used
    double tau_hi = 0.0;
    std::size_t points = 0;
};

/// Throws NumericalError(insufficient_data) with fewer than 5 usable points.
RateFit fit_exponential_rate(const GapSeries& series, const FitWindow& window = {});

struct GapAnalysis {
    GapSeries series;
    RateFit fit;
};

/// max_ι λ_max(P_∞(ι) − P_T(t, ι)) over the DRE grid, reordered by τ = T − t.
/// Throws NumericalError(monotonicity_violated) if some gap is below −1e−9.
GapSeries riccati_gap(const ARESolution& are, const DRESolution& dre);

/// max_ι ‖Θ_∞(ι) − Θ_T(t, ι)‖₂ over the DRE grid, reordered by τ.
GapSeries gain_gap(const ARESolution& are, const DRESolution& dre);

/// Solves both Riccati equations and fits the gap decay.
GapAnalysis riccati_gap_series(const LQProblem& p, double T, const std::vector<double>& grid,
                               double tol = 1e-10, const FitWindow& window = {});
GapAnalysis gain_gap_series(const LQProblem& p, double T, const std::vector<double>& grid,
                            double tol = 1e-10, const FitWindow& window = {});

/// c with ‖Θ_∞ − Θ_T(t)‖ ≤ c · λ_max(P_∞ − P_T(t)) for every regime:
/// c = max_ι (‖B‖ + ‖D‖‖C‖)/δ + ‖D‖²‖BᵀP_∞ + DᵀP_∞C + S‖/δ², where δ is the
/// smaller regularity margin among the two solutions.
double gain_lipschitz_constant(const LQProblem& p, const ARESolution& are, const DRESolution& dre);

/// Smallest K with gap(s) ≤ K e^{−δ(s−t)}(|xT − xInf|² + e^{−2δ(T−s)}|xT|²)
/// at a given δ, searched over a log grid of δ.
struct BoundVerdict {
    bool passed = false;
    double delta = 0.0;      ///< largest δ on the search grid with K(δ) ≤ K_cap
    double K = 0.0;          ///< the dominating K at that δ
    double delta_max = 0.0;  ///< top of the search grid
    double K_cap = 0.0;
    double K_at_smallest_delta = 0.0;
};

struct BoundOptions {
    double tol = 1e-10;      ///< moment ODE tolerance
    double K_cap = 1e4;
    std::size_t delta_points = 200;
    double delta_min = 1e-3;
};

struct TurnpikeBound {
    GapSeries state;
    GapSeries control;
    std::vector<double> times; ///< s values (abscissa + t)
    BoundVerdict state_verdict;
    BoundVerdict control_verdict;
};

/// Exact E|X_T − X_∞|² and E|u_T − u_∞|² on `grid` (ascending, starting at t,
/// ending at or before T) from the joint second moment of the two closed
/// loops driven by one Brownian motion and one chain, then fits the bound.
TurnpikeBound verify_turnpike_bound(const LQProblem& p, const ARESolution& are, const DRESolution& dre,
                                    const Vector& xT, const Vector& xInf, std::size_t regime, double t,
                                    const std::vector<double>& grid, const BoundOptions& opts = {});

/// Fits the bound to an arbitrary gap series (abscissa s − t).
BoundVerdict fit_turnpike_bound(const GapSeries& series, double t, double T, double xdiff_sq,
                                double xT_sq, double rate_hint, const BoundOptions& opts = {});

/// ∫_0^T E(|X_T − X_∞|² + |u_T − u_∞|²) ds with equal starts x, for each T
/// (ascending). Each horizon gets its own DRE solve on `points_per_unit`·T
/// grid points.
GapSeries integral_gap(const LQProblem& p, const ARESolution& are, const Vector& x, std::size_t regime,
                       const std::vector<double>& horizons, double tol = 1e-10,
                       std::size_t points_per_unit = 100);

/// max_ι max_{jk} |P_T(t, ι) − P_{T−t}(0, ι)| from two DRE solves on
/// unrelated grids.
double semigroup_check(const LQProblem& p, double T, double t, double tol = 1e-10);

/// Monte Carlo agreement with an exact curve: |mc − exact| ≤ 3 SE + c·dt.
/// The bias slope c comes from coarser probe runs of the same estimator:
/// each probe gives an upper slope (|probe − exact| + 3 SE)/dt_probe, and c
/// bounds the straight line through those slopes on [0, largest dt_probe],
/// i.e. c = max slope + (max slope − min slope), maximized over times.
struct McProbe {
    std::vector<Estimate> values;
    double dt = 0.0;
};

struct McAgreement {
    bool passed = false;
    double bias_constant = 0.0;
    double worst_ratio = 0.0; ///< max |mc − exact| / (3 SE + c dt); ≤ 1 passes
    std::size_t worst_index = 0;
};

McAgreement check_mc_agreement(const std::vector<double>& exact, const std::vector<Estimate>& mc, double dt,
                               const std::vector<McProbe>& probes);

struct TurnpikeOptions {
    double tol = 1e-10;
    double horizon = 10.0;
    std::size_t grid_points = 1001;
    std::vector<double> integral_horizons{6.0, 8.0, 10.0, 12.0};
    FitWindow window;
    BoundOptions bound;
    std::size_t mc_paths = 0; ///< 0 skips the Monte Carlo cross-check
    double mc_dt = 1e-3;
    std::uint64_t seed = 0;
};

struct Verdict {
    std::string name;
    bool passed = false;
    std::string series; ///< the series the check was computed from
    std::string detail;
};

struct TurnpikeReport {
    std::string problem_id;
    ARESolution are;
    double moment_decay_rate = 0.0; ///< −closed_loop_rate
    GapAnalysis riccati;
    GapAnalysis gain;
    double lipschitz = 0.0;
    TurnpikeBound bound;
    Vector x;
    std::size_t regime = 0;
    GapSeries integral;
    double semigroup_discrepancy = 0.0;
    bool mc_ran = false;
    std::vector<Estimate> mc_state;
    std::vector<Estimate> mc_control;
    std::vector<double> mc_times;
    std::vector<Verdict> verdicts;
    TurnpikeOptions options;

    bool all_passed() const;
};

/// Runs every turnpike check for equal starts `x` in `regime` at t = 0.
TurnpikeReport run_turnpike(const LQProblem& p, const std::string& id, const Vector& x, std::size_t regime,
                            const TurnpikeOptions& opts = {});

} // namespace slq
