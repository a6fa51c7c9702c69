#pragma once

#include <optional>
#include <vector>

#include "slq/gains.hpp"
#include "slq/model.hpp"

namespace slq {

// Coupled Riccati equations of the switched LQ problem. With
//   M(ι) = R + DᵀPD,   L(ι) = BᵀP + DᵀPC + S,
//   F(P)(ι) = Λ[P] + PA + AᵀP + CᵀPC + Q − Lᵀ M⁻¹ L,
// the finite-horizon equation is Ṗ + F(P) = 0 with P(T) = 0 and the
// stationary equation is F(P) = 0. All functions act regime-wise on
// families indexed 0..m0-1.

/// Ṗ = −F(P). Throws NumericalError(singular_matrix) when some R + DᵀPD is
/// singular, naming the regime and its smallest eigenvalue.
MatrixFamily dre_rhs(const LQProblem& p, const MatrixFamily& P);

/// F(P): the left-hand side of the algebraic equation.
MatrixFamily are_residual(const LQProblem& p, const MatrixFamily& P);

/// Θ(ι) = −(R + DᵀPD)⁻¹(BᵀP + DᵀPC + S).
MatrixFamily gain_from_P(const LQProblem& p, const MatrixFamily& P);

/// Smallest eigenvalue of R + DᵀPD over all regimes.
double regularity_margin(const LQProblem& p, const MatrixFamily& P);

/// ½ xᵀP(ι)x.
double value_function(const MatrixFamily& P, const Vector& x, std::size_t regime);

struct DRESolution {
    LQProblem problem;
    double horizon = 0.0;
    std::vector<double> grid;            ///< ascending output times in [0, T]
    std::vector<MatrixFamily> P;         ///< P_T(t, ι) per grid time
    std::vector<MatrixFamily> P_dot;     ///< dP/dt per grid time (from dre_rhs)
    std::vector<MatrixFamily> theta;     ///< Θ_T(t, ι) per grid time
    double delta_margin = 0.0;           ///< min over grid and regimes of λ_min(R + DᵀPD)
    bool monotone = false;               ///< P(t1) ⪰ P(t2) for t1 ≤ t2 on the grid, up to tolerance
    double monotonicity_defect = 0.0;    ///< most negative eigenvalue of P(t_i) − P(t_{i+1})
    std::size_t steps = 0;

    /// Cubic Hermite interpolation between grid points.
    MatrixFamily P_at(double t) const;
    Matrix gain_at(double t, std::size_t regime) const;
    GainSchedule gain_schedule() const;
};

/// Integrates the DRE backward from P(T) = 0 to local tolerance `tol`,
/// recording on `out_grid` (ascending, within [0, T]).
DRESolution solve_dre(const LQProblem& p, double T, const std::vector<double>& out_grid, double tol);

/// Uniform grid of `points` times on [t0, t1] (points >= 2).
std::vector<double> uniform_grid(double t0, double t1, std::size_t points);

struct AreOptions {
    double tol = 1e-10;
    std::optional<double> t_max; ///< horizon cap; default derived from the residual decay rate
    bool newton = true;
    std::size_t max_newton = 20;
};

struct ARESolution {
    MatrixFamily P;
    MatrixFamily theta;
    double residual_norm = 0.0;   ///< max over regimes of ‖F(P)‖_F
    double delta_margin = 0.0;    ///< min over regimes of λ_min(R + DᵀPD)
    double closed_loop_rate = 0.0; ///< spectral abscissa of the Θ-closed-loop moment operator
    double horizon_used = 0.0;    ///< backward integration length reached
    double horizon_cap = 0.0;
    std::size_t newton_iterations = 0;
    std::vector<double> newton_residuals; ///< residual before each accepted Newton step, then final
};

/// Stationary solution as the long-horizon limit of the DRE, optionally
/// polished by Newton's method. Throws NumericalError(horizon_cap_reached)
/// when the residual does not fall below tol in time, and
/// NumericalError(not_stabilizing) when the resulting gain fails to stabilize.
ARESolution solve_are(const LQProblem& p, const AreOptions& opts = {});

/// One Newton correction: solves the closed-loop Lyapunov-type equation
/// Λ[H] + HA^Θ + (A^Θ)ᵀH + (C^Θ)ᵀHC^Θ = −F(P) with Θ = gain_from_P(P).
MatrixFamily newton_step(const LQProblem& p, const MatrixFamily& P);

} // namespace slq
