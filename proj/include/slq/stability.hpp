#pragma once

#include <functional>
#include <vector>

#include "slq/gains.hpp"
#include "slq/model.hpp"
#include "slq/ode.hpp"

namespace slq {

/// Candidate Lyapunov family Σ(ι) ≻ 0 with decay rate δ > 0.
struct DissipativityCertificate {
    MatrixFamily sigma;
    double delta = 0.0;
};

struct DissipativityVerdict {
    bool valid = false;
    /// Smallest eigenvalue of −[Λ[Σ] + ΣA + AᵀΣ + CᵀΣC + δΣ](ι); valid iff all ≥ −1e−10.
    std::vector<double> slack;
};

/// Closed-loop drift and diffusion: A^Θ = A + BΘ, C^Θ = C + DΘ.
struct ClosedLoopMatrices {
    MatrixFamily A;
    MatrixFamily C;
};

ClosedLoopMatrices closed_loop(const LQProblem& p, const MatrixFamily& theta);

DissipativityVerdict check_dissipativity(const LQProblem& p, const MatrixFamily& theta,
                                         const DissipativityCertificate& cert);
DissipativityVerdict check_dissipativity(const LQProblem& p, const DissipativityCertificate& cert);

/// (Λ[Σ] + ΣA^Θ + (A^Θ)ᵀΣ + (C^Θ)ᵀΣC^Θ)(ι): the quadratic form of d/ds E⟨Σ(α)X, X⟩.
MatrixFamily quadratic_generator(const LQProblem& p, const MatrixFamily& theta,
                                 const MatrixFamily& sigma);
MatrixFamily quadratic_generator(const SwitchingGenerator& gen, const ClosedLoopMatrices& cl,
                                 const MatrixFamily& sigma);

/// Per-regime second moment Y_ι(t) = E[X Xᵀ 1{α(t)=ι}].
struct SecondMomentState {
    double t = 0.0;
    MatrixFamily Y;

    /// E|X(t)|² = Σ_ι tr Y_ι.
    double mean_square() const;
};

/// Ẏ_ι = A^Θ Y_ι + Y_ι (A^Θ)ᵀ + C^Θ Y_ι (C^Θ)ᵀ + Σ_ȷ λ_ȷι Y_ȷ.
MatrixFamily moment_rhs(const LQProblem& p, const MatrixFamily& theta, const MatrixFamily& Y);
MatrixFamily moment_rhs(const SwitchingGenerator& gen, const ClosedLoopMatrices& cl,
                        const MatrixFamily& Y);

/// Matrix of moment_rhs on the m0·n(n+1)/2-dimensional symmetric family space.
Matrix moment_operator(const LQProblem& p, const MatrixFamily& theta);

/// Largest real part of the moment operator's spectrum; < 0 iff mean-square stable.
double moment_spectral_abscissa(const LQProblem& p, const MatrixFamily& theta);

/// Time-dependent closed-loop coefficients for regime ι (dimension may differ
/// from the problem's, e.g. for the stacked coupled system).
using ClosedLoopFn = std::function<void(double t, std::size_t regime, Matrix& A, Matrix& C)>;

using MomentTrajectory = std::vector<SecondMomentState>;

/// Integrates the second-moment ODE of dX = A(t,α)X ds + C(t,α)X dW on the
/// ascending `grid`, starting from `Y0` at Y0.t.
MomentTrajectory propagate_moment(const SwitchingGenerator& gen, std::size_t dim,
                                  const ClosedLoopFn& coefficients, const SecondMomentState& Y0,
                                  const std::vector<double>& grid, double tol);

MomentTrajectory propagate_second_moment(const LQProblem& p, const GainSchedule& gains,
                                         const SecondMomentState& Y0,
                                         const std::vector<double>& grid, double tol);

/// Y0 = x xᵀ placed in `regime`, zero elsewhere.
SecondMomentState point_mass_moment(const Vector& x, std::size_t regime, std::size_t m0,
                                    double t = 0.0);

} // namespace slq
