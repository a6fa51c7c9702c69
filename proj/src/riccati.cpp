#include "slq/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "slq/errors.hpp"
#include "slq/markov.hpp"
#include "slq/ode.hpp"
#include "slq/stability.hpp"
#include "slq/symmetric.hpp"

namespace slq {

namespace {

struct RegimeTerms {
    Matrix M; // R + DᵀPD
    Matrix L; // BᵀP + DᵀPC + S
};

RegimeTerms regime_terms(const LQProblem& p, const Matrix& P, std::size_t i) {
    return {symmetrize(p.R(i) + p.D(i).transpose() * P * p.D(i)),
            p.B(i).transpose() * P + p.D(i).transpose() * P * p.C(i) + p.S(i)};
}

// M⁻¹ L, with singularity reported against the regime.
Matrix solve_inner(const Matrix& M, const Matrix& L, std::size_t regime) {
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() == Eigen::Success) return llt.solve(L);
    const double lam = min_eigenvalue(M);
    const double scale = std::max(1.0, M.norm());
    if (std::abs(lam) <= 1e-13 * scale) {
        std::ostringstream os;
        os << "R + D^T P D is singular in regime " << regime + 1 << " (smallest eigenvalue " << lam
           << ")";
        throw NumericalError(NumericalError::Kind::singular_matrix, os.str());
    }
    return M.partialPivLu().solve(L);
}

void check_family_shape(const LQProblem& p, const MatrixFamily& P, const char* what) {
    if (P.size() != p.regimes()) {
        throw StructuralError(std::string(what) + ": expected " + std::to_string(p.regimes()) +
                              " regime matrices");
    }
    for (const auto& M : P) {
        if (static_cast<std::size_t>(M.rows()) != p.n() || static_cast<std::size_t>(M.cols()) != p.n()) {
            throw StructuralError(std::string(what) + ": expected n x n matrices");
        }
    }
}

// Symmetrize and clip eigenvalues in (−1e−12·scale, 0) to zero.
void project_psd(Matrix& P) {
    P = symmetrize(P);
    if (P.rows() == 1) {
        if (P(0, 0) < 0.0 && P(0, 0) > -1e-12) P(0, 0) = 0.0;
        return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(P);
    const Vector& ev = es.eigenvalues();
    if (ev.minCoeff() >= 0.0) return;
    const double floor = -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Vector clipped = ev;
    bool changed = false;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev(k) < 0.0 && ev(k) > floor) {
            clipped(k) = 0.0;
            changed = true;
        }
    }
    if (changed) P = symmetrize(es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose());
}

} // namespace

MatrixFamily are_residual(const LQProblem& p, const MatrixFamily& P) {
    check_family_shape(p, P, "are_residual");
    MatrixFamily out = lambda_apply(p.generator(), P);
    for (std::size_t i = 0; i < p.regimes(); ++i) {
        const RegimeTerms rt = regime_terms(p, P[i], i);
        const Matrix PA = P[i] * p.A(i);
        out[i] += PA + PA.transpose() + p.C(i).transpose() * P[i] * p.C(i) + p.Q(i) -
                  rt.L.transpose() * solve_inner(rt.M, rt.L, i);
        out[i] = symmetrize(out[i]);
    }
    return out;
}

MatrixFamily dre_rhs(const LQProblem& p, const MatrixFamily& P) {
    MatrixFamily F = are_residual(p, P);
    for (auto& M : F) M = -M;
    return F;
}

MatrixFamily gain_from_P(const LQProblem& p, const MatrixFamily& P) {
    check_family_shape(p, P, "gain_from_P");
    MatrixFamily theta;
    theta.reserve(p.regimes());
    for (std::size_t i = 0; i < p.regimes(); ++i) {
        const RegimeTerms rt = regime_terms(p, P[i], i);
        theta.push_back(-solve_inner(rt.M, rt.L, i));
    }
    return theta;
}

double regularity_margin(const LQProblem& p, const MatrixFamily& P) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.regimes(); ++i) d = std::min(d, min_eigenvalue(regime_terms(p, P[i], i).M));
    return d;
}

double value_function(const MatrixFamily& P, const Vector& x, std::size_t regime) {
    if (regime >= P.size()) throw StructuralError("value_function: regime out of range");
    if (P[regime].rows() != x.size()) throw StructuralError("value_function: size mismatch");
    return 0.5 * x.dot(P[regime] * x);
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t points) {
    if (points < 2) throw StructuralError("uniform_grid: need at least 2 points");
    std::vector<double> g(points);
    const double h = (t1 - t0) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) g[k] = t0 + h * static_cast<double>(k);
    g.back() = t1;
    return g;
}

// ---------------------------------------------------------------------------
// DRE
// ---------------------------------------------------------------------------

MatrixFamily DRESolution::P_at(double t) const {
    if (grid.empty()) throw StructuralError("DRESolution is empty");
    const double slack = 1e-12 * std::max(1.0, horizon);
    if (t < grid.front() - slack || t > grid.back() + slack) {
        std::ostringstream os;
        os << "DRESolution: t = " << t << " outside recorded grid [" << grid.front() << ", "
           << grid.back() << "]";
        throw StructuralError(os.str());
    }
    auto it = std::lower_bound(grid.begin(), grid.end(), t);
    if (it != grid.end() && *it == t) return P[static_cast<std::size_t>(it - grid.begin())];
    if (it == grid.end()) return P.back();
    if (it == grid.begin()) return P.front();
    const auto k1 = static_cast<std::size_t>(it - grid.begin());
    const auto k0 = k1 - 1;
    const auto n = problem.n(), m0 = problem.regimes();
    const Vector v = hermite(grid[k0], svec_family(P[k0]), svec_family(P_dot[k0]), grid[k1],
                             svec_family(P[k1]), svec_family(P_dot[k1]), t);
    return smat_family(v, n, m0);
}

Matrix DRESolution::gain_at(double t, std::size_t regime) const {
    const Matrix Pt = P_at(t)[regime];
    const RegimeTerms rt = regime_terms(problem, Pt, regime);
    return -solve_inner(rt.M, rt.L, regime);
}

GainSchedule DRESolution::gain_schedule() const {
    auto self = std::make_shared<const DRESolution>(*this);
    return GainSchedule::time_varying(
        [self](double t, std::size_t regime) { return self->gain_at(t, regime); },
        problem.regimes(), grid.front(), grid.back());
}

DRESolution solve_dre(const LQProblem& p, double T, const std::vector<double>& out_grid, double tol) {
    if (!(T > 0.0)) throw StructuralError("solve_dre: horizon must be positive");
    if (!(tol > 0.0)) throw StructuralError("solve_dre: tolerance must be positive");
    if (out_grid.empty()) throw StructuralError("solve_dre: empty output grid");
    for (std::size_t k = 0; k < out_grid.size(); ++k) {
        if (out_grid[k] < 0.0 || out_grid[k] > T) throw StructuralError("solve_dre: grid outside [0, T]");
        if (k > 0 && !(out_grid[k - 1] < out_grid[k])) {
            throw StructuralError("solve_dre: grid must be strictly increasing");
        }
    }
    const auto n = p.n(), m0 = p.regimes();

    // integrate in τ = T − t, where dP/dτ = F(P)
    std::vector<double> stops(out_grid.size());
    for (std::size_t k = 0; k < out_grid.size(); ++k) stops[k] = T - out_grid[out_grid.size() - 1 - k];
    stops.front() = std::max(stops.front(), 0.0);

    const OdeRhs rhs = [&](double, const Vector& y, Vector& dy) {
        dy = svec_family(are_residual(p, smat_family(y, n, m0)));
    };
    const OdeProjection project = [&](Vector& y) {
        MatrixFamily fam = smat_family(y, n, m0);
        for (auto& M : fam) project_psd(M);
        y = svec_family(fam);
    };
    OdeOptions opts;
    opts.rtol = tol;
    opts.atol = tol;
    const Vector y0 = Vector::Zero(static_cast<Eigen::Index>(svec_size(n) * m0));
    const OdeResult res = integrate_dopri(rhs, 0.0, y0, stops, opts, project);

    DRESolution sol{p, T, {}, {}, {}, {}, 0.0, false, 0.0, 0};
    sol.grid = out_grid;
    sol.steps = res.accepted;
    const auto N = out_grid.size();
    sol.P.resize(N);
    sol.P_dot.resize(N);
    sol.theta.resize(N);
    sol.delta_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < N; ++k) {
        const std::size_t r = N - 1 - k; // τ index
        sol.P[k] = smat_family(res.y[r], n, m0);
        if (out_grid[k] == T) {
            for (auto& M : sol.P[k]) M.setZero();
        }
        sol.P_dot[k] = dre_rhs(p, sol.P[k]);
        sol.theta[k] = gain_from_P(p, sol.P[k]);
        sol.delta_margin = std::min(sol.delta_margin, regularity_margin(p, sol.P[k]));
    }
    if (!(sol.delta_margin > 0.0)) {
        std::ostringstream os;
        os << "DRE solution lost regularity: min eigenvalue of R + D^T P D = " << sol.delta_margin;
        throw NumericalError(NumericalError::Kind::regularity_lost, os.str());
    }

    sol.monotone = true;
    sol.monotonicity_defect = 0.0;
    for (std::size_t k = 0; k + 1 < N; ++k) {
        for (std::size_t i = 0; i < m0; ++i) {
            const Matrix diff = sol.P[k][i] - sol.P[k + 1][i];
            const double lam = min_eigenvalue(symmetrize(diff));
            sol.monotonicity_defect = std::min(sol.monotonicity_defect, lam);
            if (lam < -10.0 * tol * std::max(1.0, sol.P[k][i].norm())) sol.monotone = false;
        }
    }
    return sol;
}

// ---------------------------------------------------------------------------
// ARE
// ---------------------------------------------------------------------------

MatrixFamily newton_step(const LQProblem& p, const MatrixFamily& P) {
    const auto n = p.n(), m0 = p.regimes();
    const MatrixFamily theta = gain_from_P(p, P);
    const ClosedLoopMatrices cl = closed_loop(p, theta);
    const Matrix op = assemble_operator(
        [&](const MatrixFamily& H) { return quadratic_generator(p.generator(), cl, H); }, n, m0);
    const Vector rhs = -svec_family(are_residual(p, P));
    Eigen::FullPivLU<Matrix> lu(op);
    if (!lu.isInvertible()) {
        throw NumericalError(NumericalError::Kind::singular_matrix,
                             "Newton correction: closed-loop Lyapunov operator is singular");
    }
    return smat_family(lu.solve(rhs), n, m0);
}

ARESolution solve_are(const LQProblem& p, const AreOptions& opts) {
    if (!(opts.tol > 0.0)) throw StructuralError("solve_are: tolerance must be positive");
    const auto n = p.n(), m0 = p.regimes();
    constexpr double kHardCap = 1e4;
    constexpr double kDivergence = 1e14;

    double cap = opts.t_max ? *opts.t_max : kHardCap;
    if (!(cap > 0.0)) throw StructuralError("solve_are: t_max must be positive");
    const bool adaptive_cap = !opts.t_max;

    const OdeRhs rhs = [&](double, const Vector& y, Vector& dy) {
        dy = svec_family(are_residual(p, smat_family(y, n, m0)));
    };
    const OdeProjection project = [&](Vector& y) {
        MatrixFamily fam = smat_family(y, n, m0);
        for (auto& M : fam) project_psd(M);
        y = svec_family(fam);
    };

    double first_residual = -1.0;
    bool rate_fixed = false;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false, diverged = false, capped = false;
    Vector prev;
    double last_tau = 0.0;
    const OdeObserver observe = [&](double tau, const Vector& y, const Vector& dy) {
        last_tau = tau;
        residual = max_frobenius(smat_family(dy, n, m0));
        double change = std::numeric_limits<double>::infinity();
        if (prev.size() == y.size()) change = max_frobenius(smat_family(y - prev, n, m0));
        prev = y;
        if (!std::isfinite(residual) || y.cwiseAbs().maxCoeff() > kDivergence) {
            diverged = true;
            return false;
        }
        if (first_residual < 0.0) first_residual = residual;
        if (adaptive_cap && !rate_fixed && residual <= 0.1 * first_residual) {
            // crude decay-rate estimate from the first decade of residual decay
            const double rho = std::log(10.0) / tau;
            cap = std::min(kHardCap, std::max(50.0 / rho, tau));
            rate_fixed = true;
        }
        if (residual <= opts.tol && change <= opts.tol) {
            converged = true;
            return false;
        }
        if (tau >= cap) {
            capped = true;
            return false;
        }
        return true;
    };

    OdeOptions ode;
    ode.rtol = std::max(opts.tol, 1e-13);
    ode.atol = std::max(opts.tol, 1e-13);
    const std::vector<double> stops{kHardCap};
    const Vector y0 = Vector::Zero(static_cast<Eigen::Index>(svec_size(n) * m0));
    const OdeResult res = integrate_dopri(rhs, 0.0, y0, stops, ode, project, observe);
    if (!res.stopped_early && !converged) capped = true;

    ARESolution sol;
    sol.horizon_used = last_tau;
    sol.horizon_cap = cap;
    MatrixFamily P = smat_family(res.y_final, n, m0);

    if (diverged) {
        std::ostringstream os;
        os << "horizon cap reached: backward Riccati integration diverged at horizon " << last_tau
           << " (final residual " << residual << "); instance is likely not stabilizable";
        throw NumericalError(NumericalError::Kind::horizon_cap_reached, os.str());
    }

    double r = max_frobenius(are_residual(p, P));
    if (opts.newton) {
        for (std::size_t it = 0; it < opts.max_newton; ++it) {
            if (r <= 1e-3 * opts.tol) break;
            MatrixFamily H;
            try {
                H = newton_step(p, P);
            } catch (const NumericalError&) {
                break;
            }
            MatrixFamily candidate = P;
            for (std::size_t i = 0; i < m0; ++i) candidate[i] = symmetrize(candidate[i] + H[i]);
            double r_new;
            try {
                r_new = max_frobenius(are_residual(p, candidate));
            } catch (const NumericalError&) {
                break;
            }
            if (!(r_new < r)) break;
            sol.newton_residuals.push_back(r);
            P = std::move(candidate);
            r = r_new;
            ++sol.newton_iterations;
        }
        if (sol.newton_iterations > 0) sol.newton_residuals.push_back(r);
    }

    if (!(r <= opts.tol)) {
        std::ostringstream os;
        os << "horizon cap reached at " << last_tau << " with final residual " << r
           << " (tolerance " << opts.tol << ")";
        (void)capped;
        throw NumericalError(NumericalError::Kind::horizon_cap_reached, os.str());
    }

    sol.P = std::move(P);
    sol.theta = gain_from_P(p, sol.P);
    sol.residual_norm = r;
    sol.delta_margin = regularity_margin(p, sol.P);
    sol.closed_loop_rate = moment_spectral_abscissa(p, sol.theta);
    if (!(sol.closed_loop_rate < 0.0)) {
        std::ostringstream os;
        os << "gain not stabilizing: closed-loop moment spectral abscissa " << sol.closed_loop_rate
           << " >= 0";
        throw NumericalError(NumericalError::Kind::not_stabilizing, os.str());
    }
    return sol;
}

} // namespace slq
