#include "slq/stability.hpp"

#include <cmath>
#include <sstream>

#include "slq/errors.hpp"
#include "slq/markov.hpp"
#include "slq/symmetric.hpp"

namespace slq {

ClosedLoopMatrices closed_loop(const LQProblem& p, const MatrixFamily& theta) {
    if (theta.size() != p.regimes()) throw StructuralError("closed_loop: gain count differs from m0");
    ClosedLoopMatrices cl;
    cl.A.reserve(p.regimes());
    cl.C.reserve(p.regimes());
    for (std::size_t i = 0; i < p.regimes(); ++i) {
        if (static_cast<std::size_t>(theta[i].rows()) != p.m() ||
            static_cast<std::size_t>(theta[i].cols()) != p.n()) {
            throw StructuralError("closed_loop: gain " + std::to_string(i + 1) + " has wrong shape");
        }
        cl.A.push_back(p.A(i) + p.B(i) * theta[i]);
        cl.C.push_back(p.C(i) + p.D(i) * theta[i]);
    }
    return cl;
}

MatrixFamily quadratic_generator(const SwitchingGenerator& gen, const ClosedLoopMatrices& cl,
                                 const MatrixFamily& sigma) {
    MatrixFamily out = lambda_apply(gen, sigma);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Matrix SA = sigma[i] * cl.A[i];
        out[i] += SA + SA.transpose() + cl.C[i].transpose() * sigma[i] * cl.C[i];
        out[i] = symmetrize(out[i]);
    }
    return out;
}

MatrixFamily quadratic_generator(const LQProblem& p, const MatrixFamily& theta,
                                 const MatrixFamily& sigma) {
    if (sigma.size() != p.regimes()) throw StructuralError("quadratic_generator: sigma size differs from m0");
    return quadratic_generator(p.generator(), closed_loop(p, theta), sigma);
}

DissipativityVerdict check_dissipativity(const LQProblem& p, const MatrixFamily& theta,
                                         const DissipativityCertificate& cert) {
    if (cert.sigma.size() != p.regimes()) throw StructuralError("certificate: sigma size differs from m0");
    for (std::size_t i = 0; i < cert.sigma.size(); ++i) {
        if (min_eigenvalue(symmetrize(cert.sigma[i])) <= 0.0) {
            throw StructuralError("certificate: sigma(" + std::to_string(i + 1) +
                                  ") is not positive definite");
        }
    }
    const MatrixFamily G = quadratic_generator(p, theta, cert.sigma);
    DissipativityVerdict v;
    v.valid = true;
    for (std::size_t i = 0; i < G.size(); ++i) {
        const Matrix M = G[i] + cert.delta * symmetrize(cert.sigma[i]);
        const double slack = -max_eigenvalue(M);
        v.slack.push_back(slack);
        if (slack < -1e-10) v.valid = false;
    }
    return v;
}

DissipativityVerdict check_dissipativity(const LQProblem& p, const DissipativityCertificate& cert) {
    return check_dissipativity(p, zero_gains(p), cert);
}

double SecondMomentState::mean_square() const {
    double s = 0.0;
    for (const auto& M : Y) s += M.trace();
    return s;
}

MatrixFamily moment_rhs(const SwitchingGenerator& gen, const ClosedLoopMatrices& cl,
                        const MatrixFamily& Y) {
    const auto m0 = Y.size();
    MatrixFamily out(m0);
    for (std::size_t i = 0; i < m0; ++i) {
        const Matrix AY = cl.A[i] * Y[i];
        out[i] = AY + AY.transpose() + cl.C[i] * Y[i] * cl.C[i].transpose();
        // adjoint coupling: mass flows into regime i from j at rate λ_ji
        for (std::size_t j = 0; j < m0; ++j) {
            const double l = gen.rate(j, i);
            if (l != 0.0) out[i] += l * Y[j];
        }
        out[i] = symmetrize(out[i]);
    }
    return out;
}

MatrixFamily moment_rhs(const LQProblem& p, const MatrixFamily& theta, const MatrixFamily& Y) {
    if (Y.size() != p.regimes()) throw StructuralError("moment_rhs: Y size differs from m0");
    return moment_rhs(p.generator(), closed_loop(p, theta), Y);
}

Matrix moment_operator(const LQProblem& p, const MatrixFamily& theta) {
    const ClosedLoopMatrices cl = closed_loop(p, theta);
    const auto& gen = p.generator();
    return assemble_operator([&](const MatrixFamily& Y) { return moment_rhs(gen, cl, Y); }, p.n(),
                             p.regimes());
}

double moment_spectral_abscissa(const LQProblem& p, const MatrixFamily& theta) {
    const Matrix op = moment_operator(p, theta);
    if (op.rows() == 1) return op(0, 0);
    Eigen::EigenSolver<Matrix> es(op, false);
    if (es.info() != Eigen::Success) {
        throw NumericalError(NumericalError::Kind::eigen_failure,
                             "moment operator eigenvalue computation failed");
    }
    return es.eigenvalues().real().maxCoeff();
}

MomentTrajectory propagate_moment(const SwitchingGenerator& gen, std::size_t dim,
                                  const ClosedLoopFn& coefficients, const SecondMomentState& Y0,
                                  const std::vector<double>& grid, double tol) {
    const auto m0 = gen.regimes();
    if (Y0.Y.size() != m0) throw StructuralError("propagate: Y0 size differs from m0");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid[i] < grid[i + 1])) throw StructuralError("propagate: grid must be strictly increasing");
    }
    if (!grid.empty() && grid.front() < Y0.t) throw StructuralError("propagate: grid starts before Y0.t");
    double scale = 0.0;
    for (std::size_t i = 0; i < m0; ++i) {
        const Matrix S = symmetrize(Y0.Y[i]);
        if (min_eigenvalue(S) < -1e-12 * std::max(1.0, S.norm())) {
            throw StructuralError("propagate: Y0(" + std::to_string(i + 1) + ") is not PSD");
        }
        scale += std::abs(S.trace());
    }

    ClosedLoopMatrices cl;
    cl.A.resize(m0);
    cl.C.resize(m0);
    const OdeRhs rhs = [&](double t, const Vector& y, Vector& dy) {
        for (std::size_t i = 0; i < m0; ++i) coefficients(t, i, cl.A[i], cl.C[i]);
        dy = svec_family(moment_rhs(gen, cl, smat_family(y, dim, m0)));
    };
    OdeOptions opts;
    opts.rtol = tol;
    opts.atol = tol * std::max(scale, 1e-300) * 1e-2;
    const OdeResult res = integrate_dopri(rhs, Y0.t, svec_family(Y0.Y), grid, opts);

    MomentTrajectory out;
    out.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        SecondMomentState st{grid[k], smat_family(res.y[k], dim, m0)};
        double tr = 0.0;
        for (const auto& M : st.Y) tr += std::abs(M.trace());
        for (std::size_t i = 0; i < m0; ++i) {
            const double lam = min_eigenvalue(st.Y[i]);
            if (lam < -1e-9 * std::max(tr, scale)) {
                std::ostringstream os;
                os << "second moment lost positive semidefiniteness at t = " << grid[k]
                   << " (regime " << i + 1 << ", eigenvalue " << lam << ")";
                throw NumericalError(NumericalError::Kind::internal, os.str());
            }
        }
        out.push_back(std::move(st));
    }
    return out;
}

MomentTrajectory propagate_second_moment(const LQProblem& p, const GainSchedule& gains,
                                         const SecondMomentState& Y0,
                                         const std::vector<double>& grid, double tol) {
    if (gains.regimes() != p.regimes()) throw StructuralError("propagate: gain schedule regime count");
    if (!grid.empty() && !gains.covers(Y0.t, grid.back())) {
        throw StructuralError("propagate: gains not defined on the full horizon");
    }
    const ClosedLoopFn coeff = [&](double t, std::size_t i, Matrix& A, Matrix& C) {
        const Matrix th = gains.at(t, i);
        A = p.A(i) + p.B(i) * th;
        C = p.C(i) + p.D(i) * th;
    };
    return propagate_moment(p.generator(), p.n(), coeff, Y0, grid, tol);
}

SecondMomentState point_mass_moment(const Vector& x, std::size_t regime, std::size_t m0, double t) {
    if (regime >= m0) throw StructuralError("point_mass_moment: regime out of range");
    SecondMomentState st;
    st.t = t;
    st.Y = zero_family(static_cast<std::size_t>(x.size()), m0);
    st.Y[regime] = x * x.transpose();
    return st;
}

} // namespace slq
