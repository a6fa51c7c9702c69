#include "slq/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "slq/errors.hpp"

namespace slq {

namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
    std::ostringstream os;
    os << r << "x" << c;
    return os.str();
}

void check_family(const MatrixFamily& fam, const char* name, std::size_t m0, std::size_t rows,
                  std::size_t cols) {
    if (fam.size() != m0) {
        throw StructuralError(std::string(name) + ": expected " + std::to_string(m0) +
                              " regime matrices, got " + std::to_string(fam.size()));
    }
    for (std::size_t i = 0; i < m0; ++i) {
        const auto& M = fam[i];
        if (static_cast<std::size_t>(M.rows()) != rows || static_cast<std::size_t>(M.cols()) != cols) {
            throw StructuralError(std::string(name) + "(" + std::to_string(i + 1) + "): expected " +
                                  shape_str(rows, cols) + ", got " + shape_str(M.rows(), M.cols()));
        }
        if (!M.allFinite()) {
            throw StructuralError(std::string(name) + "(" + std::to_string(i + 1) +
                                  "): non-finite entry");
        }
    }
}

void symmetrize_family(MatrixFamily& fam, const char* name) {
    for (std::size_t i = 0; i < fam.size(); ++i) {
        const double asym = (fam[i] - fam[i].transpose()).cwiseAbs().maxCoeff();
        if (asym > kSymmetryTolerance) {
            std::ostringstream os;
            os << name << "(" << i + 1 << ") is not symmetric (max asymmetry " << asym << ")";
            throw StructuralError(os.str());
        }
        fam[i] = symmetrize(fam[i]);
    }
}

} // namespace

LQProblem::LQProblem(Dimensions dims, RegimeCoefficients coeffs, CostWeights cost,
                     SwitchingGenerator generator)
    : dims_(dims), coeffs_(std::move(coeffs)), cost_(std::move(cost)),
      generator_(std::move(generator)) {
    if (dims_.n < 1 || dims_.m < 1 || dims_.m0 < 1) {
        throw StructuralError("dimensions n, m, m0 must all be at least 1");
    }
    const auto n = dims_.n, m = dims_.m, m0 = dims_.m0;
    check_family(coeffs_.A, "A", m0, n, n);
    check_family(coeffs_.B, "B", m0, n, m);
    check_family(coeffs_.C, "C", m0, n, n);
    check_family(coeffs_.D, "D", m0, n, m);
    check_family(cost_.Q, "Q", m0, n, n);
    check_family(cost_.S, "S", m0, m, n);
    check_family(cost_.R, "R", m0, m, m);
    symmetrize_family(cost_.Q, "Q");
    symmetrize_family(cost_.R, "R");
    if (static_cast<std::size_t>(generator_.lambda.rows()) != m0 ||
        static_cast<std::size_t>(generator_.lambda.cols()) != m0) {
        throw StructuralError("generator: expected " + shape_str(m0, m0) + ", got " +
                              shape_str(generator_.lambda.rows(), generator_.lambda.cols()));
    }
    if (!generator_.lambda.allFinite()) {
        throw StructuralError("generator: non-finite entry");
    }
}

LQProblem scalar_problem(double a, double b, double c, double d, double q, double s, double r) {
    auto one = [](double v) { return Matrix::Constant(1, 1, v); };
    return LQProblem({1, 1, 1}, {{one(a)}, {one(b)}, {one(c)}, {one(d)}},
                     {{one(q)}, {one(s)}, {one(r)}}, {Matrix::Zero(1, 1)});
}

double min_eigenvalue(const Matrix& symmetric) {
    if (symmetric.rows() == 1) return symmetric(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& symmetric) {
    if (symmetric.rows() == 1) return symmetric(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

namespace {

// Schur complement Q - Sᵀ R⁻¹ S, or nothing if R is numerically singular.
bool schur_complement(const Matrix& Q, const Matrix& S, const Matrix& R, Matrix& out) {
    Eigen::FullPivLU<Matrix> lu(R);
    if (!lu.isInvertible()) return false;
    out = symmetrize(Q - S.transpose() * lu.solve(S));
    return true;
}

} // namespace

std::vector<ConvexityMargin> convexity_margin(const CostWeights& c) {
    std::vector<ConvexityMargin> out;
    out.reserve(c.R.size());
    for (std::size_t i = 0; i < c.R.size(); ++i) {
        Matrix schur;
        if (!schur_complement(c.Q[i], c.S[i], c.R[i], schur)) {
            throw NumericalError(NumericalError::Kind::singular_matrix,
                                 "R(" + std::to_string(i + 1) + ") is singular");
        }
        out.push_back({min_eigenvalue(c.R[i]), min_eigenvalue(schur)});
    }
    return out;
}

double uniform_convexity(const CostWeights& c) {
    double eps = std::numeric_limits<double>::infinity();
    for (const auto& mg : convexity_margin(c)) eps = std::min({eps, mg.r_min, mg.schur_min});
    return eps;
}

ValidationReport validate_problem(const LQProblem& p) {
    ValidationReport rep;
    const auto m0 = p.regimes();
    bool cost_ok = true;

    for (std::size_t i = 0; i < m0; ++i) {
        const std::string tag = "(" + std::to_string(i + 1) + ")";
        ConvexityMargin mg;
        mg.r_min = min_eigenvalue(p.R(i));
        const double qmin = min_eigenvalue(p.Q(i));
        rep.q_min.push_back(qmin);
        std::ostringstream os;
        if (qmin <= 0.0) {
            os.str("");
            os << "Q" << tag << " not positive definite (min eigenvalue " << qmin << ")";
            rep.messages.push_back(os.str());
            cost_ok = false;
        }
        if (mg.r_min <= 0.0) {
            os.str("");
            os << "R" << tag << " not positive definite (min eigenvalue " << mg.r_min << ")";
            rep.messages.push_back(os.str());
            cost_ok = false;
        }
        Matrix schur;
        if (schur_complement(p.Q(i), p.S(i), p.R(i), schur)) {
            mg.schur_min = min_eigenvalue(schur);
            if (mg.schur_min <= 0.0) {
                os.str("");
                os << "Q - S^T R^-1 S" << tag << " not positive definite (min eigenvalue "
                   << mg.schur_min << ")";
                rep.messages.push_back(os.str());
                cost_ok = false;
            }
        } else {
            mg.schur_min = std::numeric_limits<double>::quiet_NaN();
            rep.messages.push_back("R" + tag + " is singular; Schur complement undefined");
            cost_ok = false;
        }
        rep.a3_margins.push_back(mg);
    }

    rep.generator_ok = true;
    const auto& L = p.generator().lambda;
    for (std::size_t i = 0; i < m0; ++i) {
        const double row_sum = L.row(static_cast<Eigen::Index>(i)).sum();
        if (std::abs(row_sum) > kSymmetryTolerance) {
            std::ostringstream os;
            os << "generator row " << i + 1 << " sums to " << row_sum << " (must be 0)";
            rep.messages.push_back(os.str());
            rep.generator_ok = false;
        }
        for (std::size_t j = 0; j < m0; ++j) {
            if (i != j && !(L(i, j) > 0.0)) {
                std::ostringstream os;
                os << "generator entry (" << i + 1 << "," << j + 1 << ") = " << L(i, j)
                   << " must be strictly positive";
                rep.messages.push_back(os.str());
                rep.generator_ok = false;
            }
        }
    }

    rep.ok = cost_ok && rep.generator_ok;
    return rep;
}

LQProblem apply_feedback_shift(const LQProblem& p, const MatrixFamily& theta) {
    const auto m0 = p.regimes();
    if (theta.size() != m0) {
        throw StructuralError("theta: expected " + std::to_string(m0) + " gains, got " +
                              std::to_string(theta.size()));
    }
    RegimeCoefficients co = p.coeffs();
    CostWeights cw = p.cost();
    for (std::size_t i = 0; i < m0; ++i) {
        const Matrix& Th = theta[i];
        if (static_cast<std::size_t>(Th.rows()) != p.m() ||
            static_cast<std::size_t>(Th.cols()) != p.n()) {
            throw StructuralError("theta(" + std::to_string(i + 1) + "): expected " +
                                  shape_str(p.m(), p.n()) + ", got " + shape_str(Th.rows(), Th.cols()));
        }
        co.A[i] = p.A(i) + p.B(i) * Th;
        co.C[i] = p.C(i) + p.D(i) * Th;
        cw.Q[i] = symmetrize(p.Q(i) + Th.transpose() * p.S(i) + p.S(i).transpose() * Th +
                             Th.transpose() * p.R(i) * Th);
        cw.S[i] = p.S(i) + p.R(i) * Th;
    }
    return LQProblem(p.dims(), std::move(co), std::move(cw), p.generator());
}

double stage_cost(const LQProblem& p, const Vector& x, std::size_t regime, const Vector& u) {
    if (regime >= p.regimes()) throw StructuralError("regime index out of range");
    if (static_cast<std::size_t>(x.size()) != p.n() || static_cast<std::size_t>(u.size()) != p.m()) {
        throw StructuralError("stage_cost: state/control size mismatch");
    }
    return 0.5 * (x.dot(p.Q(regime) * x) + 2.0 * u.dot(p.S(regime) * x) + u.dot(p.R(regime) * u));
}

MatrixFamily zero_gains(const LQProblem& p) {
    return MatrixFamily(p.regimes(), Matrix::Zero(static_cast<Eigen::Index>(p.m()),
                                                  static_cast<Eigen::Index>(p.n())));
}

} // namespace slq
