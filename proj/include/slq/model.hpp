#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace slq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One matrix per regime, indexed 0..m0-1.
using MatrixFamily = std::vector<Matrix>;

inline constexpr double kSymmetryTolerance = 1e-12;

struct Dimensions {
    std::size_t n = 0;  ///< state dimension
    std::size_t m = 0;  ///< control dimension
    std::size_t m0 = 0; ///< number of regimes
};

struct RegimeCoefficients {
    MatrixFamily A; ///< n x n drift
    MatrixFamily B; ///< n x m control drift
    MatrixFamily C; ///< n x n diffusion
    MatrixFamily D; ///< n x m control diffusion
};

struct CostWeights {
    MatrixFamily Q; ///< n x n
    MatrixFamily S; ///< m x n
    MatrixFamily R; ///< m x m
};

/// Rate matrix of the regime chain. Not validated on construction; the
/// generator properties are a check reported by validate_problem.
struct SwitchingGenerator {
    Matrix lambda;

    std::size_t regimes() const { return static_cast<std::size_t>(lambda.rows()); }
    double rate(std::size_t from, std::size_t to) const { return lambda(from, to); }
};

/// Full instance of the switched LQ problem. Construction checks shapes and
/// finiteness and symmetrizes Q and R; it throws StructuralError otherwise.
/// Everything else (positivity, generator structure) is left to validate_problem.
class LQProblem {
public:
    LQProblem(Dimensions dims, RegimeCoefficients coeffs, CostWeights cost,
              SwitchingGenerator generator);

    const Dimensions& dims() const { return dims_; }
    const RegimeCoefficients& coeffs() const { return coeffs_; }
    const CostWeights& cost() const { return cost_; }
    const SwitchingGenerator& generator() const { return generator_; }

    std::size_t n() const { return dims_.n; }
    std::size_t m() const { return dims_.m; }
    std::size_t regimes() const { return dims_.m0; }

    const Matrix& A(std::size_t i) const { return coeffs_.A[i]; }
    const Matrix& B(std::size_t i) const { return coeffs_.B[i]; }
    const Matrix& C(std::size_t i) const { return coeffs_.C[i]; }
    const Matrix& D(std::size_t i) const { return coeffs_.D[i]; }
    const Matrix& Q(std::size_t i) const { return cost_.Q[i]; }
    const Matrix& S(std::size_t i) const { return cost_.S[i]; }
    const Matrix& R(std::size_t i) const { return cost_.R[i]; }

private:
    Dimensions dims_;
    RegimeCoefficients coeffs_;
    CostWeights cost_;
    SwitchingGenerator generator_;
};

/// Single-regime scalar instance (n = m = m0 = 1).
LQProblem scalar_problem(double a, double b, double c, double d, double q, double s, double r);

struct InitialTriple {
    double t = 0.0;
    Vector x;
    std::size_t regime = 0; ///< 0-based
};

struct ConvexityMargin {
    double r_min = 0.0;     ///< smallest eigenvalue of R
    double schur_min = 0.0; ///< smallest eigenvalue of Q - S^T R^{-1} S
};

struct ValidationReport {
    bool ok = false;
    std::vector<ConvexityMargin> a3_margins; ///< schur_min is NaN when R is singular
    std::vector<double> q_min;               ///< smallest eigenvalue of Q per regime
    bool generator_ok = false;
    std::vector<std::string> messages;
};

ValidationReport validate_problem(const LQProblem& p);

/// Throws NumericalError(singular_matrix) naming the regime when R is singular.
std::vector<ConvexityMargin> convexity_margin(const CostWeights& c);

/// Smallest convexity constant over all regimes and both margins.
double uniform_convexity(const CostWeights& c);

/// Feedback-shifted problem: A+BΘ, C+DΘ, Q+ΘᵀS+SᵀΘ+ΘᵀRΘ, S+RΘ.
LQProblem apply_feedback_shift(const LQProblem& p, const MatrixFamily& theta);

/// ½(xᵀQx + 2uᵀSx + uᵀRu) in the given (0-based) regime.
double stage_cost(const LQProblem& p, const Vector& x, std::size_t regime, const Vector& u);

/// Zero gains of shape m x n for every regime.
MatrixFamily zero_gains(const LQProblem& p);

/// Symmetric part (P + Pᵀ)/2.
inline Matrix symmetrize(const Matrix& P) { return 0.5 * (P + P.transpose()); }

double min_eigenvalue(const Matrix& symmetric);
double max_eigenvalue(const Matrix& symmetric);

} // namespace slq
