#include "slq/symmetric.hpp"

#include <cmath>

namespace slq {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

std::size_t svec_size(std::size_t n) { return n * (n + 1) / 2; }

Vector svec(const Matrix& S) {
    const auto n = S.rows();
    Vector v(static_cast<Eigen::Index>(svec_size(static_cast<std::size_t>(n))));
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            v(k++) = (i == j) ? S(i, j) : kSqrt2 * 0.5 * (S(i, j) + S(j, i));
        }
    }
    return v;
}

Matrix smat(const Eigen::Ref<const Vector>& v, std::size_t n_) {
    const auto n = static_cast<Eigen::Index>(n_);
    Matrix S(n, n);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            if (i == j) {
                S(i, i) = v(k++);
            } else {
                S(i, j) = S(j, i) = v(k++) / kSqrt2;
            }
        }
    }
    return S;
}

Vector svec_family(const MatrixFamily& fam) {
    if (fam.empty()) return {};
    const auto block = static_cast<Eigen::Index>(svec_size(static_cast<std::size_t>(fam[0].rows())));
    Vector v(block * static_cast<Eigen::Index>(fam.size()));
    for (std::size_t i = 0; i < fam.size(); ++i) {
        v.segment(static_cast<Eigen::Index>(i) * block, block) = svec(fam[i]);
    }
    return v;
}

MatrixFamily smat_family(const Eigen::Ref<const Vector>& v, std::size_t n, std::size_t m0) {
    const auto block = static_cast<Eigen::Index>(svec_size(n));
    MatrixFamily fam;
    fam.reserve(m0);
    for (std::size_t i = 0; i < m0; ++i) {
        fam.push_back(smat(v.segment(static_cast<Eigen::Index>(i) * block, block), n));
    }
    return fam;
}

Matrix assemble_operator(const FamilyMap& map, std::size_t n, std::size_t m0) {
    const auto dim = static_cast<Eigen::Index>(svec_size(n) * m0);
    Matrix op(dim, dim);
    Vector e = Vector::Zero(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        e(k) = 1.0;
        op.col(k) = svec_family(map(smat_family(e, n, m0)));
        e(k) = 0.0;
    }
    return op;
}

double max_frobenius(const MatrixFamily& fam) {
    double v = 0.0;
    for (const auto& M : fam) v = std::max(v, M.norm());
    return v;
}

MatrixFamily zero_family(std::size_t n, std::size_t m0) {
    const auto nn = static_cast<Eigen::Index>(n);
    return MatrixFamily(m0, Matrix::Zero(nn, nn));
}

} // namespace slq
