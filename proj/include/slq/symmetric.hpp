#pragma once

#include <functional>

#include "slq/model.hpp"

namespace slq {

// Scaled upper-triangle vectorization of symmetric matrices: diagonal entries
// as-is, off-diagonal entries times sqrt(2). It is an isometry for the
// Frobenius inner product, so a linear map on symmetric families becomes a
// matrix similar to the map itself.

std::size_t svec_size(std::size_t n);

Vector svec(const Matrix& S);
Matrix smat(const Eigen::Ref<const Vector>& v, std::size_t n);

/// Concatenated svec of every regime matrix.
Vector svec_family(const MatrixFamily& fam);
MatrixFamily smat_family(const Eigen::Ref<const Vector>& v, std::size_t n, std::size_t m0);

/// Matrix of a linear map on m0-tuples of symmetric n x n matrices, in the
/// scaled basis.
using FamilyMap = std::function<MatrixFamily(const MatrixFamily&)>;
Matrix assemble_operator(const FamilyMap& map, std::size_t n, std::size_t m0);

/// Frobenius norm, maximised over regimes.
double max_frobenius(const MatrixFamily& fam);

MatrixFamily zero_family(std::size_t n, std::size_t m0);

} // namespace slq
