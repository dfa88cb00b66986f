#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "pss/errors.hpp"
#include "pss/sphere.hpp"

namespace pss {

/// Eigenpairs of a symmetric matrix, eigenvalues non-increasing.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;  // column i pairs with values(i)
};

/// Flips each column so that its entry of largest magnitude is positive
/// (first such entry on exact ties).
inline void canonicalize_signs(Matrix& cols) {
  for (Eigen::Index j = 0; j < cols.cols(); ++j) {
    Eigen::Index arg = 0;
    cols.col(j).cwiseAbs().maxCoeff(&arg);
    if (cols(arg, j) < 0.0) cols.col(j) = -cols.col(j);
  }
}

/// Dense symmetric eigendecomposition, sorted descending with canonical signs.
/// Near-equal eigenvalues keep the solver's output order.
inline SymmetricEigen symmetric_eigen(const Eigen::Ref<const Matrix>& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "matrix is not square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::NoConvergence, "symmetric eigensolver failed");
  }
  // Eigen returns ascending order; reverse.
  SymmetricEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  canonicalize_signs(out.vectors);
  return out;
}

/// Orthonormal basis (d x (d-1)) of the orthogonal complement of `mu`, taken
/// from a Householder reflection that maps mu onto the first coordinate axis.
inline Matrix tangent_basis(const UnitVector& mu) {
  const Eigen::Index d = mu.dim();
  Vector v = mu.coords();
  const double sign = v(0) >= 0.0 ? 1.0 : -1.0;
  v(0) += sign;
  const double vv = v.squaredNorm();
  Matrix h = Matrix::Identity(d, d) - (2.0 / vv) * v * v.transpose();
  return h.rightCols(d - 1);
}

/// Thin QR orthonormalization of the columns of `a`; preserves the nested
/// spans of leading columns. Signs are canonicalized afterwards.
inline Matrix orthonormalize(const Eigen::Ref<const Matrix>& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  canonicalize_signs(q);
  return q;
}

/// Principal angles (radians, ascending) between span(a) and span(b), both
/// with orthonormal columns and equal column counts. Small angles come from
/// sines of (I - AA^T)B and large ones from cosines of A^T B, so both ends
/// of the range are resolved to working precision.
inline std::vector<double> principal_angles(const Eigen::Ref<const Matrix>& a,
                                            const Eigen::Ref<const Matrix>& b) {
  detail::require_same_dim(a.rows(), b.rows(), "principal_angles");
  detail::require_same_dim(a.cols(), b.cols(), "principal_angles");
  const Eigen::Index k = a.cols();

  const Matrix cross = a.transpose() * b;
  Eigen::JacobiSVD<Matrix> cos_svd(cross);
  Vector cosines = cos_svd.singularValues();  // descending

  const Matrix residual = b - a * cross;
  Eigen::JacobiSVD<Matrix> sin_svd(residual);
  Vector sines = sin_svd.singularValues();  // descending, length min(d, k)

  std::vector<double> angles(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    // i-th smallest angle pairs with the i-th largest cosine and i-th smallest sine
    const Eigen::Index si = k - 1 - i;
    const double s = si < sines.size() ? std::clamp(sines(si), 0.0, 1.0) : 0.0;
    angles[static_cast<std::size_t>(i)] = c * c < 0.5 ? std::acos(c) : std::asin(s);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

inline double max_principal_angle(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  const auto angles = principal_angles(a, b);
  return angles.empty() ? 0.0 : angles.back();
}

}  // namespace pss
