#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pss/errors.hpp"
#include "pss/sphere.hpp"

namespace pss {

enum class Geometry { Sphere, Euclidean };

constexpr std::string_view to_string(Geometry g) noexcept {
  return g == Geometry::Sphere ? "sphere" : "euclidean";
}

inline Geometry parse_geometry(std::string_view s) {
  if (s == "sphere") return Geometry::Sphere;
  if (s == "euclidean") return Geometry::Euclidean;
  throw Error(ErrorKind::InvalidArgument, "unknown geometry '" + std::string(s) + "'");
}

/// A fitted class subspace.
///
/// For sphere geometry the basis lives in the tangent space at `base_point`
/// (the pooled intrinsic mean). For euclidean geometry `centered` records
/// whether the pooled mean was subtracted before fitting, and `center` holds
/// that mean when it is known. Subspaces read from disk carry the flag only.
struct Subspace {
  static constexpr double kOrthoTol = 1e-8;

  std::string class_name;
  Matrix basis;  // d x k, orthonormal columns
  std::optional<UnitVector> base_point;
  Geometry geometry = Geometry::Sphere;
  double lambda = 0.5;
  Vector eigenvalues;  // k, non-increasing
  bool centered = false;  // euclidean only
  Vector center;          // size 0 or d; only when centered
  bool class_balanced = true;

  Eigen::Index dim() const noexcept { return basis.rows(); }
  Eigen::Index k() const noexcept { return basis.cols(); }

  const UnitVector& require_base_point() const {
    if (!base_point) throw Error(ErrorKind::MissingBasePoint, "sphere subspace without base point");
    return *base_point;
  }

  /// Throws CorruptPayload (the error a reader would report) on any broken invariant.
  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::CorruptPayload, "subspace: " + m); };
    if (basis.rows() < 2) fail("dimension must be >= 2");
    if (basis.cols() < 1) fail("k must be >= 1");
    if (basis.cols() > basis.rows()) fail("k exceeds d");
    if (eigenvalues.size() != basis.cols()) fail("eigenvalue count differs from k");
    if (!basis.allFinite() || !eigenvalues.allFinite()) fail("non-finite entries");
    if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda outside [0, 1]");
    for (Eigen::Index i = 1; i < eigenvalues.size(); ++i) {
      if (eigenvalues(i) > eigenvalues(i - 1)) fail("eigenvalues not sorted descending");
    }
    const Matrix gram = basis.transpose() * basis;
    if ((gram - Matrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff() > kOrthoTol) {
      fail("basis columns are not orthonormal");
    }
    if (geometry == Geometry::Sphere) {
      if (!base_point) fail("sphere subspace needs a base point");
      if (base_point->dim() != basis.rows()) fail("base point dimension mismatch");
      if ((basis.transpose() * base_point->coords()).cwiseAbs().maxCoeff() > kOrthoTol) {
        fail("basis is not orthogonal to the base point");
      }
      if (centered || center.size() != 0) fail("sphere subspace carries a euclidean center");
    } else {
      if (base_point) fail("euclidean subspace carries a base point");
      if (center.size() != 0 && !centered) fail("uncentered subspace carries a center");
      if (center.size() != 0 && center.size() != basis.rows()) fail("center dimension mismatch");
    }
  }
};

}  // namespace pss
