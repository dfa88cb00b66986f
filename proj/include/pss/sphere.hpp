#pragma once

// Exact primitives on the unit hypersphere S^{d-1}: Log/Exp maps at a base
// point, geodesic distance and the intrinsic (Frechet) mean.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pss/errors.hpp"

namespace pss {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* where) {
  if (a != b) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(where) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

inline double clamp_unit(double c) { return std::clamp(c, -1.0, 1.0); }

// Columns that are unit length to ~1e-14 are passed through bit-for-bit.
inline Vector normalized(const Eigen::Ref<const Vector>& v) {
  const double n = v.norm();
  if (std::abs(n - 1.0) <= 1e-14) return v;
  return v / n;
}

}  // namespace detail

/// A point on S^{d-1}. Construction normalizes; inputs that are already unit
/// length (to ~1e-14) keep their exact bits so files round-trip unchanged.
class UnitVector {
 public:
  static constexpr double kZeroNorm = 1e-12;

  explicit UnitVector(Vector coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) {
      throw Error(ErrorKind::InvalidArgument, "unit vectors need d >= 2");
    }
    const double n = coords_.norm();
    if (!std::isfinite(n) || n < kZeroNorm) {
      throw Error(ErrorKind::ZeroVector, "cannot normalize a (near-)zero or non-finite vector");
    }
    if (std::abs(n - 1.0) > 1e-14) coords_ /= n;
  }

  UnitVector(std::initializer_list<double> xs)
      : UnitVector(Eigen::Map<const Vector>(xs.begin(), static_cast<Eigen::Index>(xs.size()))) {}

  const Vector& coords() const noexcept { return coords_; }
  Eigen::Index dim() const noexcept { return coords_.size(); }
  double operator[](Eigen::Index i) const { return coords_(i); }
  double dot(const UnitVector& o) const {
    detail::require_same_dim(dim(), o.dim(), "dot");
    return coords_.dot(o.coords_);
  }

  friend bool operator==(const UnitVector& a, const UnitVector& b) {
    return a.coords_.size() == b.coords_.size() && a.coords_ == b.coords_;
  }

 private:
  Vector coords_;
};

/// An element of the tangent space T_base S^{d-1}.
class TangentVector {
 public:
  static constexpr double kTangencyTol = 1e-8;

  /// Validating constructor: `vec` must already be orthogonal to `base`.
  TangentVector(UnitVector base, Vector vec) : base_(std::move(base)), vec_(std::move(vec)) {
    detail::require_same_dim(base_.dim(), vec_.size(), "TangentVector");
    const double off = std::abs(vec_.dot(base_.coords()));
    if (off > kTangencyTol * vec_.norm() && off > 0.0) {
      throw Error(ErrorKind::NotTangent, "vector has a component along the base point");
    }
  }

  /// Removes the component of `v` along `base` and wraps the remainder.
  static TangentVector project_onto(const UnitVector& base, Vector v) {
    detail::require_same_dim(base.dim(), v.size(), "TangentVector::project_onto");
    v -= v.dot(base.coords()) * base.coords();
    v -= v.dot(base.coords()) * base.coords();
    return TangentVector(base, std::move(v));
  }

  const UnitVector& base() const noexcept { return base_; }
  const Vector& vec() const noexcept { return vec_; }
  double norm() const { return vec_.norm(); }

 private:
  UnitVector base_;
  Vector vec_;
};

inline constexpr double kAntipodalTol = 1e-9;
inline constexpr double kIdentityTol = 1e-12;

/// Angle between p and q in radians, in [0, pi].
inline double geodesic_distance(const UnitVector& p, const UnitVector& q) {
  return std::acos(detail::clamp_unit(p.dot(q)));
}

/// Log_p(z) = arccos(z.p) (I - pp^T)(z - p) / ||(I - pp^T)(z - p)||.
/// The angle is evaluated as atan2(|u|, z.p), which equals the arccos but
/// stays accurate when z is close to p.
inline Vector log_map_raw(const Vector& p, const Vector& z) {
  detail::require_same_dim(p.size(), z.size(), "log_map");
  const double c = detail::clamp_unit(z.dot(p));
  if (c <= -1.0 + kAntipodalTol) {
    throw Error(ErrorKind::AntipodalPoint, "log map undefined at the antipode of the base point");
  }
  if (c >= 1.0 - kIdentityTol) return Vector::Zero(p.size());
  // (I - pp^T)(z - p) = z - (z.p) p
  Vector u = z - c * p;
  u -= u.dot(p) * p;
  const double s = u.norm();
  if (s == 0.0) return Vector::Zero(p.size());
  const double theta = std::atan2(s, c);
  return (theta / s) * u;
}

inline TangentVector log_map(const UnitVector& p, const UnitVector& z) {
  return TangentVector(p, log_map_raw(p.coords(), z.coords()));
}

/// Exp_p(v) = cos(|v|) p + sin(|v|) v/|v|; rejects |v| >= pi where the map wraps.
inline UnitVector exp_map(const TangentVector& v) {
  const double n = v.norm();
  if (n < kIdentityTol) return v.base();
  if (n >= std::numbers::pi - kAntipodalTol) {
    throw Error(ErrorKind::TangentNormTooLarge,
                "tangent norm " + std::to_string(n) + " reaches pi");
  }
  return UnitVector(std::cos(n) * v.base().coords() + (std::sin(n) / n) * v.vec());
}

struct MeanOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

/// Log-maps every column of `points` (unit columns) at `base`.
inline Matrix log_map_columns(const UnitVector& base, const Eigen::Ref<const Matrix>& points) {
  detail::require_same_dim(base.dim(), points.rows(), "log_map_columns");
  Matrix out(points.rows(), points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const Vector z = detail::normalized(points.col(j));
    out.col(j) = log_map_raw(base.coords(), z);
  }
  return out;
}

/// Intrinsic mean of unit columns by the fixed-point iteration
/// mu <- Exp_mu(mean_n Log_mu(x_n)), started at the normalized Euclidean mean.
/// On return the tangent-space average of the Log-mapped points has norm <= tol.
inline UnitVector intrinsic_mean(const Eigen::Ref<const Matrix>& points, const MeanOptions& opts = {}) {
  if (points.cols() < 1) throw Error(ErrorKind::InvalidArgument, "intrinsic_mean of an empty set");
  if (points.rows() < 2) throw Error(ErrorKind::InvalidArgument, "intrinsic_mean needs d >= 2");

  Vector start = Vector::Zero(points.rows());
  for (Eigen::Index j = 0; j < points.cols(); ++j) start += detail::normalized(points.col(j));
  if (start.norm() < 1e-8) start = points.col(0);
  UnitVector mu(start);

  const double inv_n = 1.0 / static_cast<double>(points.cols());
  for (int it = 0; it <= opts.max_iter; ++it) {
    Vector step = Vector::Zero(points.rows());
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      step += log_map_raw(mu.coords(), detail::normalized(points.col(j)));
    }
    step *= inv_n;
    if (step.norm() <= opts.tol) return mu;
    if (it == opts.max_iter) break;
    mu = exp_map(TangentVector::project_onto(mu, std::move(step)));
  }
  throw Error(ErrorKind::NoConvergence,
              "intrinsic mean did not converge in " + std::to_string(opts.max_iter) + " iterations");
}

inline UnitVector intrinsic_mean(std::span<const UnitVector> points, const MeanOptions& opts = {}) {
  if (points.empty()) throw Error(ErrorKind::InvalidArgument, "intrinsic_mean of an empty set");
  Matrix m(points.front().dim(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t j = 0; j < points.size(); ++j) {
    detail::require_same_dim(m.rows(), points[j].dim(), "intrinsic_mean");
    m.col(static_cast<Eigen::Index>(j)) = points[j].coords();
  }
  return intrinsic_mean(m, opts);
}

}  // namespace pss
