#pragma once

// Applying fitted subspaces to single embeddings.
//
//   sphere:     Pi(z)  = Exp_mu(W W^T Log_mu(z))
//               Pi⊥(z) = Exp_mu((I - W W^T) Log_mu(z))
//   euclidean:  P z = W W^T z,  P⊥ z = (I - W W^T) z
//
// The sphere maps are the usual tangent-space approximation of a projection
// onto a geodesic submanifold. Euclidean outputs are re-normalized for the
// UnitVector overloads; the *_raw variants return the unscaled vector.

#include "pss/errors.hpp"
#include "pss/sphere.hpp"
#include "pss/subspace.hpp"

namespace pss {

namespace detail {

inline Vector tangent_part(const Subspace& sub, const Vector& log_z, bool complement) {
  const Vector inside = sub.basis * (sub.basis.transpose() * log_z);
  return complement ? Vector(log_z - inside) : inside;
}

inline Vector apply_projection(const Subspace& sub, const UnitVector& z, bool complement) {
  detail::require_same_dim(sub.dim(), z.dim(), "project");
  if (sub.geometry == Geometry::Sphere) {
    const UnitVector& mu = sub.require_base_point();
    const Vector v = tangent_part(sub, log_map_raw(mu.coords(), z.coords()), complement);
    return exp_map(TangentVector::project_onto(mu, v)).coords();
  }
  return tangent_part(sub, z.coords(), complement);
}

}  // namespace detail

/// Pi_i(z) (sphere) or W W^T z (euclidean, unnormalized).
inline Vector project_raw(const Subspace& sub, const UnitVector& z) {
  return detail::apply_projection(sub, z, false);
}

inline Vector project_complement_raw(const Subspace& sub, const UnitVector& z) {
  return detail::apply_projection(sub, z, true);
}

inline UnitVector project(const Subspace& sub, const UnitVector& z) { return UnitVector(project_raw(sub, z)); }

inline UnitVector project_complement(const Subspace& sub, const UnitVector& z) {
  return UnitVector(project_complement_raw(sub, z));
}

/// W^T Log_mu(z) for sphere subspaces, W^T (z - center) for euclidean ones.
inline Vector tangent_coordinates(const Subspace& sub, const UnitVector& z) {
  detail::require_same_dim(sub.dim(), z.dim(), "tangent_coordinates");
  if (sub.geometry == Geometry::Sphere) {
    return sub.basis.transpose() * log_map_raw(sub.require_base_point().coords(), z.coords());
  }
  if (sub.centered) {
    if (sub.center.size() == 0) {
      throw Error(ErrorKind::InvalidArgument, "centered euclidean subspace has no stored center");
    }
    return sub.basis.transpose() * (z.coords() - sub.center);
  }
  return sub.basis.transpose() * z.coords();
}

/// Strict variant that refuses euclidean subspaces.
inline Vector sphere_tangent_coordinates(const Subspace& sub, const UnitVector& z) {
  if (sub.geometry != Geometry::Sphere) {
    throw Error(ErrorKind::GeometryMismatch, "tangent coordinates need a sphere subspace");
  }
  return tangent_coordinates(sub, z);
}

}  // namespace pss
