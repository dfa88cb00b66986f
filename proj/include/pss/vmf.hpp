#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "pss/errors.hpp"
#include "pss/random.hpp"
#include "pss/sphere.hpp"

namespace pss {

/// Draws one von Mises-Fisher sample using a caller-owned generator.
///
/// The cosine w to the mean direction comes from Wood's rejection sampler;
/// the remaining direction is uniform in the tangent space.
inline UnitVector sample_vmf_one(const UnitVector& mean_direction, double concentration, Rng& rng) {
  const Eigen::Index d = mean_direction.dim();
  const double m1 = static_cast<double>(d - 1);
  const double kappa = concentration;
  // b = (m1) / (2 kappa + sqrt(4 kappa^2 + m1^2)), the cancellation-free form
  const double b = m1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m1 * m1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m1 * std::log1p(-x0 * x0);

  double w = 0.0;
  for (;;) {
    const double z = rng.beta(0.5 * m1, 0.5 * m1);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = rng.uniform_open0();
    if (kappa * w + m1 * std::log1p(-x0 * w) - c >= std::log(u)) break;
  }
  w = std::clamp(w, -1.0, 1.0);

  const Vector& mu = mean_direction.coords();
  Vector v;
  do {
    v = rng.normal_vector(d);
    v -= v.dot(mu) * mu;
  } while (v.norm() < 1e-10);
  v.normalize();
  return UnitVector(w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v);
}

/// n samples from vMF(mean_direction, concentration) as columns; the same
/// seed always gives the same bits.
inline Matrix sample_vmf(const UnitVector& mean_direction, double concentration, Eigen::Index n,
                         std::uint64_t seed) {
  if (!(concentration >= 0.0) || !std::isfinite(concentration)) {
    throw Error(ErrorKind::InvalidConcentration, "concentration must be finite and >= 0");
  }
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "negative sample count");
  Rng rng(seed);
  Matrix out(mean_direction.dim(), n);
  for (Eigen::Index j = 0; j < n; ++j) out.col(j) = sample_vmf_one(mean_direction, concentration, rng).coords();
  return out;
}

}  // namespace pss
