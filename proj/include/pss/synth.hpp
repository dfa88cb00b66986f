#pragma once

// Synthetic labeled sphere data with known ground truth.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pss/embedding_set.hpp"
#include "pss/errors.hpp"
#include "pss/linalg.hpp"
#include "pss/random.hpp"
#include "pss/sphere.hpp"
#include "pss/subspace.hpp"
#include "pss/vmf.hpp"

namespace pss {

struct PlantedOptions {
  int classes = 4;
  Eigen::Index n = 500;  // per class
  Eigen::Index d = 32;
  double kappa = 50.0;
  Eigen::Index planted_k = 2;
  std::uint64_t seed = 0;
  /// Isotropic noise is vMF(mu, noise_factor * kappa).
  double noise_factor = 50.0;
};

struct PlantedFixture {
  LabeledEmbeddingSet set;
  UnitVector mu;
  std::vector<Matrix> planted;  // d x planted_k per class, orthonormal, orthogonal to mu
};

inline std::string synth_class_name(int c) { return "class_" + std::to_string(c); }

/// Classes that share a mean direction mu and each vary along their own
/// planted_k-dimensional tangent subspace (mutually orthogonal across
/// classes). Class c's points are Exp_mu(B_c a + e) with a ~ N(0, I/kappa)
/// and e the Log map of an isotropic vMF(mu, noise_factor * kappa) draw.
inline PlantedFixture make_planted_fixture(const PlantedOptions& o) {
  if (o.classes < 1) throw Error(ErrorKind::InvalidArgument, "need at least one class");
  if (o.d < 2) throw Error(ErrorKind::InvalidArgument, "need d >= 2");
  if (o.n < 1) throw Error(ErrorKind::InvalidArgument, "need n >= 1");
  if (o.planted_k < 1) throw Error(ErrorKind::InvalidArgument, "planted-k must be >= 1");
  if (!(o.kappa > 0.0) || !std::isfinite(o.kappa)) {
    throw Error(ErrorKind::InvalidConcentration, "kappa must be positive and finite");
  }
  if (o.classes * o.planted_k > o.d - 1) {
    throw Error(ErrorKind::InvalidArgument, "classes * planted-k must not exceed d - 1");
  }
  Rng rng(o.seed);
  const UnitVector mu = rng.unit_vector(o.d);
  const Matrix tangent = tangent_basis(mu);
  const Matrix rot = random_orthonormal(rng, o.d - 1, o.classes * o.planted_k);
  const Matrix all_bases = tangent * rot;

  const double spread = 1.0 / std::sqrt(o.kappa);
  const double noise_kappa = o.noise_factor * o.kappa;

  std::vector<std::string> names;
  std::vector<Matrix> data;
  std::vector<Matrix> planted;
  for (int c = 0; c < o.classes; ++c) {
    Matrix basis = orthonormalize(all_bases.middleCols(c * o.planted_k, o.planted_k));
    basis -= mu.coords() * (mu.coords().transpose() * basis);
    Matrix x(o.d, o.n);
    for (Eigen::Index j = 0; j < o.n; ++j) {
      const Vector a = spread * rng.normal_vector(o.planted_k);
      const UnitVector noise = sample_vmf_one(mu, noise_kappa, rng);
      const Vector v = basis * a + log_map_raw(mu.coords(), noise.coords());
      x.col(j) = exp_map(TangentVector::project_onto(mu, v)).coords();
    }
    names.push_back(synth_class_name(c));
    data.push_back(std::move(x));
    planted.push_back(std::move(basis));
  }
  return {LabeledEmbeddingSet(std::move(names), std::move(data)), mu, std::move(planted)};
}

/// Ground-truth subspace record for class c of a planted fixture.
inline Subspace planted_subspace(const PlantedFixture& f, const PlantedOptions& o, int c) {
  Subspace s;
  s.class_name = synth_class_name(c);
  s.basis = f.planted.at(static_cast<std::size_t>(c));
  s.base_point = f.mu;
  s.geometry = Geometry::Sphere;
  s.lambda = 0.0;
  s.eigenvalues = Vector::Constant(o.planted_k, 1.0 / o.kappa);
  return s;
}

/// Two-class toy set on S^2 around the north pole. The target class
/// ("blue") spreads along a tangent direction a; the nuisance class ("red")
/// spreads along the perpendicular direction b. The class means are
/// separated along b, so a discriminant direction points along b while a
/// variance-contrast direction points along a.
inline LabeledEmbeddingSet make_contrast_toy(std::uint64_t seed, Eigen::Index n = 200,
                                             double angle_rad = 0.5235987755982988) {
  Rng rng(seed);
  const UnitVector pole{0.0, 0.0, 1.0};
  const Vector a = (Vector(3) << std::cos(angle_rad), std::sin(angle_rad), 0.0).finished();
  const Vector b = (Vector(3) << -std::sin(angle_rad), std::cos(angle_rad), 0.0).finished();

  auto make = [&](const Vector& wide, double wide_sd, const Vector& narrow, double narrow_sd, double offset) {
    Matrix x(3, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Vector v = wide_sd * rng.normal() * wide + narrow_sd * rng.normal() * narrow + offset * b;
      x.col(j) = exp_map(TangentVector::project_onto(pole, v)).coords();
    }
    return x;
  };
  Matrix blue = make(a, 0.3, b, 0.03, 0.1);
  Matrix red = make(b, 0.2, a, 0.02, -0.1);
  return LabeledEmbeddingSet({"blue", "red"}, {std::move(blue), std::move(red)});
}

}  // namespace pss
