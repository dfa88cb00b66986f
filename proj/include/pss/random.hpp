#pragma once

// Seeded sampling with bit-reproducible output across standard libraries.
// std::mt19937_64 is fully specified by the standard, the <random>
// distributions are not, so the few distributions needed here sit on top of
// the raw engine.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "pss/sphere.hpp"

namespace pss {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  /// Standard normal (Box-Muller, one value cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  Vector normal_vector(Eigen::Index d) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal();
    return v;
  }

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    }
    return m;
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang, with the U^{1/a} boost for shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform_open0(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open0();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  UnitVector unit_vector(Eigen::Index d) {
    for (;;) {
      Vector v = normal_vector(d);
      if (v.norm() > 1e-8) return UnitVector(std::move(v));
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// d x k matrix with orthonormal columns drawn from the Haar measure
/// (Gram-Schmidt of a Gaussian matrix).
inline Matrix random_orthonormal(Rng& rng, Eigen::Index d, Eigen::Index k) {
  Matrix g = rng.normal_matrix(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) g.col(j) -= g.col(i).dot(g.col(j)) * g.col(i);
    }
    g.col(j).normalize();
  }
  return g;
}

}  // namespace pss
