#pragma once

// Class-contrastive subspace fitting.
//
// For a target class t the contrast matrix is
//
//   C_t = (1 - lambda)/n_t * Y_t Y_t^T  -  sum_{j != t} lambda/n_j * Y_j Y_j^T
//
// where the columns of Y are the centered embeddings (euclidean) or their
// Log maps at the pooled intrinsic mean (sphere). Maximizing tr(W^T C_t W)
// over orthonormal W has the leading k eigenvectors of C_t as its solution.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pss/embedding_set.hpp"
#include "pss/errors.hpp"
#include "pss/linalg.hpp"
#include "pss/sphere.hpp"
#include "pss/subspace.hpp"

namespace pss {

struct ContrastMatrix {
  Matrix matrix;
  double lambda = 0.5;
  std::string target_class;
};

struct FitOptions {
  /// Euclidean only: subtract the pooled mean before accumulating moments.
  bool center = true;
  /// Weight class j by 1/n_j; when false every column counts once.
  bool class_balanced = true;
  MeanOptions mean;
};

/// Columns above which moment accumulation switches to chunked, compensated sums.
inline constexpr Eigen::Index kCompensatedThreshold = 100000;
inline constexpr Eigen::Index kMomentChunk = 8192;

/// Y Y^T. Large inputs are reduced chunk by chunk in a fixed order with
/// Kahan compensation, so the result only depends on the input.
inline Matrix second_moment(const Eigen::Ref<const Matrix>& y) {
  if (y.cols() <= kCompensatedThreshold) return y * y.transpose();
  const Eigen::Index d = y.rows();
  Matrix sum = Matrix::Zero(d, d);
  Matrix comp = Matrix::Zero(d, d);
  for (Eigen::Index start = 0; start < y.cols(); start += kMomentChunk) {
    const Eigen::Index len = std::min(kMomentChunk, y.cols() - start);
    const Matrix part = y.middleCols(start, len) * y.middleCols(start, len).transpose();
    const Matrix corrected = part - comp;
    const Matrix next = sum + corrected;
    comp = (next - sum) - corrected;
    sum = next;
  }
  return sum;
}

/// Reference frame the class data is expressed in before moments are taken.
struct DataFrame {
  Geometry geometry = Geometry::Sphere;
  std::optional<UnitVector> base_point;  // sphere
  Vector center;                         // euclidean; empty = uncentered
};

/// Y_j for every class of `set` in the given frame.
inline std::vector<Matrix> frame_data(const LabeledEmbeddingSet& set, const DataFrame& frame) {
  std::vector<Matrix> out;
  out.reserve(set.num_classes());
  for (const auto& x : set.all_data()) {
    if (frame.geometry == Geometry::Sphere) {
      if (!frame.base_point) throw Error(ErrorKind::MissingBasePoint, "sphere geometry requires a base point");
      detail::require_same_dim(frame.base_point->dim(), set.dim(), "frame_data");
      out.push_back(log_map_columns(*frame.base_point, x));
    } else if (frame.center.size() > 0) {
      detail::require_same_dim(frame.center.size(), set.dim(), "frame_data");
      out.push_back(x.colwise() - frame.center);
    } else {
      out.push_back(x);
    }
  }
  return out;
}

inline Vector pooled_mean(const LabeledEmbeddingSet& set) {
  Vector m = Vector::Zero(set.dim());
  for (const auto& x : set.all_data()) m += x.rowwise().sum();
  return m / static_cast<double>(set.total_count());
}

/// Frame used by a fit: pooled intrinsic mean (sphere) or pooled Euclidean
/// mean (euclidean, when centering is on).
inline DataFrame fit_frame(const LabeledEmbeddingSet& set, Geometry geometry, const FitOptions& opts) {
  DataFrame f;
  f.geometry = geometry;
  if (geometry == Geometry::Sphere) {
    f.base_point = intrinsic_mean(set.pooled(), opts.mean);
  } else if (opts.center) {
    f.center = pooled_mean(set);
  }
  return f;
}

inline void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::LambdaOutOfRange, "lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
}

inline Matrix contrast_from_frame(const std::vector<Matrix>& y, std::size_t target, double lambda,
                                  bool class_balanced) {
  const Eigen::Index d = y.front().rows();
  Matrix c = Matrix::Zero(d, d);
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double w = class_balanced ? 1.0 / static_cast<double>(y[j].cols()) : 1.0;
    const double coef = j == target ? (1.0 - lambda) * w : -lambda * w;
    if (coef == 0.0) continue;
    c.noalias() += coef * second_moment(y[j]);
  }
  return 0.5 * (c + c.transpose());
}

/// C_target in the supplied frame. For sphere geometry the base point must
/// be given (normally the intrinsic mean of every class pooled).
inline ContrastMatrix build_contrast_matrix(const LabeledEmbeddingSet& set, std::string_view target,
                                            double lambda, const DataFrame& frame,
                                            bool class_balanced = true) {
  const std::size_t t = set.require_index(target);
  check_lambda(lambda);
  if (frame.geometry == Geometry::Sphere && !frame.base_point) {
    throw Error(ErrorKind::MissingBasePoint, "sphere geometry requires a base point");
  }
  return {contrast_from_frame(frame_data(set, frame), t, lambda, class_balanced), lambda, std::string(target)};
}

inline ContrastMatrix build_contrast_matrix(const LabeledEmbeddingSet& set, std::string_view target,
                                            double lambda, Geometry geometry,
                                            const std::optional<UnitVector>& base_point,
                                            const FitOptions& opts = {}) {
  DataFrame f;
  f.geometry = geometry;
  f.base_point = base_point;
  if (geometry == Geometry::Euclidean && opts.center) f.center = pooled_mean(set);
  return build_contrast_matrix(set, target, lambda, f, opts.class_balanced);
}

/// Leading k eigenpairs of a symmetric matrix. With a base point the problem
/// is restricted to the tangent space at it, so the base direction never
/// enters the basis.
inline SymmetricEigen leading_eigenpairs(const Eigen::Ref<const Matrix>& c, Eigen::Index k,
                                         const std::optional<UnitVector>& tangent_at = std::nullopt) {
  const Eigen::Index d = c.rows();
  const Eigen::Index max_k = tangent_at ? d - 1 : d;
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if (k > max_k) {
    throw Error(ErrorKind::KTooLarge,
                "k = " + std::to_string(k) + " exceeds the usable rank " + std::to_string(max_k));
  }
  SymmetricEigen out;
  if (tangent_at) {
    const Matrix q = tangent_basis(*tangent_at);
    const SymmetricEigen inner = symmetric_eigen(q.transpose() * c * q);
    out.values = inner.values.head(k);
    out.vectors = q * inner.vectors.leftCols(k);
  } else {
    const SymmetricEigen full = symmetric_eigen(c);
    out.values = full.values.head(k);
    out.vectors = full.vectors.leftCols(k);
  }
  canonicalize_signs(out.vectors);
  return out;
}

inline Subspace subspace_from_contrast(const Matrix& c, Eigen::Index k, const DataFrame& frame,
                                       std::string class_name, double lambda, bool class_balanced) {
  auto eig = leading_eigenpairs(c, k, frame.geometry == Geometry::Sphere ? frame.base_point : std::nullopt);
  Subspace s;
  s.class_name = std::move(class_name);
  s.basis = std::move(eig.vectors);
  s.eigenvalues = std::move(eig.values);
  s.geometry = frame.geometry;
  s.lambda = lambda;
  s.class_balanced = class_balanced;
  if (frame.geometry == Geometry::Sphere) {
    s.base_point = frame.base_point;
  } else {
    s.center = frame.center;
    s.centered = frame.center.size() > 0;
  }
  return s;
}

/// Fits the k-dimensional subspace of `target` in an explicit frame.
inline Subspace fit_subspace_in_frame(const LabeledEmbeddingSet& set, std::string_view target, double lambda,
                                      Eigen::Index k, const DataFrame& frame, bool class_balanced = true) {
  const auto c = build_contrast_matrix(set, target, lambda, frame, class_balanced);
  return subspace_from_contrast(c.matrix, k, frame, std::string(target), lambda, class_balanced);
}

/// Fits the k-dimensional subspace of `target` against every other class.
inline Subspace fit_subspace(const LabeledEmbeddingSet& set, std::string_view target, double lambda,
                             Eigen::Index k, Geometry geometry, const FitOptions& opts = {}) {
  set.require_index(target);
  check_lambda(lambda);
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  const Eigen::Index max_k = geometry == Geometry::Sphere ? set.dim() - 1 : set.dim();
  if (k > max_k) {
    throw Error(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " exceeds " + std::to_string(max_k));
  }
  return fit_subspace_in_frame(set, target, lambda, k, fit_frame(set, geometry, opts), opts.class_balanced);
}

/// Subspace for a custom theme (columns of `theme`), with every class in
/// `set` acting as negative guidance. The frame is computed over the theme
/// and all classes together.
inline Subspace fit_theme_subspace(const LabeledEmbeddingSet& set, const Matrix& theme, double lambda,
                                   Eigen::Index k, Geometry geometry, const FitOptions& opts = {},
                                   std::string theme_name = "theme") {
  detail::require_same_dim(set.dim(), theme.rows(), "fit_theme_subspace");
  if (k > theme.cols()) {
    throw Error(ErrorKind::KExceedsThemeRank, "k = " + std::to_string(k) + " exceeds the " +
                                                  std::to_string(theme.cols()) + " theme phrases");
  }
  while (set.index_of(theme_name)) theme_name += "_";
  const auto augmented = set.with_class(theme_name, theme);
  return fit_subspace(augmented, theme_name, lambda, k, geometry, opts);
}

/// Keyword selecting the pooled-PCA variant of pca_baseline.
inline constexpr std::string_view kAllClasses = "ALL";

/// Class-specific PCA/PGA (the lambda = 0 fit) or, for target "ALL", PCA of
/// the pooled data with C = sum_j 1/n_j Y_j Y_j^T.
inline Subspace pca_baseline(const LabeledEmbeddingSet& set, std::string_view target, Eigen::Index k,
                             Geometry geometry, const FitOptions& opts = {}) {
  if (target != kAllClasses || set.index_of(target)) return fit_subspace(set, target, 0.0, k, geometry, opts);
  const DataFrame frame = fit_frame(set, geometry, opts);
  const auto y = frame_data(set, frame);
  const Eigen::Index d = set.dim();
  Matrix c = Matrix::Zero(d, d);
  for (const auto& yj : y) {
    const double w = opts.class_balanced ? 1.0 / static_cast<double>(yj.cols()) : 1.0;
    c.noalias() += w * second_moment(yj);
  }
  c = 0.5 * (c + c.transpose());
  return subspace_from_contrast(c, k, frame, std::string(kAllClasses), 0.0, opts.class_balanced);
}

inline Subspace pga_baseline(const LabeledEmbeddingSet& set, std::string_view target, Eigen::Index k,
                             const FitOptions& opts = {}) {
  return pca_baseline(set, target, k, Geometry::Sphere, opts);
}

/// Relative cutoff below which eigenvalues of X1X1^T + X2X2^T are discarded before whitening.
inline constexpr double kFktCutoff = 1e-10;

/// Fukunaga-Koontz transform for two classes (columns of x1, x2, already in
/// the desired frame). Whitens by the summed scatter S = U D U^T, takes the
/// leading eigenvectors of (U D^{-1/2})^T X1 X1^T (U D^{-1/2}) and maps them
/// back with U D^{-1/2}. Passing `tangent_at` tags the result as a sphere
/// subspace at that base point.
inline Subspace fkt_baseline(const Eigen::Ref<const Matrix>& x1, const Eigen::Ref<const Matrix>& x2,
                             Eigen::Index k, const std::optional<UnitVector>& tangent_at = std::nullopt,
                             std::string class_name = "class1") {
  detail::require_same_dim(x1.rows(), x2.rows(), "fkt_baseline");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  const Matrix s1 = second_moment(x1);
  const Matrix sum = s1 + second_moment(x2);
  const SymmetricEigen se = symmetric_eigen(0.5 * (sum + sum.transpose()));

  const double top = se.values.size() ? se.values(0) : 0.0;
  Eigen::Index rank = 0;
  while (rank < se.values.size() && top > 0.0 && se.values(rank) >= kFktCutoff * top) ++rank;
  if (rank < k) {
    throw Error(ErrorKind::RankDeficientSum,
                "summed scatter has usable rank " + std::to_string(rank) + " < k = " + std::to_string(k));
  }
  const Matrix whiten = se.vectors.leftCols(rank) *
                        se.values.head(rank).cwiseSqrt().cwiseInverse().asDiagonal();
  const Matrix inner = whiten.transpose() * s1 * whiten;
  const SymmetricEigen we = symmetric_eigen(0.5 * (inner + inner.transpose()));

  Matrix raw = whiten * we.vectors.leftCols(k);
  if (tangent_at) {
    raw -= tangent_at->coords() * (tangent_at->coords().transpose() * raw);
  }
  Subspace s;
  s.class_name = std::move(class_name);
  s.basis = orthonormalize(raw);
  s.eigenvalues = we.values.head(k);
  s.lambda = 0.0;
  s.geometry = tangent_at ? Geometry::Sphere : Geometry::Euclidean;
  s.base_point = tangent_at;
  return s;
}

/// Relative ridge added to the within-class scatter.
inline constexpr double kFdaRidge = 1e-8;

/// Multi-class Fisher discriminant analysis: leading generalized
/// eigenvectors of (S_between, S_within + ridge), orthonormalized. Sphere
/// geometry runs on the Log maps at the pooled intrinsic mean.
inline Subspace fda_baseline(const LabeledEmbeddingSet& set, Eigen::Index k,
                             Geometry geometry = Geometry::Euclidean, const FitOptions& opts = {}) {
  const auto classes = static_cast<Eigen::Index>(set.num_classes());
  if (classes < 2) throw Error(ErrorKind::InvalidArgument, "FDA needs at least two classes");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if (k > classes - 1) {
    throw Error(ErrorKind::KExceedsFdaRank,
                "k = " + std::to_string(k) + " exceeds classes - 1 = " + std::to_string(classes - 1));
  }
  DataFrame frame;
  frame.geometry = geometry;
  if (geometry == Geometry::Sphere) frame.base_point = intrinsic_mean(set.pooled(), opts.mean);
  const auto y = frame_data(set, frame);
  const Eigen::Index d = set.dim();

  Vector grand = Vector::Zero(d);
  Eigen::Index total = 0;
  for (const auto& yj : y) {
    grand += yj.rowwise().sum();
    total += yj.cols();
  }
  grand /= static_cast<double>(total);

  Matrix between = Matrix::Zero(d, d);
  Matrix within = Matrix::Zero(d, d);
  for (const auto& yj : y) {
    const Vector m = yj.rowwise().mean();
    const Vector dm = m - grand;
    between.noalias() += static_cast<double>(yj.cols()) * dm * dm.transpose();
    const Matrix centered = yj.colwise() - m;
    within.noalias() += second_moment(centered);
  }
  between = 0.5 * (between + between.transpose());
  within = 0.5 * (within + within.transpose());
  const double scale = within.trace() > 0.0 ? within.trace() / static_cast<double>(d) : 1.0;
  within += kFdaRidge * scale * Matrix::Identity(d, d);
  if (geometry == Geometry::Sphere) {
    // keep the solve inside the tangent space
    const Matrix q = tangent_basis(*frame.base_point);
    between = q.transpose() * between * q;
    within = q.transpose() * within * q;
  }

  Eigen::LLT<Matrix> llt(within);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularWithinScatter, "within-class scatter is not positive definite");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(between, within);
  if (ges.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "generalized eigensolver failed");
  const Vector vals = ges.eigenvalues().reverse();
  Matrix vecs = ges.eigenvectors().rowwise().reverse().leftCols(k);
  if (geometry == Geometry::Sphere) vecs = tangent_basis(*frame.base_point) * vecs;

  Subspace s;
  s.class_name = "FDA";
  s.basis = orthonormalize(vecs);
  s.eigenvalues = vals.head(k);
  s.lambda = 0.0;
  s.geometry = geometry;
  s.base_point = frame.base_point;
  return s;
}

}  // namespace pss
