#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pss/embedding_set.hpp"
#include "pss/errors.hpp"
#include "pss/projection.hpp"
#include "pss/solver.hpp"
#include "pss/subspace.hpp"

namespace pss {

/// values(i, j) = (1/n_j) ||W_i^T Y_j||_F^2: how much of class j's spread
/// survives in subspace i. Rows follow `row_names`, columns follow `classes`.
struct InvarianceMatrix {
  std::vector<std::string> row_names;
  std::vector<std::string> classes;
  Matrix values;
  bool row_normalized = false;
};

namespace detail {

/// The data frame `s` was fitted in. A centered euclidean subspace without a
/// stored center (as read from disk) is re-centered at the pooled mean of `set`.
inline DataFrame frame_of(const Subspace& s, const LabeledEmbeddingSet& set) {
  DataFrame f;
  f.geometry = s.geometry;
  if (s.geometry == Geometry::Sphere) {
    f.base_point = s.require_base_point();
  } else if (s.centered) {
    f.center = s.center.size() ? s.center : pooled_mean(set);
  }
  return f;
}

inline bool same_frame(const Subspace& a, const Subspace& b) {
  if (a.geometry != b.geometry || a.dim() != b.dim()) return false;
  if (a.geometry == Geometry::Sphere) {
    return (a.require_base_point().coords() - b.require_base_point().coords()).cwiseAbs().maxCoeff() <= 1e-12;
  }
  if (a.centered != b.centered) return false;
  if (a.center.size() == 0 || b.center.size() == 0) return true;
  return (a.center - b.center).cwiseAbs().maxCoeff() <= 1e-12;
}

}  // namespace detail

/// Divides each row by its maximum (rows whose maximum is zero are left alone).
inline void row_normalize(InvarianceMatrix& m) {
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    const double mx = m.values.row(i).maxCoeff();
    if (mx > 0.0) m.values.row(i) /= mx;
  }
  m.row_normalized = true;
}

inline InvarianceMatrix invariance_matrix(const std::vector<Subspace>& subspaces, const LabeledEmbeddingSet& set,
                                          bool normalize_rows) {
  if (subspaces.empty()) throw Error(ErrorKind::InvalidArgument, "no subspaces given");
  const Subspace& first = subspaces.front();
  for (const auto& s : subspaces) {
    detail::require_same_dim(s.dim(), set.dim(), "invariance_matrix");
    if (s.geometry != first.geometry) throw Error(ErrorKind::GeometryMismatch, "subspaces mix geometries");
    if (!detail::same_frame(s, first)) {
      throw Error(ErrorKind::BasePointMismatch, "subspaces were fitted at different base points");
    }
  }
  const auto y = frame_data(set, detail::frame_of(first, set));

  InvarianceMatrix out;
  out.classes = set.classes();
  out.values = Matrix::Zero(static_cast<Eigen::Index>(subspaces.size()), static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < subspaces.size(); ++i) {
    out.row_names.push_back(subspaces[i].class_name);
    for (std::size_t j = 0; j < y.size(); ++j) {
      const Matrix coords = subspaces[i].basis.transpose() * y[j];
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          coords.squaredNorm() / static_cast<double>(y[j].cols());
    }
  }
  if (normalize_rows) row_normalize(out);
  return out;
}

inline double cosine_similarity(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  detail::require_same_dim(a.size(), b.size(), "cosine_similarity");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::ZeroVector, "cosine similarity of a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

/// Softmax of logit_scale * similarities (CLIP uses a scale of 100).
inline Vector softmax(const Eigen::Ref<const Vector>& sims, double logit_scale = 100.0) {
  const Vector z = logit_scale * sims;
  const double m = z.maxCoeff();
  Vector e = (z.array() - m).exp().matrix();
  return e / e.sum();
}

struct ClassAccuracy {
  Eigen::Index correct = 0;
  Eigen::Index total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct ClassificationReport {
  std::string dataset_name;
  double top1 = 0.0;
  std::map<std::string, ClassAccuracy> per_class;
  Eigen::Index n_samples = 0;
  /// Predicted label index per image, in image order (class order, then column).
  std::vector<Eigen::Index> predictions;
  /// Per-image softmax over labels; filled only when requested.
  std::vector<Vector> probabilities;
};

struct ClassifyOptions {
  std::string dataset_name = "dataset";
  bool with_probabilities = false;
  double logit_scale = 100.0;
};

/// Assigns each image the label whose text embedding is most cosine-similar
/// to it (optionally after projecting the image onto `sub`). Ties go to the
/// lowest label index.
inline ClassificationReport zero_shot_classify(const LabeledEmbeddingSet& images, const Matrix& label_texts,
                                               const std::vector<std::string>& label_names,
                                               const std::optional<Subspace>& sub = std::nullopt,
                                               const ClassifyOptions& opts = {}) {
  if (static_cast<Eigen::Index>(label_names.size()) != label_texts.cols()) {
    throw Error(ErrorKind::LabelMismatch, "label names and label embeddings differ in count");
  }
  if (label_texts.cols() < 1) throw Error(ErrorKind::LabelMismatch, "no labels given");
  detail::require_same_dim(images.dim(), label_texts.rows(), "zero_shot_classify");
  if (sub) detail::require_same_dim(images.dim(), sub->dim(), "zero_shot_classify");

  std::vector<Eigen::Index> truth(images.num_classes());
  for (std::size_t c = 0; c < images.num_classes(); ++c) {
    auto it = std::find(label_names.begin(), label_names.end(), images.classes()[c]);
    if (it == label_names.end()) {
      throw Error(ErrorKind::LabelMismatch, "image class '" + images.classes()[c] + "' has no label text");
    }
    truth[c] = it - label_names.begin();
  }
  Matrix texts = label_texts;
  for (Eigen::Index j = 0; j < texts.cols(); ++j) {
    const double n = texts.col(j).norm();
    if (n == 0.0) throw Error(ErrorKind::ZeroVector, "zero label embedding");
    texts.col(j) /= n;
  }

  ClassificationReport rep;
  rep.dataset_name = opts.dataset_name;
  Eigen::Index correct_total = 0;
  for (std::size_t c = 0; c < images.num_classes(); ++c) {
    const Matrix& x = images.data(c);
    ClassAccuracy& acc = rep.per_class[images.classes()[c]];
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const UnitVector z(x.col(j));
      Vector q = sub ? project_raw(*sub, z) : z.coords();
      const double qn = q.norm();
      if (qn == 0.0) throw Error(ErrorKind::ZeroVector, "projected image embedding is zero");
      const Vector sims = texts.transpose() * (q / qn);
      Eigen::Index best = 0;
      for (Eigen::Index l = 1; l < sims.size(); ++l) {
        if (sims(l) > sims(best)) best = l;
      }
      rep.predictions.push_back(best);
      if (opts.with_probabilities) rep.probabilities.push_back(softmax(sims, opts.logit_scale));
      ++acc.total;
      if (best == truth[c]) {
        ++acc.correct;
        ++correct_total;
      }
    }
  }
  rep.n_samples = static_cast<Eigen::Index>(rep.predictions.size());
  rep.top1 = rep.n_samples ? static_cast<double>(correct_total) / static_cast<double>(rep.n_samples) : 0.0;
  return rep;
}

/// tr(W^T C W) with C rebuilt from `set` in the subspace's own frame.
inline double objective_value(const Subspace& sub, const LabeledEmbeddingSet& set) {
  detail::require_same_dim(sub.dim(), set.dim(), "objective_value");
  const auto c = build_contrast_matrix(set, sub.class_name, sub.lambda, detail::frame_of(sub, set), sub.class_balanced);
  return (sub.basis.transpose() * c.matrix * sub.basis).trace();
}

/// tr(W^T C W) for an arbitrary orthonormal basis and contrast matrix.
inline double objective_value(const Eigen::Ref<const Matrix>& basis, const Eigen::Ref<const Matrix>& c) {
  return (basis.transpose() * c * basis).trace();
}

}  // namespace pss
