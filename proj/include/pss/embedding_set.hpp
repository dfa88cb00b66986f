#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pss/errors.hpp"
#include "pss/sphere.hpp"

namespace pss {

/// Per-class matrices X_i (d x n_i) of unit-norm embeddings, in class order.
class LabeledEmbeddingSet {
 public:
  static constexpr double kUnitTol = 1e-6;

  LabeledEmbeddingSet(std::vector<std::string> classes, std::vector<Matrix> data)
      : classes_(std::move(classes)), data_(std::move(data)) {
    if (classes_.empty()) throw Error(ErrorKind::InvalidArgument, "embedding set has no classes");
    if (classes_.size() != data_.size()) {
      throw Error(ErrorKind::InvalidArgument, "class names and class matrices differ in count");
    }
    std::unordered_set<std::string> seen;
    for (const auto& c : classes_) {
      if (!seen.insert(c).second) throw Error(ErrorKind::InvalidArgument, "duplicate class name '" + c + "'");
    }
    dim_ = data_.front().rows();
    if (dim_ < 2) throw Error(ErrorKind::InvalidArgument, "embedding dimension must be >= 2");
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const Matrix& x = data_[i];
      detail::require_same_dim(dim_, x.rows(), "LabeledEmbeddingSet");
      if (x.cols() < 1) throw Error(ErrorKind::InvalidArgument, "class '" + classes_[i] + "' is empty");
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (std::abs(x.col(j).norm() - 1.0) > kUnitTol) {
          throw Error(ErrorKind::InvalidArgument,
                      "class '" + classes_[i] + "' column " + std::to_string(j) + " is not unit norm");
        }
      }
    }
  }

  Eigen::Index dim() const noexcept { return dim_; }
  std::size_t num_classes() const noexcept { return classes_.size(); }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const Matrix& data(std::size_t i) const { return data_.at(i); }
  const std::vector<Matrix>& all_data() const noexcept { return data_; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      if (classes_[i] == name) return i;
    }
    return std::nullopt;
  }

  std::size_t require_index(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw Error(ErrorKind::UnknownClass, "no class named '" + std::string(name) + "'");
    return *i;
  }

  Eigen::Index total_count() const {
    Eigen::Index n = 0;
    for (const auto& x : data_) n += x.cols();
    return n;
  }

  /// All classes' columns side by side, in class order.
  Matrix pooled() const {
    Matrix out(dim_, total_count());
    Eigen::Index at = 0;
    for (const auto& x : data_) {
      out.middleCols(at, x.cols()) = x;
      at += x.cols();
    }
    return out;
  }

  /// Copy with one more class appended.
  LabeledEmbeddingSet with_class(std::string name, Matrix x) const {
    auto classes = classes_;
    auto data = data_;
    classes.push_back(std::move(name));
    data.push_back(std::move(x));
    return {std::move(classes), std::move(data)};
  }

 private:
  std::vector<std::string> classes_;
  std::vector<Matrix> data_;
  Eigen::Index dim_ = 0;
};

/// Scales every column of `x` to unit length (throws on zero columns).
inline Matrix normalize_columns(Matrix x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double n = x.col(j).norm();
    if (!(n > UnitVector::kZeroNorm)) throw Error(ErrorKind::ZeroVector, "zero column");
    x.col(j) /= n;
  }
  return x;
}

}  // namespace pss
