#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsc/error.hpp"
#include "fsc/geometry.hpp"

namespace fsc {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// d x n data matrix observed on a subset of its entries.
///
/// Unobserved entries of `values()` are stored as 0 so that zero-filled
/// products can be taken directly.
class MaskedMatrix {
 public:
  MaskedMatrix() = default;

  /// Fully observed matrix.
  explicit MaskedMatrix(Matrix values) : MaskedMatrix(values, Mask::Constant(values.rows(), values.cols(), true)) {}

  MaskedMatrix(Matrix values, Mask mask) : values_(std::move(values)), mask_(std::move(mask)) {
    if (values_.rows() != mask_.rows() || values_.cols() != mask_.cols())
      throw ShapeMismatch("values are " + std::to_string(values_.rows()) + "x" + std::to_string(values_.cols()) +
                          " but mask is " + std::to_string(mask_.rows()) + "x" + std::to_string(mask_.cols()));
    patterns_.resize(static_cast<std::size_t>(values_.cols()));
    for (Index j = 0; j < values_.cols(); ++j) {
      auto& omega = patterns_[static_cast<std::size_t>(j)];
      for (Index i = 0; i < values_.rows(); ++i) {
        if (mask_(i, j))
          omega.push_back(i);
        else
          values_(i, j) = 0.0;
      }
      if (omega.empty()) throw InsufficientObservations(static_cast<long>(j), 0, 1);
    }
  }

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  const Mask& mask() const { return mask_; }
  const ObservationPattern& pattern(Index j) const { return patterns_[static_cast<std::size_t>(j)]; }

  bool fully_observed() const { return mask_.all(); }
  Index observed_count() const { return mask_.count(); }

  /// x_j restricted to its observed rows.
  Vector observed_column(Index j) const { return restrict_rows(Vector(values_.col(j)), pattern(j)); }

  /// Throws InsufficientObservations for the first column with fewer than r observed rows.
  void require_min_observed(Index r) const {
    for (Index j = 0; j < cols(); ++j) {
      const auto seen = static_cast<Index>(pattern(j).size());
      if (seen < r) throw InsufficientObservations(static_cast<long>(j), static_cast<long>(seen), static_cast<long>(r));
    }
  }

 private:
  Matrix values_;
  Mask mask_;
  std::vector<ObservationPattern> patterns_;
};

/// Columns `cols` of x as their own masked matrix.
inline MaskedMatrix select_columns(const MaskedMatrix& x, const std::vector<Index>& cols) {
  Matrix values(x.rows(), static_cast<Index>(cols.size()));
  Mask mask(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    values.col(static_cast<Index>(k)) = x.values().col(cols[k]);
    mask.col(static_cast<Index>(k)) = x.mask().col(cols[k]);
  }
  return MaskedMatrix(values, mask);
}

}  // namespace fsc
