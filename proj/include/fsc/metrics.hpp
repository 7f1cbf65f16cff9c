#pragma once

// Evaluation metrics: permutation-invariant clustering error, completion RMSE
// and subspace distance to ground truth.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fsc/error.hpp"
#include "fsc/geometry.hpp"
#include "fsc/masked_matrix.hpp"
#include "fsc/spectral.hpp"

namespace fsc {

/// Minimum-cost assignment (Hungarian method, O(n^3) potentials form).
/// Rectangular costs are padded with zero-cost dummies. Returns row -> column,
/// -1 for rows left unassigned when there are more rows than columns.
inline std::vector<Index> hungarian(const Matrix& rect) {
  const Index n = std::max(rect.rows(), rect.cols());
  Matrix cost = Matrix::Zero(n, n);
  cost.topLeftCorner(rect.rows(), rect.cols()) = rect;
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; p[j] = row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(static_cast<std::size_t>(n), 0);
  for (Index j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  row_to_col.resize(static_cast<std::size_t>(rect.rows()));
  for (auto& c : row_to_col)
    if (c >= rect.cols()) c = -1;
  return row_to_col;
}

/// Confusion counts between two labelings, ids compacted to 0..K-1 per side.
inline Matrix confusion_matrix(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size())
    throw LengthMismatch(std::to_string(pred.size()) + " predicted vs " + std::to_string(truth.size()) + " true labels");
  auto index_of = [](const Labels& l) {
    std::map<int, Index> ids;
    for (int v : l) ids.emplace(v, 0);
    Index next = 0;
    for (auto& [id, idx] : ids) idx = next++;
    return ids;
  };
  const auto pi = index_of(pred);
  const auto ti = index_of(truth);
  const Index size = std::max<Index>(static_cast<Index>(pi.size()), static_cast<Index>(ti.size()));
  Matrix conf = Matrix::Zero(size, size);
  for (std::size_t i = 0; i < pred.size(); ++i) conf(pi.at(pred[i]), ti.at(truth[i])) += 1.0;
  return conf;
}

/// Fraction of misclassified points under the best matching of cluster ids.
inline double clustering_error(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size())
    throw LengthMismatch(std::to_string(pred.size()) + " predicted vs " + std::to_string(truth.size()) + " true labels");
  if (pred.empty()) return 0.0;
  const Matrix conf = confusion_matrix(pred, truth);
  const auto match = hungarian(-conf);
  double hits = 0.0;
  for (Index i = 0; i < conf.rows(); ++i) hits += conf(i, match[static_cast<std::size_t>(i)]);
  return 1.0 - hits / static_cast<double>(pred.size());
}

enum class RmseScope { kAll, kUnobserved };

/// RMS error over the selected entries, divided by the RMS of `truth` there.
inline double completion_rmse(const Matrix& estimate, const Matrix& truth, const Mask& mask, RmseScope scope) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() || mask.rows() != truth.rows() ||
      mask.cols() != truth.cols())
    throw ShapeMismatch("estimate, truth and mask must agree");
  double err = 0.0;
  double ref = 0.0;
  Index count = 0;
  for (Index j = 0; j < truth.cols(); ++j)
    for (Index i = 0; i < truth.rows(); ++i) {
      if (scope == RmseScope::kUnobserved && mask(i, j)) continue;
      const double e = estimate(i, j) - truth(i, j);
      err += e * e;
      ref += truth(i, j) * truth(i, j);
      ++count;
    }
  if (count == 0) throw EmptyScope("no entries in the selected scope");
  if (ref == 0.0) return err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(err / ref);
}

inline double completion_rmse(const Matrix& estimate, const Matrix& truth) {
  return completion_rmse(estimate, truth, Mask::Constant(truth.rows(), truth.cols(), true), RmseScope::kAll);
}

/// ||P_estimate - P_truth||_F^2.
inline double subspace_affinity(const Matrix& estimate, const Matrix& truth) {
  return projector_distance(estimate, truth);
}

}  // namespace fsc
