#pragma once

// Per-cluster averaged bases, per-column coefficients and matrix completion.

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsc/error.hpp"
#include "fsc/geometry.hpp"
#include "fsc/masked_matrix.hpp"
#include "fsc/optimizer.hpp"
#include "fsc/spectral.hpp"

namespace fsc {

struct ClusterModel {
  Labels labels;
  std::vector<Matrix> cluster_bases;  // K orthonormal d x r bases
  std::vector<Vector> coefficients;   // one length-r vector per column

  int k() const { return static_cast<int>(cluster_bases.size()); }
};

/// Number of clusters implied by 1-based labels; every id 1..K must be used.
inline int validated_cluster_count(const Labels& labels) {
  if (labels.empty()) throw InvalidParams("empty label vector");
  const int k = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 1) throw InvalidParams("labels must be 1-based");
  std::vector<char> used(static_cast<std::size_t>(k) + 1, 0);
  for (int l : labels) used[static_cast<std::size_t>(l)] = 1;
  for (int c = 1; c <= k; ++c)
    if (!used[static_cast<std::size_t>(c)]) throw EmptyCluster(c);
  return k;
}

/// Top-r left singular vectors of the concatenated orthonormalized member bases.
inline Matrix cluster_basis(const BasisSet& bases, const Labels& labels, int k) {
  if (labels.size() != bases.size()) throw LengthMismatch("labels and bases differ in length");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == k) members.push_back(i);
  if (members.empty()) throw EmptyCluster(k);
  const Index d = bases[members.front()].rows();
  const Index r = bases[members.front()].cols();
  Matrix w(d, r * static_cast<Index>(members.size()));
  for (std::size_t m = 0; m < members.size(); ++m) {
    const Matrix& b = bases[members[m]];
    if (b.rows() != d || b.cols() != r) throw ShapeMismatch("cluster members with different shapes");
    w.middleCols(static_cast<Index>(m) * r, r) = orthonormalize(b);
  }
  if (members.size() == 1) return w;
  Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU);
  return orthonormalize(svd.matrixU().leftCols(r));
}

/// Least-squares coefficients of x^w in the row restriction of `basis`.
inline Vector coefficients(const Vector& observed, const ObservationPattern& omega, const Matrix& basis) {
  validate_pattern(omega, basis.rows());
  if (static_cast<Index>(omega.size()) != observed.size())
    throw LengthMismatch("observed values and pattern differ in length");
  if (static_cast<Index>(omega.size()) < basis.cols())
    throw InsufficientObservations(-1, static_cast<long>(omega.size()), static_cast<long>(basis.cols()));
  const Matrix uw = restrict_rows(basis, omega);
  require_full_column_rank(uw, "restricted basis");
  const Eigen::LLT<Matrix> gram(uw.transpose() * uw);
  if (gram.info() != Eigen::Success) throw RankDeficient("restricted Gram matrix is not positive definite");
  return gram.solve(uw.transpose() * observed);
}

/// basis * coefficients(observed, omega, basis).
inline Vector complete_column(const Vector& observed, const ObservationPattern& omega, const Matrix& basis) {
  return basis * coefficients(observed, omega, basis);
}

/// One failing column of a completion run.
struct ColumnFailure {
  Index column;
  std::string cause;
};

class CompletionFailed : public Error {
 public:
  explicit CompletionFailed(std::vector<ColumnFailure> failures)
      : Error(ErrorKind::kUser, describe(failures)), failures_(std::move(failures)) {}
  const std::vector<ColumnFailure>& failures() const { return failures_; }

 private:
  static std::string describe(const std::vector<ColumnFailure>& f) {
    std::string s = "completion failed for " + std::to_string(f.size()) + " column(s):";
    for (const auto& c : f) s += "\n  column " + std::to_string(c.column) + ": " + c.cause;
    return s;
  }
  std::vector<ColumnFailure> failures_;
};

struct CompletionResult {
  Matrix completed;
  ClusterModel model;
};

/// Cluster model from fitted bases and labels (no completion).
inline ClusterModel build_cluster_model(const MaskedMatrix& x, const BasisSet& bases, const Labels& labels,
                                        unsigned threads = 1) {
  if (static_cast<Index>(labels.size()) != x.cols()) throw LengthMismatch("one label per column is required");
  const int k = validated_cluster_count(labels);
  ClusterModel model;
  model.labels = labels;
  model.cluster_bases.resize(static_cast<std::size_t>(k));
  detail::parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t c) {
    model.cluster_bases[c] = cluster_basis(bases, labels, static_cast<int>(c) + 1);
  });
  model.coefficients.resize(labels.size());
  std::vector<std::string> errors(labels.size());
  detail::parallel_for(labels.size(), threads, [&](std::size_t i) {
    try {
      const auto col = static_cast<Index>(i);
      model.coefficients[i] = coefficients(x.observed_column(col), x.pattern(col),
                                           model.cluster_bases[static_cast<std::size_t>(labels[i] - 1)]);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  std::vector<ColumnFailure> failures;
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) failures.push_back({static_cast<Index>(i), errors[i]});
  if (!failures.empty()) throw CompletionFailed(std::move(failures));
  return model;
}

/// Completes every column from its cluster basis. With keep_observed the
/// observed entries are copied back from the data; otherwise the model
/// reconstruction is returned everywhere.
inline CompletionResult complete_matrix(const MaskedMatrix& x, const BasisSet& bases, const Labels& labels,
                                        bool keep_observed = false, unsigned threads = 1) {
  CompletionResult out;
  out.model = build_cluster_model(x, bases, labels, threads);
  out.completed.resize(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const auto& b = out.model.cluster_bases[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)] - 1)];
    out.completed.col(j) = b * out.model.coefficients[static_cast<std::size_t>(j)];
    if (keep_observed)
      for (Index i : x.pattern(j)) out.completed(i, j) = x.values()(i, j);
  }
  return out;
}

/// Fits each cluster's columns on their own, so that only same-cluster bases
/// are fused. Returns one basis per column of x.
inline BasisSet fit_within_clusters(const MaskedMatrix& x, const Labels& labels, const FscConfig& cfg) {
  if (static_cast<Index>(labels.size()) != x.cols()) throw LengthMismatch("one label per column is required");
  const int k = validated_cluster_count(labels);
  BasisSet bases(labels.size());
  for (int c = 1; c <= k; ++c) {
    std::vector<Index> cols;
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] == c) cols.push_back(static_cast<Index>(j));
    FscConfig cc = cfg;
    cc.seed = cfg.seed + static_cast<std::uint64_t>(c);
    auto res = fit(select_columns(x, cols), cc);
    for (std::size_t m = 0; m < cols.size(); ++m) bases[static_cast<std::size_t>(cols[m])] = std::move(res.bases[m]);
  }
  return bases;
}

}  // namespace fsc
