#pragma once

// Bases, orthogonal projectors, restricted projectors and projector distances.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsc/error.hpp"

namespace fsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Observed row indices of one column, strictly increasing and nonempty.
using ObservationPattern = std::vector<Index>;

/// Relative singular-value threshold below which a basis counts as rank deficient.
inline constexpr double kRankTolerance = 1e-10;

/// Gram condition number above which the optional ridge kicks in.
inline constexpr double kRidgeConditionLimit = 1e12;

inline void validate_pattern(const ObservationPattern& omega, Index ambient) {
  if (omega.empty()) throw InvalidParams("observation pattern is empty");
  for (std::size_t k = 0; k < omega.size(); ++k) {
    if (omega[k] < 0 || omega[k] >= ambient)
      throw InvalidParams("observed row " + std::to_string(omega[k]) + " outside [0, " + std::to_string(ambient) + ")");
    if (k > 0 && omega[k] <= omega[k - 1]) throw InvalidParams("observation pattern is not strictly increasing");
  }
}

/// Rows of `m` listed in `omega`.
inline Matrix restrict_rows(const Matrix& m, const ObservationPattern& omega) {
  Matrix out(static_cast<Index>(omega.size()), m.cols());
  for (std::size_t k = 0; k < omega.size(); ++k) out.row(static_cast<Index>(k)) = m.row(omega[k]);
  return out;
}

inline Vector restrict_rows(const Vector& v, const ObservationPattern& omega) {
  Vector out(static_cast<Index>(omega.size()));
  for (std::size_t k = 0; k < omega.size(); ++k) out(static_cast<Index>(k)) = v(omega[k]);
  return out;
}

/// Throws RankDeficient unless sigma_min > kRankTolerance * sigma_max.
inline void require_full_column_rank(const Matrix& basis, const char* what = "basis") {
  if (basis.cols() == 0 || basis.rows() < basis.cols())
    throw RankDeficient(std::string(what) + " is " + std::to_string(basis.rows()) + "x" +
                        std::to_string(basis.cols()));
  const Vector sv = Eigen::JacobiSVD<Matrix>(basis).singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!std::isfinite(smax) || !(smax > 0.0) || !(smin > kRankTolerance * smax))
    throw RankDeficient(std::string(what) + " smallest singular value " + std::to_string(smin) +
                        " vs largest " + std::to_string(smax));
}

/// Orthonormal basis of span(basis); unique QR with positive R diagonal.
inline Matrix orthonormalize(const Matrix& basis) {
  require_full_column_rank(basis);
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix q = qr.householderQ() * Matrix::Identity(basis.rows(), basis.cols());
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < basis.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

/// Ridge suggested for a Gram matrix: 0 when well conditioned, otherwise 1e-10 * trace / r.
inline double suggested_ridge(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double lo = ev(0);
  const double hi = ev(ev.size() - 1);
  if (lo > 0.0 && hi / lo <= kRidgeConditionLimit) return 0.0;
  return 1e-10 * gram.trace() / static_cast<double>(gram.rows());
}

/// W = U L^{-T} where L L^T = U^T U + ridge I, so that W W^T is the (ridged) projector.
inline Matrix whiten(const Matrix& basis, double ridge = 0.0) {
  Matrix gram = basis.transpose() * basis;
  gram.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw RankDeficient("Gram matrix is not positive definite");
  const Vector diag = Matrix(llt.matrixL()).diagonal();
  if (!(diag.minCoeff() > kRankTolerance * diag.maxCoeff()))
    throw RankDeficient("Gram matrix is numerically singular");
  // Solve L W^T = U^T.
  return llt.matrixL().solve(basis.transpose()).transpose();
}

/// P = U (U^T U + ridge I)^{-1} U^T.
inline Matrix projector(const Matrix& basis, double ridge = 0.0) {
  if (ridge < 0.0) throw InvalidParams("ridge must be >= 0");
  if (ridge == 0.0) require_full_column_rank(basis);
  const Matrix w = whiten(basis, ridge);
  return w * w.transpose();
}

/// Projector of the row restriction of `basis` to `omega`.
inline Matrix restricted_projector(const Matrix& basis, const ObservationPattern& omega, double ridge = 0.0) {
  validate_pattern(omega, basis.rows());
  if (static_cast<Index>(omega.size()) < basis.cols())
    throw InsufficientObservations(-1, static_cast<long>(omega.size()), static_cast<long>(basis.cols()));
  return projector(restrict_rows(basis, omega), ridge);
}

/// Squared Frobenius distance between the projectors of two bases.
///
/// Evaluated as r_i + r_j - 2 ||Q_i^T Q_j||_F^2 on orthonormalized bases, which
/// never forms a d x d matrix.
inline double projector_distance(const Matrix& ui, const Matrix& uj) {
  if (ui.rows() != uj.rows())
    throw DimensionMismatch("ambient dimensions " + std::to_string(ui.rows()) + " and " + std::to_string(uj.rows()));
  const Matrix qi = orthonormalize(ui);
  const Matrix qj = orthonormalize(uj);
  const double cross = (qi.transpose() * qj).squaredNorm();
  return std::max(0.0, static_cast<double>(ui.cols() + uj.cols()) - 2.0 * cross);
}

/// Same as projector_distance for bases already known to be orthonormal.
inline double orthonormal_distance(const Matrix& qi, const Matrix& qj) {
  const double cross = (qi.transpose() * qj).squaredNorm();
  return std::max(0.0, static_cast<double>(qi.cols() + qj.cols()) - 2.0 * cross);
}

}  // namespace fsc
