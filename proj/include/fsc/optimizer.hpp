#pragma once

// Fused per-column subspace objective, its gradient, and the descent solver.
//
//   f(U_1..U_n) = sum_i ||x_i^w - P_i^w x_i^w||^2 + (lambda/2) sum_i sum_j ||P_i - P_j||_F^2
//
// With a full mask the first term is the ordinary projection residual. The
// fusion term always uses the full projectors.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsc/detail/parallel.hpp"
#include "fsc/error.hpp"
#include "fsc/geometry.hpp"
#include "fsc/masked_matrix.hpp"
#include "fsc/rng.hpp"

namespace fsc {

/// One d x r basis per data column.
using BasisSet = std::vector<Matrix>;

enum class InitKind { kRandomGaussian, kColumnSeeded };

/// First trial step of each line search after the first iteration.
enum class StepRule { kDoubling, kBarzilaiBorwein };

struct FscConfig {
  double lambda = 0.0;
  Index rank = 1;
  int max_iters = 2000;
  double step0 = 1e-2;
  double armijo_beta = 0.5;
  double armijo_c = 1e-4;
  double tol_rel = 1e-8;
  int reorth_period = 1;
  /// Ridge added to a Gram matrix only when its condition number exceeds 1e12.
  double ridge = 0.0;
  std::uint64_t seed = 0;
  InitKind init = InitKind::kRandomGaussian;
  StepRule step_rule = StepRule::kBarzilaiBorwein;
  unsigned threads = 1;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidParams("lambda must be finite and >= 0");
    if (rank < 1) throw InvalidParams("rank must be >= 1");
    if (max_iters < 1) throw InvalidParams("max_iters must be >= 1");
    if (!(step0 > 0.0)) throw InvalidParams("step0 must be > 0");
    if (!(armijo_beta > 0.0 && armijo_beta < 1.0)) throw InvalidParams("armijo_beta must lie in (0, 1)");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw InvalidParams("armijo_c must lie in (0, 1)");
    if (!(tol_rel > 0.0)) throw InvalidParams("tol_rel must be > 0");
    if (reorth_period < 1) throw InvalidParams("reorth_period must be >= 1");
    if (!(ridge >= 0.0)) throw InvalidParams("ridge must be >= 0");
  }
};

/// Default lambda scale 1 / (n d).
inline double default_lambda_scale(Index d, Index n) { return 1.0 / (static_cast<double>(n) * static_cast<double>(d)); }

enum class StopReason { kTolerance, kMaxIters, kStalled };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kTolerance: return "tolerance";
    case StopReason::kMaxIters: return "max_iters";
    case StopReason::kStalled: return "line_search_stalled";
  }
  return "unknown";
}

struct FitTrace {
  /// objective[0] is the starting value, objective[k] the value after accepted step k.
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
  StopReason stop = StopReason::kMaxIters;
};

struct ObjectiveTerms {
  double residual = 0.0;
  double fusion = 0.0;
  double total() const { return residual + fusion; }
};

namespace detail {

inline void check_shapes(const MaskedMatrix& x, const BasisSet& bases) {
  if (static_cast<Index>(bases.size()) != x.cols())
    throw ShapeMismatch(std::to_string(bases.size()) + " bases for " + std::to_string(x.cols()) + " columns");
  if (bases.empty()) throw ShapeMismatch("empty basis set");
  const Index r = bases.front().cols();
  for (std::size_t i = 0; i < bases.size(); ++i) {
    if (bases[i].rows() != x.rows() || bases[i].cols() != r)
      throw ShapeMismatch("basis " + std::to_string(i) + " is " + std::to_string(bases[i].rows()) + "x" +
                          std::to_string(bases[i].cols()) + ", expected " + std::to_string(x.rows()) + "x" +
                          std::to_string(r));
  }
}

/// Cholesky of U^T U. When allowed and the plain factorization is singular or
/// worse conditioned than 1e12, retries with the suggested ridge.
inline Eigen::LLT<Matrix> gram_factor(const Matrix& u, double ridge_fallback, bool allow_ridge) {
  Matrix gram = u.transpose() * u;
  Eigen::LLT<Matrix> llt(gram);
  auto conditioned = [&](double limit) {
    if (llt.info() != Eigen::Success) return false;
    const Vector diag = Matrix(llt.matrixL()).diagonal();
    const double ratio = diag.minCoeff() / diag.maxCoeff();
    return ratio * ratio > limit;
  };
  // diag(L)^2 ratio is a cheap lower bound proxy for 1 / cond(G).
  if (conditioned(1.0 / kRidgeConditionLimit)) return llt;
  if (allow_ridge) {
    const double rho = std::max(suggested_ridge(gram), ridge_fallback);
    if (rho > 0.0) {
      gram.diagonal().array() += rho;
      llt.compute(gram);
      if (conditioned(kRankTolerance * kRankTolerance)) return llt;
    }
  }
  if (conditioned(kRankTolerance * kRankTolerance)) return llt;
  throw RankDeficient("Gram matrix is numerically singular");
}

/// Per-column quantities shared by the objective and the gradient.
struct ColumnState {
  Eigen::LLT<Matrix> gram;    // full Gram U^T U
  Matrix whitened;            // U L^{-T}; projector = whitened * whitened^T
  Vector residual;            // x^w - U^w a, length |w|
  Vector coeffs;              // a = (U^wT U^w)^{-1} U^wT x^w
};

struct Evaluation {
  std::vector<ColumnState> columns;
  Matrix projector_sum;  // M = sum_i P_i
  ObjectiveTerms terms;
};

inline ColumnState column_state(const MaskedMatrix& x, const Matrix& u, Index i, bool allow_ridge, double ridge) {
  const auto& omega = x.pattern(i);
  if (static_cast<Index>(omega.size()) < u.cols())
    throw InsufficientObservations(static_cast<long>(i), static_cast<long>(omega.size()), static_cast<long>(u.cols()));
  ColumnState s;
  s.gram = gram_factor(u, ridge, allow_ridge);
  s.whitened = s.gram.matrixL().solve(u.transpose()).transpose();
  if (static_cast<Index>(omega.size()) == u.rows()) {
    s.coeffs = s.gram.solve(u.transpose() * x.values().col(i));
    s.residual = x.values().col(i) - u * s.coeffs;
    return s;
  }
  const Matrix uw = restrict_rows(u, omega);
  const Vector xw = x.observed_column(i);
  const Eigen::LLT<Matrix> gw = gram_factor(uw, ridge, allow_ridge);
  s.coeffs = gw.solve(uw.transpose() * xw);
  s.residual = xw - uw * s.coeffs;
  return s;
}

inline Evaluation evaluate(const MaskedMatrix& x, const BasisSet& bases, double lambda, unsigned threads = 1,
                           bool allow_ridge = false, double ridge = 0.0) {
  check_shapes(x, bases);
  const Index n = x.cols();
  const Index d = x.rows();
  Evaluation ev;
  ev.columns.resize(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    ev.columns[i] = column_state(x, bases[i], static_cast<Index>(i), allow_ridge, ridge);
  });
  ev.projector_sum = Matrix::Zero(d, d);
  double residual = 0.0;
  for (const auto& c : ev.columns) {
    residual += c.residual.squaredNorm();
    ev.projector_sum.selfadjointView<Eigen::Lower>().rankUpdate(c.whitened);
  }
  ev.projector_sum.triangularView<Eigen::StrictlyUpper>() = ev.projector_sum.transpose();
  // sum_ij ||P_i - P_j||^2 = 2 n sum_i ||P_i - M/n||^2. The centered form
  // avoids the cancellation in 2 n sum ||P_i||^2 - 2 ||M||^2 near fusion.
  double spread = 0.0;
  if (lambda != 0.0) {
    const Matrix mean = ev.projector_sum / static_cast<double>(n);
    std::vector<double> parts(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
      const Matrix& w = ev.columns[i].whitened;
      parts[i] = (w * w.transpose() - mean).squaredNorm();
    });
    for (double v : parts) spread += v;
  }
  const double pair_sum = 2.0 * static_cast<double>(n) * spread;
  ev.terms.residual = residual;
  ev.terms.fusion = 0.5 * lambda * pair_sum;
  return ev;
}

/// Gradient of the objective with respect to U_i given a shared evaluation.
///
/// Residual term: -2 (x^w - P^w x^w) a^T on the observed rows, zero elsewhere.
/// Fusion term: lambda * sum_{j != i} d||P_i - P_j||^2 / dU_i counted twice
/// (pairs (i,j) and (j,i)), which reduces to -4 lambda (I - P_i) M U_i (U_i^T U_i)^{-1}.
inline Matrix gradient_from(const MaskedMatrix& x, const Matrix& u, Index i, const Evaluation& ev, double lambda) {
  const ColumnState& s = ev.columns[static_cast<std::size_t>(i)];
  Matrix grad = Matrix::Zero(u.rows(), u.cols());
  const auto& omega = x.pattern(i);
  for (std::size_t k = 0; k < omega.size(); ++k)
    grad.row(omega[k]) = -2.0 * s.residual(static_cast<Index>(k)) * s.coeffs.transpose();
  if (lambda != 0.0) {
    // (I - P_i) M U_i = (I - P_i)(M - n P_i) U_i, formed from the difference for accuracy near fusion.
    const double n = static_cast<double>(ev.columns.size());
    const Matrix mu = ev.projector_sum * u - n * (s.whitened * (s.whitened.transpose() * u));
    const Matrix horizontal = mu - s.whitened * (s.whitened.transpose() * mu);
    grad -= 4.0 * lambda * s.gram.solve(horizontal.transpose()).transpose();
  }
  return grad;
}

inline void require_full(const Matrix& x) {
  if (!x.allFinite()) throw InvalidParams("data matrix has non-finite entries");
}

}  // namespace detail

/// Both terms of the masked objective.
inline ObjectiveTerms objective_terms(const MaskedMatrix& x, const BasisSet& bases, double lambda) {
  return detail::evaluate(x, bases, lambda).terms;
}

/// Objective with missing entries ignored in the residual term.
inline double objective_masked(const MaskedMatrix& x, const BasisSet& bases, double lambda) {
  return objective_terms(x, bases, lambda).total();
}

/// Objective for a fully observed data matrix.
inline double objective_full(const Matrix& x, const BasisSet& bases, double lambda) {
  detail::require_full(x);
  return objective_masked(MaskedMatrix(x), bases, lambda);
}

inline Matrix gradient_masked(const MaskedMatrix& x, const BasisSet& bases, double lambda, Index i) {
  if (i < 0 || i >= x.cols()) throw InvalidParams("column index out of range");
  const auto ev = detail::evaluate(x, bases, lambda);
  return detail::gradient_from(x, bases[static_cast<std::size_t>(i)], i, ev, lambda);
}

inline Matrix gradient_full(const Matrix& x, const BasisSet& bases, double lambda, Index i) {
  detail::require_full(x);
  return gradient_masked(MaskedMatrix(x), bases, lambda, i);
}

/// All n gradients from the same iterate.
inline BasisSet gradients_masked(const MaskedMatrix& x, const BasisSet& bases, double lambda, unsigned threads = 1) {
  const auto ev = detail::evaluate(x, bases, lambda, threads);
  BasisSet g(bases.size());
  detail::parallel_for(bases.size(), threads, [&](std::size_t i) {
    g[i] = detail::gradient_from(x, bases[i], static_cast<Index>(i), ev, lambda);
  });
  return g;
}

/// Starting bases, deterministic in cfg.seed.
///
/// kRandomGaussian: i.i.d. N(0,1) entries, orthonormalized.
/// kColumnSeeded: first direction is the zero-filled column x_i normalized;
/// the remaining r-1 directions complete it with random orthonormal vectors.
inline BasisSet init_bases(Index d, Index n, const FscConfig& cfg, const MaskedMatrix& x) {
  cfg.validate();
  const Index r = cfg.rank;
  if (r > d) throw InvalidParams("rank " + std::to_string(r) + " exceeds ambient dimension " + std::to_string(d));
  if (cfg.init == InitKind::kColumnSeeded && (x.rows() != d || x.cols() != n))
    throw ShapeMismatch("data matrix does not match requested d x n");
  BasisSet bases(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Rng rng = Rng::stream("init", cfg.seed, static_cast<std::uint64_t>(i));
    Matrix b = rng.gaussian(d, r);
    if (cfg.init == InitKind::kColumnSeeded) {
      const Vector col = x.values().col(i);
      const double norm = col.norm();
      if (norm > 0.0) b.col(0) = col / norm;
    }
    bases[static_cast<std::size_t>(i)] = orthonormalize(b);
  }
  return bases;
}

struct FitResult {
  BasisSet bases;
  FitTrace trace;
};

/// Full-batch gradient descent with Armijo backtracking.
///
/// Every iteration computes all n gradients at the current iterate and moves
/// all bases together. The first trial step is step0; later iterations start
/// from a Barzilai-Borwein estimate (or twice the accepted step). Bases are re-orthonormalized every
/// reorth_period iterations (the objective only depends on their spans).
inline FitResult fit(const MaskedMatrix& x, const FscConfig& cfg, std::optional<BasisSet> warm_start = std::nullopt) {
  cfg.validate();
  x.require_min_observed(cfg.rank);
  if (!x.values().allFinite()) throw InvalidParams("data matrix has non-finite observed entries");
  const Index d = x.rows();
  const Index n = x.cols();
  if (cfg.rank > d) throw InvalidParams("rank " + std::to_string(cfg.rank) + " exceeds ambient dimension " + std::to_string(d));

  FitResult out;
  if (warm_start) {
    detail::check_shapes(x, *warm_start);
    if (warm_start->front().cols() != cfg.rank) throw ShapeMismatch("warm start has a different rank");
    out.bases = std::move(*warm_start);
  } else {
    out.bases = init_bases(d, n, cfg, x);
  }
  BasisSet& bases = out.bases;
  FitTrace& trace = out.trace;

  const bool ridge = true;
  auto ev = detail::evaluate(x, bases, cfg.lambda, cfg.threads, ridge, cfg.ridge);
  double f = ev.terms.total();
  if (!std::isfinite(f)) throw NonFiniteObjective("at the starting point");
  trace.objective.push_back(f);
  const double f_start = f;

  double step = cfg.step0;
  BasisSet grad(bases.size());
  BasisSet trial(bases.size());
  BasisSet prev_grad;
  for (int it = 0; it < cfg.max_iters; ++it) {
    detail::parallel_for(bases.size(), cfg.threads, [&](std::size_t i) {
      grad[i] = detail::gradient_from(x, bases[i], static_cast<Index>(i), ev, cfg.lambda);
    });
    double gnorm2 = 0.0;
    for (const auto& g : grad) gnorm2 += g.squaredNorm();
    if (gnorm2 == 0.0) {
      trace.converged = true;
      trace.stop = StopReason::kTolerance;
      break;
    }
    if (it > 0) {
      double bb = 0.0;
      if (cfg.step_rule == StepRule::kBarzilaiBorwein) {
        // s = -step * g_prev, y = g - g_prev; BB1 step s's / s'y.
        double gy = 0.0;
        double gg = 0.0;
        for (std::size_t i = 0; i < grad.size(); ++i) {
          gy += prev_grad[i].cwiseProduct(grad[i] - prev_grad[i]).sum();
          gg += prev_grad[i].squaredNorm();
        }
        if (gy < 0.0) bb = -step * gg / gy;
      }
      step = bb > 0.0 && std::isfinite(bb) ? std::min(bb, 1e3 * step) : 2.0 * step;
    }

    bool accepted = false;
    detail::Evaluation next;
    for (int back = 0; back < 200; ++back) {
      for (std::size_t i = 0; i < bases.size(); ++i) trial[i] = bases[i] - step * grad[i];
      double f_trial = std::numeric_limits<double>::infinity();
      try {
        next = detail::evaluate(x, trial, cfg.lambda, cfg.threads, ridge, cfg.ridge);
        f_trial = next.terms.total();
      } catch (const RankDeficient&) {
      }
      if (std::isfinite(f_trial) && f_trial <= f - cfg.armijo_c * step * gnorm2) {
        accepted = true;
        break;
      }
      step *= cfg.armijo_beta;
      if (step < std::numeric_limits<double>::min()) break;
    }
    if (!accepted) {
      trace.converged = true;
      trace.stop = StopReason::kStalled;
      break;
    }
    bases.swap(trial);
    prev_grad = grad;
    trace.iterations = it + 1;
    if ((it + 1) % cfg.reorth_period == 0) {
      for (auto& b : bases) b = orthonormalize(b);
      next = detail::evaluate(x, bases, cfg.lambda, cfg.threads, ridge, cfg.ridge);
    }
    const double f_new = next.terms.total();
    if (!std::isfinite(f_new)) throw NonFiniteObjective("after iteration " + std::to_string(it + 1));
    ev = std::move(next);
    const double rel = (f - f_new) / std::max(std::abs(f), std::numeric_limits<double>::min());
    f = f_new;
    trace.objective.push_back(f);
    if (rel < cfg.tol_rel || f <= 1e-24 * f_start) {
      trace.converged = true;
      trace.stop = StopReason::kTolerance;
      break;
    }
  }
  if (!trace.converged) trace.stop = StopReason::kMaxIters;
  return out;
}

}  // namespace fsc
