#pragma once

// Lambda path with warm starts, goodness-of-fit scoring, model selection and
// the progressive rank sweep.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsc/completion.hpp"
#include "fsc/error.hpp"
#include "fsc/geometry.hpp"
#include "fsc/masked_matrix.hpp"
#include "fsc/optimizer.hpp"
#include "fsc/spectral.hpp"

namespace fsc {

/// Floor applied to the residual sum of squares before taking its log.
inline constexpr double kRssFloor = 1e-30;

/// Squared projector distance at or below which two bases count as fused.
inline constexpr double kDefaultFuseTol = 1e-3;

/// 0 followed by `points` geometric values from 1e-4 * scale to 1e2 * scale.
inline std::vector<double> default_lambda_grid(double scale, int points = 16) {
  if (!(scale > 0.0)) throw InvalidParams("lambda scale must be > 0");
  if (points < 2) throw InvalidParams("grid needs at least 2 geometric points");
  std::vector<double> grid{0.0};
  const double lo = std::log(1e-4 * scale);
  const double hi = std::log(1e2 * scale);
  for (int k = 0; k < points; ++k) grid.push_back(std::exp(lo + (hi - lo) * k / (points - 1)));
  return grid;
}

/// Residual sum of squares of the observed entries under a cluster model.
inline double model_rss(const MaskedMatrix& x, const ClusterModel& model) {
  if (static_cast<Index>(model.labels.size()) != x.cols()) throw LengthMismatch("one label per column is required");
  if (model.coefficients.size() != model.labels.size()) throw LengthMismatch("one coefficient vector per column is required");
  double rss = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    const auto& b = model.cluster_bases.at(static_cast<std::size_t>(model.labels[static_cast<std::size_t>(j)] - 1));
    const Vector fitted = restrict_rows(b, x.pattern(j)) * model.coefficients[static_cast<std::size_t>(j)];
    rss += (x.observed_column(j) - fitted).squaredNorm();
  }
  return rss;
}

/// |Omega| ln(RSS / |Omega|) + 2 K r (d - r). Lower is better.
inline double aic_score(double rss, Index observed, int k, Index r, Index d) {
  if (observed < 1) throw InvalidParams("no observed entries");
  const double m = static_cast<double>(observed);
  const double dof = static_cast<double>(k) * static_cast<double>(r) * static_cast<double>(d - r);
  return m * std::log(std::max(rss, kRssFloor) / m) + 2.0 * dof;
}

inline double fit_score(const MaskedMatrix& x, const ClusterModel& model) {
  if (model.cluster_bases.empty()) throw InvalidParams("cluster model has no bases");
  const Index r = model.cluster_bases.front().cols();
  for (const auto& b : model.cluster_bases)
    if (b.rows() != x.rows() || b.cols() != r) throw ShapeMismatch("cluster bases do not match the data");
  return aic_score(model_rss(x, model), x.observed_count(), model.k(), r, x.rows());
}

struct PathOptions {
  /// Pairs closer than this (squared projector distance) are fused.
  double fuse_tol = kDefaultFuseTol;
  unsigned threads = 1;
};

/// Clusters are the groups of fused subspaces: connected components of the
/// graph joining pairs within fuse_tol.
inline Labels fused_clustering(const BasisSet& bases, const PathOptions& opts) {
  return fused_components(distance_matrix(bases, opts.threads), opts.fuse_tol);
}

struct PathEntry {
  double lambda = 0.0;
  int cluster_count = 0;
  Labels labels;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double fit_score = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool ok = false;
  std::string error;
  BasisSet bases;
};

struct LambdaPathReport {
  std::vector<PathEntry> entries;
};

inline void validate_lambdas(const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw InvalidParams("lambda grid is empty");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] >= 0.0) || !std::isfinite(lambdas[k])) throw InvalidParams("lambda values must be finite and >= 0");
    if (k > 0 && !(lambdas[k] > lambdas[k - 1])) throw InvalidParams("lambda grid must be strictly increasing");
  }
}

namespace detail {

inline PathEntry path_step(const MaskedMatrix& x, FscConfig cfg, double lambda, std::optional<BasisSet>& warm,
                           const PathOptions& opts) {
  PathEntry e;
  e.lambda = lambda;
  try {
    cfg.lambda = lambda;
    auto res = fit(x, cfg, warm);
    e.objective = res.trace.objective.back();
    e.iterations = res.trace.iterations;
    e.labels = fused_clustering(res.bases, opts);
    e.cluster_count = count_clusters(e.labels);
    e.bases = std::move(res.bases);
    warm = e.bases;
    e.fit_score = fit_score(x, build_cluster_model(x, e.bases, e.labels, cfg.threads));
    e.ok = true;
  } catch (const Error& err) {
    e.error = err.what();
  }
  return e;
}

}  // namespace detail

/// Fits every lambda in ascending order, each warm-started from the previous
/// successful solution. Failures are recorded and the path continues.
inline LambdaPathReport lambda_path(const MaskedMatrix& x, const std::vector<double>& lambdas, const FscConfig& cfg,
                                    const PathOptions& opts = {}) {
  validate_lambdas(lambdas);
  cfg.validate();
  LambdaPathReport report;
  std::optional<BasisSet> warm;
  for (double lambda : lambdas) report.entries.push_back(detail::path_step(x, cfg, lambda, warm, opts));
  return report;
}

/// Doubles lambda from `start` (warm-started from `from`) until every basis is
/// fused into one cluster, or until `cap` is exceeded. Returns the last entry.
inline PathEntry adaptive_lambda_max(const MaskedMatrix& x, const FscConfig& cfg, double start, double cap,
                                     std::optional<BasisSet> from = std::nullopt, const PathOptions& opts = {}) {
  if (!(start > 0.0) || !(cap >= start)) throw InvalidParams("need 0 < start <= cap");
  PathEntry last;
  for (double lambda = start; lambda <= cap; lambda *= 2.0) {
    last = detail::path_step(x, cfg, lambda, from, opts);
    if (last.ok && last.cluster_count == 1) break;
  }
  return last;
}

struct Selection {
  std::size_t index = 0;
  double lambda = 0.0;
  ClusterModel model;
};

/// Entry with the smallest fit score; ties go to the smaller cluster count,
/// then to the smaller lambda.
inline Selection select_model(const LambdaPathReport& report, const MaskedMatrix& x, unsigned threads = 1) {
  if (report.entries.empty()) throw InvalidParams("empty path report");
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < report.entries.size(); ++k) {
    const auto& e = report.entries[k];
    if (!e.ok || !std::isfinite(e.fit_score)) continue;
    if (!best) {
      best = k;
      continue;
    }
    const auto& b = report.entries[*best];
    if (e.fit_score < b.fit_score ||
        (e.fit_score == b.fit_score &&
         (e.cluster_count < b.cluster_count || (e.cluster_count == b.cluster_count && e.lambda < b.lambda))))
      best = k;
  }
  if (!best) throw AllEntriesFailed("every lambda on the path failed");
  const auto& e = report.entries[*best];
  return {*best, e.lambda, build_cluster_model(x, e.bases, e.labels, threads)};
}

struct RankEntry {
  Index r = 0;
  std::vector<Index> active;     // columns fitted at this level
  std::vector<Index> explained;  // columns pruned after this level
  double residual_mean = 0.0;    // relative residual over active columns
  double residual_max = 0.0;
  int k = 0;
  double fit_score = std::numeric_limits<double>::quiet_NaN();
};

struct RankSweepReport {
  std::vector<RankEntry> entries;
};

struct RankSweepOptions {
  /// A column is explained when its residual is <= tol_prune * ||x^w||.
  double tol_prune = 1e-6;
  PathOptions path;
};

/// Fits increasing ranks on the columns not yet explained. A column counts as
/// explained only if its cluster has more than r members, since a cluster of
/// r or fewer columns always fits exactly.
inline RankSweepReport rank_sweep(const MaskedMatrix& x, const std::vector<Index>& r_values, const FscConfig& cfg,
                                  const RankSweepOptions& opts = {}) {
  if (r_values.empty()) throw InvalidParams("rank list is empty");
  for (std::size_t k = 0; k < r_values.size(); ++k) {
    if (r_values[k] < 1) throw InvalidParams("ranks must be >= 1");
    if (k > 0 && r_values[k] <= r_values[k - 1]) throw InvalidParams("ranks must be strictly increasing");
  }
  RankSweepReport report;
  std::vector<Index> active(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) active[static_cast<std::size_t>(j)] = j;
  for (Index r : r_values) {
    RankEntry entry;
    entry.r = r;
    entry.active = active;
    if (active.empty()) {
      report.entries.push_back(std::move(entry));
      continue;
    }
    const MaskedMatrix sub = select_columns(x, active);
    FscConfig c = cfg;
    c.rank = r;
    const auto res = fit(sub, c);
    const Labels labels = fused_clustering(res.bases, opts.path);
    const ClusterModel model = build_cluster_model(sub, res.bases, labels, cfg.threads);
    entry.k = model.k();
    entry.fit_score = fit_score(sub, model);
    std::vector<Index> size(static_cast<std::size_t>(model.k()) + 1, 0);
    for (int l : labels) ++size[static_cast<std::size_t>(l)];
    std::vector<Index> remaining;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const auto j = static_cast<Index>(k);
      const auto& b = model.cluster_bases[static_cast<std::size_t>(labels[k] - 1)];
      const Vector xw = sub.observed_column(j);
      const double res_norm = (xw - restrict_rows(b, sub.pattern(j)) * model.coefficients[k]).norm();
      const double rel = xw.norm() > 0.0 ? res_norm / xw.norm() : 0.0;
      entry.residual_mean += rel / static_cast<double>(active.size());
      entry.residual_max = std::max(entry.residual_max, rel);
      if (size[static_cast<std::size_t>(labels[k])] > r && res_norm <= opts.tol_prune * xw.norm())
        entry.explained.push_back(active[k]);
      else
        remaining.push_back(active[k]);
    }
    active = std::move(remaining);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace fsc
