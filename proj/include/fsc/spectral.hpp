#pragma once

// Inverse projector-distance similarity, normalized-Laplacian embedding and
// seeded k-means over the fitted bases.

#include <algorithm>
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
#include "fsc/optimizer.hpp"
#include "fsc/rng.hpp"

namespace fsc {

/// Cluster ids, 1-based, one per data column.
using Labels = std::vector<int>;

inline int count_clusters(const Labels& labels) {
  std::vector<int> ids(labels);
  std::sort(ids.begin(), ids.end());
  return static_cast<int>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

/// Renumbers ids 1..K in order of first appearance.
inline Labels canonical_labels(const Labels& labels) {
  Labels out(labels.size());
  std::vector<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == labels[i]; });
    if (it == seen.end()) {
      seen.emplace_back(labels[i], static_cast<int>(seen.size()) + 1);
      out[i] = static_cast<int>(seen.size());
    } else {
      out[i] = it->second;
    }
  }
  return out;
}

/// n x n matrix of squared projector distances.
inline Matrix distance_matrix(const BasisSet& bases, unsigned threads = 1) {
  if (bases.empty()) throw ShapeMismatch("empty basis set");
  const Index d = bases.front().rows();
  for (const auto& b : bases)
    if (b.rows() != d) throw ShapeMismatch("bases with different ambient dimensions");
  const auto n = static_cast<Index>(bases.size());
  BasisSet q(bases.size());
  detail::parallel_for(bases.size(), threads, [&](std::size_t i) { q[i] = orthonormalize(bases[i]); });
  Matrix dist = Matrix::Zero(n, n);
  detail::parallel_for(bases.size(), threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < bases.size(); ++j)
      dist(static_cast<Index>(i), static_cast<Index>(j)) = orthonormal_distance(q[i], q[j]);
  });
  dist.triangularView<Eigen::StrictlyLower>() = dist.transpose();
  return dist;
}

/// Connected components of the graph joining pairs with distance <= tol.
/// Labels are canonical (first appearance order).
inline Labels fused_components(const Matrix& dist, double tol) {
  const auto n = static_cast<std::size_t>(dist.rows());
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dist(static_cast<Index>(i), static_cast<Index>(j)) <= tol) parent[find(j)] = find(i);
  Labels labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(find(i)) + 1;
  return canonical_labels(labels);
}

/// 1e-9 * median of the nonzero off-diagonal distances (1e-9 if there are none).
inline double default_eps_sim(const Matrix& dist) {
  std::vector<double> values;
  for (Index j = 0; j < dist.cols(); ++j)
    for (Index i = j + 1; i < dist.rows(); ++i)
      if (dist(i, j) > 0.0) values.push_back(dist(i, j));
  if (values.empty()) return 1e-9;
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  double median = *mid;
  if (values.size() % 2 == 0) median = 0.5 * (median + *std::max_element(values.begin(), mid));
  return 1e-9 * median;
}

/// S_ij = 1 / max(dist_ij, eps_sim) off the diagonal, zero on it.
inline Matrix similarity_from_distances(const Matrix& dist, double eps_sim) {
  if (!(eps_sim > 0.0)) throw InvalidParams("eps_sim must be > 0");
  Matrix s = dist.cwiseMax(eps_sim).cwiseInverse();
  s.diagonal().setZero();
  return s;
}

/// Similarity over a basis set. A non-positive eps_sim selects default_eps_sim.
inline Matrix similarity(const BasisSet& bases, double eps_sim = 0.0, unsigned threads = 1) {
  const Matrix dist = distance_matrix(bases, threads);
  return similarity_from_distances(dist, eps_sim > 0.0 ? eps_sim : default_eps_sim(dist));
}

/// Symmetric normalized Laplacian I - D^{-1/2} S D^{-1/2}.
inline Matrix normalized_laplacian(const Matrix& s) {
  const Index n = s.rows();
  const Vector degree = s.rowwise().sum();
  for (Index i = 0; i < n; ++i)
    if (!(degree(i) > 0.0)) throw DegenerateDegree(static_cast<long>(i));
  const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  Matrix lap = -(inv_sqrt.asDiagonal() * s * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  return 0.5 * (lap + lap.transpose());
}

inline Vector laplacian_spectrum(const Matrix& s) {
  if (s.rows() == 1) return Vector::Zero(1);
  return Eigen::SelfAdjointEigenSolver<Matrix>(normalized_laplacian(s), Eigen::EigenvaluesOnly).eigenvalues();
}

/// Rows of the K eigenvectors with smallest eigenvalues, each scaled to unit length.
inline Matrix spectral_embed(const Matrix& s, Index k) {
  const Index n = s.rows();
  if (s.cols() != n) throw ShapeMismatch("similarity must be square");
  if (k < 1 || k > n) throw InvalidParams("K must lie in [1, n]");
  if (n == 1) return Matrix::Ones(1, 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(normalized_laplacian(s));
  Matrix e = es.eigenvectors().leftCols(k);
  for (Index i = 0; i < n; ++i) {
    const double norm = e.row(i).norm();
    if (norm > 0.0) e.row(i) /= norm;
  }
  return e;
}

/// Index of the largest gap among the first min(n, 20) eigenvalues; ties go to the smaller K.
inline Index eigengap_k(const Vector& eigenvalues) {
  const Index m = std::min<Index>(eigenvalues.size(), 20);
  Index best = 1;
  double best_gap = -1.0;
  for (Index k = 1; k < m; ++k) {
    const double gap = eigenvalues(k) - eigenvalues(k - 1);
    if (gap > best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

struct KMeansOptions {
  int max_iters = 300;
  int restarts = 10;
};

namespace detail {

struct KMeansRun {
  std::vector<int> assign;
  double inertia = 0.0;
};

inline KMeansRun kmeans_once(const Matrix& pts, Index k, Rng& rng, int max_iters) {
  const Index n = pts.rows();
  Matrix centers(k, pts.cols());
  // k-means++ seeding
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  Index first = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  centers.row(0) = pts.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  for (Index c = 1; c < k; ++c) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], (pts.row(i) - centers.row(c - 1)).squaredNorm());
      total += d2[static_cast<std::size_t>(i)];
    }
    Index pick = -1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (Index i = 0; i < n; ++i) {
        target -= d2[static_cast<std::size_t>(i)];
        if (target < 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0)
        for (Index i = n - 1; i >= 0; --i)
          if (d2[static_cast<std::size_t>(i)] > 0.0) {
            pick = i;
            break;
          }
    } else {
      // All remaining points coincide with a center: take the next unchosen one.
      std::vector<Index> free;
      for (Index i = 0; i < n; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) free.push_back(i);
      pick = free[static_cast<std::size_t>(rng.uniform_index(free.size()))];
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    centers.row(c) = pts.row(pick);
  }

  KMeansRun run;
  run.assign.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Index c = 0; c < k; ++c) {
        const double dc = (pts.row(i) - centers.row(c)).squaredNorm();
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      if (run.assign[static_cast<std::size_t>(i)] != best) {
        run.assign[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed && it > 0) break;
    Matrix sums = Matrix::Zero(k, pts.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(run.assign[static_cast<std::size_t>(i)]) += pts.row(i);
      ++counts[static_cast<std::size_t>(run.assign[static_cast<std::size_t>(i)])];
    }
    for (Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: reseed at the point farthest from its current center.
      Index far = 0;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        const double di = (pts.row(i) - centers.row(run.assign[static_cast<std::size_t>(i)])).squaredNorm();
        if (di > far_d) {
          far_d = di;
          far = i;
        }
      }
      centers.row(c) = pts.row(far);
      run.assign[static_cast<std::size_t>(far)] = static_cast<int>(c);
      changed = true;
    }
  }
  run.inertia = 0.0;
  for (Index i = 0; i < n; ++i)
    run.inertia += (pts.row(i) - centers.row(run.assign[static_cast<std::size_t>(i)])).squaredNorm();
  return run;
}

}  // namespace detail

/// Seeded k-means++ / Lloyd with restarts; returns canonical 1-based labels.
inline Labels kmeans(const Matrix& points, Index k, std::uint64_t seed, const KMeansOptions& opts = {}) {
  const Index n = points.rows();
  if (n < 1) throw InvalidParams("k-means needs at least one point");
  if (k < 1 || k > n) throw InvalidParams("K must lie in [1, n]");
  if (k == 1) return Labels(static_cast<std::size_t>(n), 1);
  Rng rng = Rng::stream("kmeans", seed);
  detail::KMeansRun best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    auto run = detail::kmeans_once(points, k, rng, opts.max_iters);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  Labels labels(best.assign.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = best.assign[i] + 1;
  return canonical_labels(labels);
}

struct ClusterOptions {
  std::optional<Index> k;
  double eps_sim = 0.0;  // <= 0 selects the median-relative default
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Labels for a similarity matrix; K from the eigengap when not given.
inline Labels cluster_similarity(const Matrix& s, const ClusterOptions& opts) {
  const Index n = s.rows();
  Index k = 0;
  if (opts.k) {
    k = *opts.k;
    if (k < 1 || k > n) throw InvalidParams("K = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  } else {
    k = eigengap_k(laplacian_spectrum(s));
  }
  return kmeans(spectral_embed(s, k), k, opts.seed);
}

inline Labels cluster(const BasisSet& bases, const ClusterOptions& opts = {}) {
  return cluster_similarity(similarity(bases, opts.eps_sim, opts.threads), opts);
}

}  // namespace fsc
