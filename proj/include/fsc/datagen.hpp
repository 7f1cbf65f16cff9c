#pragma once

// Synthetic union-of-subspaces data and Bernoulli observation masks.

#include <cstdint>
#include <string>
#include <vector>

#include "fsc/error.hpp"
#include "fsc/geometry.hpp"
#include "fsc/masked_matrix.hpp"
#include "fsc/rng.hpp"
#include "fsc/spectral.hpp"

namespace fsc {

struct UosParams {
  Index d = 100;
  Index k = 4;
  Index r = 5;
  Index n_per_cluster = 20;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (r < 1 || d < r) throw InvalidParams("need d >= r >= 1");
    if (k < 1) throw InvalidParams("need K >= 1");
    if (n_per_cluster < 1) throw InvalidParams("need n_k >= 1");
    if (!(sigma >= 0.0)) throw InvalidParams("need sigma >= 0");
  }
};

struct SyntheticInstance {
  Matrix x;                    // d x (K n_k)
  Labels true_labels;          // block structured, 1..K
  std::vector<Matrix> true_bases;
  UosParams params;
};

/// X = [U_1 T_1 ... U_K T_K] + sigma * N, all factors i.i.d. standard normal.
inline SyntheticInstance gen_uos(const UosParams& p) {
  p.validate();
  SyntheticInstance inst;
  inst.params = p;
  const Index n = p.k * p.n_per_cluster;
  inst.x.resize(p.d, n);
  for (Index c = 0; c < p.k; ++c) {
    Rng basis_rng = Rng::stream("uos-basis", p.seed, static_cast<std::uint64_t>(c));
    Rng coeff_rng = Rng::stream("uos-coeff", p.seed, static_cast<std::uint64_t>(c));
    Matrix u = basis_rng.gaussian(p.d, p.r);
    const Matrix theta = coeff_rng.gaussian(p.r, p.n_per_cluster);
    inst.x.middleCols(c * p.n_per_cluster, p.n_per_cluster) = u * theta;
    inst.true_bases.push_back(std::move(u));
    for (Index j = 0; j < p.n_per_cluster; ++j) inst.true_labels.push_back(static_cast<int>(c) + 1);
  }
  if (p.sigma > 0.0) {
    Rng noise_rng = Rng::stream("uos-noise", p.seed);
    inst.x += p.sigma * noise_rng.gaussian(p.d, n);
  }
  return inst;
}

struct MaskSample {
  Mask mask;
  /// Columns redrawn because the first draw left them with no observed entry.
  std::vector<Index> resampled_columns;
};

/// Independent Bernoulli(p) observation mask. A column drawn fully missing
/// is redrawn (and reported) until it has at least one observed entry.
inline MaskSample gen_mask(Index d, Index n, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidParams("p must lie in (0, 1]");
  if (d < 1 || n < 1) throw InvalidParams("mask dimensions must be positive");
  MaskSample out;
  out.mask.resize(d, n);
  Rng rng = Rng::stream("mask", seed);
  for (Index j = 0; j < n; ++j) {
    bool redrawn = false;
    while (true) {
      for (Index i = 0; i < d; ++i) out.mask(i, j) = rng.bernoulli(p);
      if (out.mask.col(j).any()) break;
      redrawn = true;
    }
    if (redrawn) out.resampled_columns.push_back(j);
  }
  return out;
}

}  // namespace fsc
