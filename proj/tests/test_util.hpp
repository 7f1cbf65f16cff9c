#pragma once

#include <cstdint>

#include "fsc/fsc.hpp"

namespace fsc::test {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, const char* purpose = "test") {
  Rng rng = Rng::stream(purpose, seed);
  return rng.gaussian(rows, cols);
}

inline Mask random_mask(Index rows, Index cols, double p, std::uint64_t seed) { return gen_mask(rows, cols, p, seed).mask; }

inline BasisSet random_bases(Index d, Index r, Index n, std::uint64_t seed) {
  BasisSet b;
  for (Index i = 0; i < n; ++i) b.push_back(random_matrix(d, r, seed * 1000 + static_cast<std::uint64_t>(i), "basis"));
  return b;
}

/// Central finite-difference gradient of the objective with respect to U_i.
inline Matrix numeric_gradient(const MaskedMatrix& x, BasisSet bases, double lambda, Index i, double h = 1e-6) {
  Matrix g(bases[static_cast<std::size_t>(i)].rows(), bases[static_cast<std::size_t>(i)].cols());
  for (Index a = 0; a < g.rows(); ++a)
    for (Index b = 0; b < g.cols(); ++b) {
      double& e = bases[static_cast<std::size_t>(i)](a, b);
      const double keep = e;
      e = keep + h;
      const double fp = objective_masked(x, bases, lambda);
      e = keep - h;
      const double fm = objective_masked(x, bases, lambda);
      e = keep;
      g(a, b) = (fp - fm) / (2.0 * h);
    }
  return g;
}

/// Objective from its definition with explicit d x d projectors.
inline double brute_objective(const MaskedMatrix& x, const BasisSet& bases, double lambda) {
  double f = 0.0;
  std::vector<Matrix> p;
  for (Index j = 0; j < x.cols(); ++j) {
    const auto& u = bases[static_cast<std::size_t>(j)];
    const auto& omega = x.pattern(j);
    const Matrix uw = restrict_rows(u, omega);
    const Matrix pw = uw * (uw.transpose() * uw).inverse() * uw.transpose();
    const Vector xw = x.observed_column(j);
    f += (xw - pw * xw).squaredNorm();
    p.push_back(u * (u.transpose() * u).inverse() * u.transpose());
  }
  double fuse = 0.0;
  for (const auto& a : p)
    for (const auto& b : p) fuse += (a - b).squaredNorm();
  return f + 0.5 * lambda * fuse;
}

}  // namespace fsc::test
