#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fsc;
using namespace fsc::test;

namespace {

ClusterModel exact_model(const SyntheticInstance& inst) {
  BasisSet bases;
  for (Index j = 0; j < inst.x.cols(); ++j)
    bases.push_back(inst.true_bases[static_cast<std::size_t>(inst.true_labels[static_cast<std::size_t>(j)] - 1)]);
  return build_cluster_model(MaskedMatrix(inst.x), bases, inst.true_labels);
}

}  // namespace

TEST(DefaultGrid, ShapeAndEnds) {
  const auto g = default_lambda_grid(2.0);
  ASSERT_EQ(g.size(), 17u);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_NEAR(g[1], 2e-4, 1e-18);
  EXPECT_NEAR(g[16], 200.0, 1e-10);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_GT(g[k], g[k - 1]);
}

TEST(FitScore, DofDifferenceIsExact) {
  const double a = aic_score(3.5, 1000, 3, 2, 30);
  const double b = aic_score(3.5, 1000, 4, 2, 30);
  EXPECT_EQ(b - a, 2.0 * 2 * 28);
  EXPECT_EQ(aic_score(0.0, 10, 1, 1, 5), aic_score(1e-40, 10, 1, 1, 5));
}

TEST(FitScore, CorrectModelBeatsSplitCluster) {
  UosParams p;
  p.d = 30;
  p.k = 3;
  p.r = 2;
  p.seed = 3;
  // A little noise keeps RSS far above rounding error, which would otherwise
  // decide the comparison through the log term.
  p.sigma = 1e-3;
  const auto inst = gen_uos(p);
  const ClusterModel good = exact_model(inst);
  Labels split = inst.true_labels;
  for (std::size_t j = 0; j < split.size(); ++j)
    if (split[j] == 1 && j % 2 == 0) split[j] = 4;
  BasisSet bases;
  for (int l : inst.true_labels) bases.push_back(inst.true_bases[static_cast<std::size_t>(l - 1)]);
  const ClusterModel worse = build_cluster_model(MaskedMatrix(inst.x), bases, split);
  EXPECT_LT(fit_score(MaskedMatrix(inst.x), good), fit_score(MaskedMatrix(inst.x), worse));
}

TEST(FitScore, PureNoisePrefersSmallModel) {
  // The penalty counts subspace parameters only, not the r coefficients per
  // column, so d must be large next to the group size for it to outweigh the
  // variance rank-5 groups absorb; at d = 300 with 10 columns per group it does.
  int wins = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix x = random_matrix(300, 40, s, "noise");
    const MaskedMatrix xm(x);
    Labels one(40, 1), four(40);
    for (int j = 0; j < 40; ++j) four[static_cast<std::size_t>(j)] = j % 4 + 1;
    // Every group gets its best-fitting (PCA) basis.
    auto pca = [&](const Labels& l, int g, Index r) {
      std::vector<Index> cols;
      for (Index j = 0; j < 40; ++j)
        if (l[static_cast<std::size_t>(j)] == g) cols.push_back(j);
      Matrix sub(300, static_cast<Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Index>(c)) = x.col(cols[c]);
      return Matrix(Eigen::BDCSVD<Matrix>(sub, Eigen::ComputeThinU).matrixU().leftCols(r));
    };
    BasisSet b1, b5;
    for (Index j = 0; j < 40; ++j) {
      b1.push_back(pca(one, 1, 1));
      b5.push_back(pca(four, four[static_cast<std::size_t>(j)], 5));
    }
    const double s1 = fit_score(xm, build_cluster_model(xm, b1, one));
    const double s4 = fit_score(xm, build_cluster_model(xm, b5, four));
    wins += s1 < s4;
  }
  EXPECT_GE(wins, 9);
}

TEST(SelectModel, SingleEntryAndFailures) {
  const Matrix u = random_matrix(10, 2, 1);
  const MaskedMatrix x(u * random_matrix(2, 8, 2));
  FscConfig cfg;
  cfg.rank = 2;
  const auto rep = lambda_path(x, {1.0}, cfg);
  ASSERT_EQ(rep.entries.size(), 1u);
  EXPECT_EQ(select_model(rep, x).index, 0u);

  LambdaPathReport failed;
  failed.entries.resize(2);
  EXPECT_THROW(select_model(failed, x), AllEntriesFailed);
  EXPECT_THROW(select_model(LambdaPathReport{}, x), InvalidParams);
}

TEST(SelectModel, IdenticalColumnsGiveOneCluster) {
  const Vector v = random_matrix(12, 1, 3);
  Matrix x(12, 10);
  for (Index j = 0; j < 10; ++j) x.col(j) = (1.0 + static_cast<double>(j)) * v;
  FscConfig cfg;
  cfg.rank = 1;
  const MaskedMatrix xm(x);
  const auto rep = lambda_path(xm, default_lambda_grid(default_lambda_scale(12, 10)), cfg);
  EXPECT_EQ(select_model(rep, xm).model.k(), 1);
}

TEST(SelectModel, TieGoesToFewerClusters) {
  const MaskedMatrix x(random_matrix(6, 4, 1));
  LambdaPathReport rep;
  for (int k : {2, 1}) {
    PathEntry e;
    e.ok = true;
    e.fit_score = -5.0;
    e.lambda = 0.1 * k;
    e.cluster_count = k;
    e.labels = k == 1 ? Labels{1, 1, 1, 1} : Labels{1, 1, 2, 2};
    e.bases = random_bases(6, 2, 4, 1);
    rep.entries.push_back(e);
  }
  EXPECT_EQ(select_model(rep, x).index, 1u);
  std::swap(rep.entries[0], rep.entries[1]);
  EXPECT_EQ(select_model(rep, x).index, 0u);
}

TEST(LambdaPath, EndpointsOnSmallInstance) {
  UosParams p;
  p.d = 20;
  p.k = 2;
  p.r = 2;
  p.n_per_cluster = 8;
  p.seed = 4;
  const auto inst = gen_uos(p);
  const MaskedMatrix x(inst.x);
  FscConfig cfg;
  cfg.rank = 2;
  cfg.seed = 4;
  const double scale = default_lambda_scale(20, 16);
  const auto rep = lambda_path(x, default_lambda_grid(scale), cfg);
  ASSERT_EQ(rep.entries.size(), 17u);
  EXPECT_EQ(rep.entries.front().cluster_count, 16);
  for (const auto& e : rep.entries) {
    EXPECT_TRUE(e.ok) << e.error;
    EXPECT_EQ(e.labels.size(), 16u);
  }
  const auto top = adaptive_lambda_max(x, cfg, 2.0 * rep.entries.back().lambda, scale * 1048576.0,
                                       rep.entries.back().bases);
  EXPECT_EQ(top.cluster_count, 1);
}

TEST(LambdaPath, Validation) {
  const MaskedMatrix x(random_matrix(5, 4, 1));
  FscConfig cfg;
  EXPECT_THROW(lambda_path(x, {}, cfg), InvalidParams);
  EXPECT_THROW(lambda_path(x, {0.2, 0.1}, cfg), InvalidParams);
  EXPECT_THROW(lambda_path(x, {-1.0}, cfg), InvalidParams);
}

TEST(LambdaPath, FailuresAreRecorded) {
  Mask m = Mask::Constant(5, 4, true);
  m.col(3).setConstant(false);
  m(0, 3) = true;
  const MaskedMatrix x(random_matrix(5, 4, 1), m);
  FscConfig cfg;
  cfg.rank = 2;
  const auto rep = lambda_path(x, {0.0, 1.0}, cfg);
  ASSERT_EQ(rep.entries.size(), 2u);
  EXPECT_FALSE(rep.entries[0].ok);
  EXPECT_NE(rep.entries[0].error.find("column 3"), std::string::npos);
}

TEST(RankSweep, SinglePlaneExplainedAtTwo) {
  const Matrix u = random_matrix(15, 2, 7);
  const MaskedMatrix x(u * random_matrix(2, 12, 8));
  FscConfig cfg;
  cfg.lambda = 1.0;
  const auto rep = rank_sweep(x, {1, 2}, cfg);
  ASSERT_EQ(rep.entries.size(), 2u);
  EXPECT_TRUE(rep.entries[0].explained.empty());
  EXPECT_EQ(rep.entries[1].explained.size(), 12u);
}

TEST(RankSweep, LinesPrunedFirst) {
  const Vector line = random_matrix(15, 1, 1);
  const Matrix plane = random_matrix(15, 2, 2);
  Matrix x(15, 16);
  for (Index j = 0; j < 6; ++j) x.col(j) = (1.0 + 0.5 * static_cast<double>(j)) * line;
  x.rightCols(10) = plane * random_matrix(2, 10, 3);
  // Fusion tilts the line bases by O(lambda), so lambda must be small for the
  // line residuals to clear tol_prune = 1e-6.
  FscConfig cfg;
  cfg.lambda = 1e-6;
  cfg.tol_rel = 1e-16;
  cfg.max_iters = 20000;
  const auto rep = rank_sweep(MaskedMatrix(x), {1, 2}, cfg);
  EXPECT_EQ(rep.entries[0].explained, (std::vector<Index>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(rep.entries[1].active.size(), 10u);
}

TEST(RankSweep, SingleRankIsOneFit) {
  const Matrix u = random_matrix(10, 2, 2);
  const MaskedMatrix x(u * random_matrix(2, 8, 3));
  FscConfig cfg;
  cfg.rank = 2;
  cfg.lambda = 1.0;
  const auto rep = rank_sweep(x, {2}, cfg);
  const auto res = fit(x, cfg);
  EXPECT_EQ(rep.entries[0].k, count_clusters(fused_clustering(res.bases, PathOptions{})));
  EXPECT_THROW(rank_sweep(x, {2, 1}, cfg), InvalidParams);
  EXPECT_THROW(rank_sweep(x, {0}, cfg), InvalidParams);
}
