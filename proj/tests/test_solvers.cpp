#include <gtest/gtest.h>

#include <cmath>

#include "qut/linalg.hpp"
#include "qut/solvers.hpp"
#include "qut/zerothresh.hpp"
#include "test_util.hpp"

using namespace qut;
using namespace qut::testing;

namespace {

/// Subgradient residual of X^T (y - mu) against lambda * d||beta||_1, plus
/// the unpenalized score, computed from scratch.
double glm_kkt(const ProblemInstance& inst, const SparseFit& fit) {
  Vector eta = inst.x * fit.beta;
  if (inst.p0() > 0) eta += inst.x0 * fit.beta0;
  const Vector r = inst.y - family_mean(inst.family, eta);
  double worst = l1_stationarity_residual(inst.x.transpose() * r, fit.beta, fit.lambda);
  if (inst.p0() > 0) worst = std::max(worst, (inst.x0.transpose() * r).lpNorm<Eigen::Infinity>());
  return worst;
}

ProblemInstance random_glm_instance(Engine& eng, const GlmFamily& fam, Index n, Index p) {
  const Matrix x = gaussian_matrix(eng, n, p);
  Vector beta = Vector::Zero(p);
  for (Index j = 0; j < std::min<Index>(3, p); ++j) beta[j] = 0.8 * (j % 2 ? -1.0 : 1.0);
  const double offset = fam.kind() == FamilyKind::Poisson ? 0.5 : 0.0;
  Vector y;
  do {
    y = glm_response(eng, fam, (x * beta).array() + offset);
  } while (!membership_D(with_intercept(x, y, fam)));
  return with_intercept(x, y, fam);
}

}  // namespace

TEST(Lasso, SoftThresholdExample) {
  const SparseFit fit = lasso_fit(without_intercept(Matrix::Identity(2, 2), Vector{{3.0, -1.0}}), 1.0);
  EXPECT_NEAR(fit.beta[0], 2.0, 1e-12);
  EXPECT_EQ(fit.beta[1], 0.0);
  EXPECT_EQ(fit.support, (IndexSet{0}));
}

TEST(Lasso, ZeroAtLambdaMax) {
  Engine eng = stream_engine(31, 0);
  for (int trial = 0; trial < 20; ++trial) {
    ProblemInstance inst = with_intercept(gaussian_matrix(eng, 12, 30), gaussian_vector(eng, 12));
    LassoSolver solver(inst);
    EXPECT_TRUE(solver.fit(solver.lambda_max()).is_zero());
    EXPECT_FALSE(solver.fit(solver.lambda_max() * (1 - 1e-3)).is_zero());
  }
}

TEST(Lasso, RandomProbeObjectiveOracle) {
  Engine eng = stream_engine(32, 0);
  ProblemInstance inst = without_intercept(gaussian_matrix(eng, 8, 5), gaussian_vector(eng, 8));
  const double lambda = 0.3;
  const SparseFit fit = lasso_fit(inst, lambda);
  EXPECT_LE(fit.kkt_residual, 1e-8);
  const Vector grad = inst.x.transpose() * (inst.y - inst.x * fit.beta);
  EXPECT_LE(l1_stationarity_residual(grad, fit.beta, lambda), 1e-8);
  const double best = lasso_objective(inst, fit.beta0, fit.beta, lambda);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 10000; ++k) {
    const double scale = std::pow(10.0, -4.0 + 4.0 * (k % 5) / 4.0);
    Vector probe = fit.beta;
    for (Index j = 0; j < probe.size(); ++j) probe[j] += scale * nd(eng);
    EXPECT_LE(best, lasso_objective(inst, fit.beta0, probe, lambda) + 1e-12);
  }
}

TEST(Lasso, InterceptHandledByProjection) {
  Engine eng = stream_engine(33, 0);
  const Matrix x = gaussian_matrix(eng, 20, 5);
  const Vector y = gaussian_vector(eng, 20).array() + 4.0;
  const ProblemInstance inst = with_intercept(x, y);
  const SparseFit fit = lasso_fit(inst, 2.0);
  const Vector r = y - inst.x0 * fit.beta0 - x * fit.beta;
  EXPECT_NEAR(r.sum(), 0.0, 1e-9);
  EXPECT_LE(l1_stationarity_residual(x.transpose() * r, fit.beta, 2.0), 1e-8);
}

TEST(Lasso, KktAndMonotoneObjectiveAlongPath) {
  Engine eng = stream_engine(34, 0);
  for (int trial = 0; trial < 10; ++trial) {
    ProblemInstance inst = with_intercept(gaussian_matrix(eng, 30, 60), gaussian_vector(eng, 30));
    LassoSolver solver(inst);
    const double lmax = solver.lambda_max();
    std::vector<double> grid;
    for (int k = 0; k < 30; ++k) grid.push_back(lmax * std::pow(0.8, k));
    const auto path = solver.path(grid);
    double prev = INFINITY;
    for (const auto& fit : path) {
      const Vector r = inst.y - inst.x0 * fit.beta0 - inst.x * fit.beta;
      EXPECT_LE(l1_stationarity_residual(inst.x.transpose() * r, fit.beta, fit.lambda), 1e-7);
      const double obj = lasso_objective(inst, fit.beta0, fit.beta, fit.lambda);
      EXPECT_LE(obj, prev + 1e-12);
      prev = obj;
    }
    EXPECT_TRUE(solver.fit(2.0 * lmax).is_zero());
    EXPECT_TRUE(solver.fit(1.5 * lmax).is_zero());
  }
}

TEST(Lasso, StandardizeIsRescaledFit) {
  // Opt-in standardization equals the plain fit on columns scaled to unit
  // mean square (after removing the intercept), mapped back to raw units.
  Engine eng = stream_engine(44, 0);
  Matrix x = gaussian_matrix(eng, 40, 15);
  for (Index j = 0; j < 15; ++j) x.col(j) *= std::exp(std::normal_distribution<double>()(eng));
  const Vector y = x.col(1) * 0.5 - x.col(4) * 0.2 + gaussian_vector(eng, 40);
  Vector s(15);
  for (Index j = 0; j < 15; ++j) {
    const Vector c = x.col(j).array() - x.col(j).mean();
    s[j] = c.norm() / std::sqrt(40.0);
  }
  const ProblemInstance raw = with_intercept(x, y);
  const ProblemInstance scaled = with_intercept(x * s.cwiseInverse().asDiagonal(), y);
  SolverConfig cfg;
  cfg.standardize = true;
  for (double frac : {0.8, 0.4, 0.1}) {
    const double lambda = frac * lambda0(scaled, penalty::Lasso{});
    const SparseFit a = lasso_fit(raw, lambda, cfg);
    const SparseFit b = lasso_fit(scaled, lambda);
    EXPECT_EQ(a.support, b.support);
    EXPECT_LT((a.beta - b.beta.cwiseQuotient(s)).lpNorm<Eigen::Infinity>(), 1e-7);
    EXPECT_NEAR(a.beta0[0], b.beta0[0], 1e-7);
  }
}

TEST(Lasso, PathMatchesColdFits) {
  Engine eng = stream_engine(35, 0);
  ProblemInstance inst = with_intercept(gaussian_matrix(eng, 25, 40), gaussian_vector(eng, 25));
  LassoSolver solver(inst);
  const double lmax = solver.lambda_max();
  const std::vector<double> grid{lmax * 0.9, lmax * 0.5, lmax * 0.2};
  const auto path = solver.path(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const SparseFit cold = lasso_fit(inst, grid[k]);
    EXPECT_NEAR(lasso_objective(inst, cold.beta0, cold.beta, grid[k]),
                lasso_objective(inst, path[k].beta0, path[k].beta, grid[k]), 1e-9);
  }
}

TEST(SqrtLasso, ZeroAboveThreshold) {
  Engine eng = stream_engine(41, 0);
  for (int trial = 0; trial < 10; ++trial) {
    ProblemInstance inst = without_intercept(gaussian_matrix(eng, 15, 8), gaussian_vector(eng, 15));
    const double l0 = (inst.x.transpose() * inst.y).lpNorm<Eigen::Infinity>() / inst.y.norm();
    EXPECT_TRUE(sqrt_lasso_fit(inst, l0).is_zero());
    EXPECT_FALSE(sqrt_lasso_fit(inst, l0 * (1 - 1e-3)).is_zero());
  }
}

TEST(SqrtLasso, OneDimensionalExample) {
  const SparseFit fit = sqrt_lasso_fit(without_intercept(Matrix::Identity(1, 1), Vector{{2.0}}), 0.5);
  EXPECT_NEAR(fit.beta[0], 2.0, 1e-8);
}

TEST(SqrtLasso, MatchesGridSearchOverLassoPath) {
  // Every sqrt-lasso solution is a lasso solution for some lambda', so the
  // sqrt-lasso objective minimised over a fine lambda' grid is an upper bound
  // that approaches the optimum.
  Engine eng = stream_engine(42, 0);
  for (int trial = 0; trial < 5; ++trial) {
    ProblemInstance inst = with_intercept(gaussian_matrix(eng, 20, 10), gaussian_vector(eng, 20));
    const Vector yc = inst.y.array() - inst.y.mean();
    const double l0 = (inst.x.transpose() * yc).lpNorm<Eigen::Infinity>() / yc.norm();
    const double lambda = 0.5 * l0;
    const SparseFit fit = sqrt_lasso_fit(inst, lambda);
    const double obj = sqrt_lasso_objective(inst, fit.beta0, fit.beta, lambda);

    LassoSolver solver(inst);
    const double lmax = solver.lambda_max();
    auto eval = [&](double lam) {
      solver.reset();
      const SparseFit f = solver.fit(lam);
      return sqrt_lasso_objective(inst, f.beta0, f.beta, lambda);
    };
    double best_log = 0.0, best = INFINITY;
    for (int k = 0; k <= 2000; ++k) {
      const double lg = std::log(lmax) - 12.0 * k / 2000.0;
      const double v = eval(std::exp(lg));
      if (v < best) best = v, best_log = lg;
    }
    double lo = best_log - 0.006, hi = best_log + 0.006;
    for (int it = 0; it < 80; ++it) {
      const double a = lo + (hi - lo) * 0.382, b = lo + (hi - lo) * 0.618;
      if (eval(std::exp(a)) < eval(std::exp(b)))
        hi = b;
      else
        lo = a;
    }
    best = std::min(best, eval(std::exp(0.5 * (lo + hi))));
    EXPECT_LE(obj, best + 1e-6);
    EXPECT_GE(obj, best - 1e-6);
  }
}

TEST(SqrtLasso, PivotalZeroThreshold) {
  Engine eng = stream_engine(43, 0);
  ProblemInstance inst = with_intercept(gaussian_matrix(eng, 20, 10), gaussian_vector(eng, 20));
  const double l0 = lambda0(inst, penalty::SqrtLasso{});
  ProblemInstance scaled = inst;
  scaled.y *= 7.0;
  EXPECT_TRUE(sqrt_lasso_fit(scaled, l0 * 1.001).is_zero());
  EXPECT_FALSE(sqrt_lasso_fit(scaled, l0 * 0.999).is_zero());
}

TEST(GlmLasso, GaussianMatchesLasso) {
  Engine eng = stream_engine(51, 0);
  for (int trial = 0; trial < 50; ++trial) {
    ProblemInstance inst = with_intercept(gaussian_matrix(eng, 20, 8), gaussian_vector(eng, 20));
    const double lambda = 0.3 * lambda0(inst, penalty::Lasso{});
    const SparseFit a = lasso_fit(inst, lambda);
    const SparseFit b = glm_lasso_fit(inst, lambda, SolverConfig::gaussian());
    EXPECT_LT((a.beta - b.beta).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_LT((a.beta0 - b.beta0).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(GlmLasso, BernoulliExample) {
  ProblemInstance inst;
  inst.x0 = Matrix::Ones(2, 1);
  inst.x = Matrix(2, 1);
  inst.x << 1.0, -1.0;
  inst.y = Vector{{0.0, 1.0}};
  inst.family = GlmFamily::bernoulli();
  const SparseFit fit = glm_lasso_fit(inst, 1.5);
  EXPECT_TRUE(fit.is_zero());
  EXPECT_NEAR(fit.beta0[0], 0.0, 1e-10);
}

TEST(GlmLasso, ZeroThresholdBoundaryAndKkt) {
  Engine eng = stream_engine(52, 0);
  for (const auto& fam : {GlmFamily::bernoulli(), GlmFamily::poisson(), GlmFamily::binomial(3)}) {
    for (int trial = 0; trial < 15; ++trial) {
      const ProblemInstance inst = random_glm_instance(eng, fam, 40, 15);
      const double l0 = lambda0_glm(inst);
      ASSERT_TRUE(std::isfinite(l0));
      const SparseFit above = glm_lasso_fit(inst, l0 * 1.001);
      const SparseFit below = glm_lasso_fit(inst, l0 * 0.999);
      EXPECT_TRUE(above.is_zero()) << fam.name();
      EXPECT_FALSE(below.is_zero()) << fam.name();
      for (const SparseFit* f : {&above, &below}) {
        EXPECT_TRUE(f->converged());
        EXPECT_LE(glm_kkt(inst, *f), 1e-6) << fam.name();
      }
      const SparseFit mid = glm_lasso_fit(inst, 0.3 * l0);
      EXPECT_LE(glm_kkt(inst, mid), 1e-6) << fam.name();
    }
  }
}

TEST(GlmLasso, FittedPredictorIsUnique) {
  Engine eng = stream_engine(53, 0);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const GlmFamily fam = trial % 2 ? GlmFamily::poisson() : GlmFamily::bernoulli();
    const ProblemInstance inst = random_glm_instance(eng, fam, 30, 10);
    const double lambda = 0.4 * lambda0_glm(inst);
    const SparseFit a = glm_lasso_fit(inst, lambda);
    SparseFit start;
    start.beta0 = Vector::Constant(1, 0.3 * nd(eng));
    start.beta = 0.2 * gaussian_vector(eng, 10);
    const SparseFit b = glm_lasso_fit(inst, lambda, SolverConfig::glm(), &start);
    const Vector eta_a = inst.x0 * a.beta0 + inst.x * a.beta;
    const Vector eta_b = inst.x0 * b.beta0 + inst.x * b.beta;
    EXPECT_LT((eta_a - eta_b).lpNorm<Eigen::Infinity>(), 1e-6) << fam.name();
  }
}

TEST(GlmLasso, NoSolutionOutsideDomain) {
  Engine eng = stream_engine(54, 0);
  const ProblemInstance inst = with_intercept(gaussian_matrix(eng, 10, 3), Vector::Zero(10),
                                              GlmFamily::poisson());
  EXPECT_THROW(glm_lasso_fit(inst, 1.0), NonExistenceError);
}

TEST(GlmLasso, PathIsDescendingAndCertified) {
  Engine eng = stream_engine(55, 0);
  const ProblemInstance inst = random_glm_instance(eng, GlmFamily::bernoulli(), 50, 20);
  const double l0 = lambda0_glm(inst);
  std::vector<double> grid;
  for (int k = 0; k < 20; ++k) grid.push_back(l0 * std::pow(0.85, k));
  const auto path = glm_lasso_path(inst, grid);
  ASSERT_FALSE(path.empty());
  EXPECT_TRUE(path.front().is_zero());
  for (const auto& f : path) EXPECT_LE(glm_kkt(inst, f), 1e-6);
}

TEST(NullMle, ClosedForms) {
  Engine eng = stream_engine(61, 0);
  const Vector y = gaussian_vector(eng, 9);
  auto null_inst = [](Vector yy, GlmFamily f) {
    return with_intercept(Matrix(yy.size(), 0), std::move(yy), f);
  };
  EXPECT_NEAR((*null_mle(null_inst(y, GlmFamily::gaussian())))[0], y.mean(), 1e-12);
  const Vector b{{0.0, 1.0, 1.0, 0.0, 1.0}};
  EXPECT_NEAR((*null_mle(null_inst(b, GlmFamily::bernoulli())))[0], std::log(0.6 / 0.4), 1e-10);
  EXPECT_FALSE(null_mle(null_inst(Vector::Zero(4), GlmFamily::poisson())).has_value());
}

TEST(NullMle, GeneralX0SolvesScoreEquations) {
  Engine eng = stream_engine(62, 0);
  Matrix x0(30, 2);
  x0.col(0).setOnes();
  x0.col(1) = gaussian_vector(eng, 30);
  ProblemInstance inst;
  inst.x0 = x0;
  inst.x = Matrix(30, 0);
  inst.family = GlmFamily::poisson();
  inst.y = glm_response(eng, inst.family, 0.5 * x0.col(1));
  const auto v = null_mle(inst);
  ASSERT_TRUE(v.has_value());
  const Vector score = x0.transpose() * (inst.y - family_mean(inst.family, x0 * *v));
  EXPECT_LT(score.lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(MleRefit, Examples) {
  Engine eng = stream_engine(63, 0);
  const Vector y = gaussian_vector(eng, 6);
  const SparseFit empty = mle_refit(with_intercept(gaussian_matrix(eng, 6, 3), y), {});
  EXPECT_NEAR(empty.beta0[0], y.mean(), 1e-12);
  EXPECT_TRUE(empty.is_zero());

  const Matrix x = gaussian_matrix(eng, 4, 4);
  const Vector y4 = gaussian_vector(eng, 4);
  const SparseFit full = mle_refit(without_intercept(x, y4), {0, 1, 2, 3});
  EXPECT_LT((full.beta - x.lu().solve(y4)).norm(), 1e-9);

  Matrix sep(6, 1);
  sep << -3, -2, -1, 1, 2, 3;
  const ProblemInstance separated =
      with_intercept(sep, Vector{{0, 0, 0, 1, 1, 1}}, GlmFamily::bernoulli());
  EXPECT_THROW(mle_refit(separated, {0}), NonExistenceError);
  EXPECT_THROW(mle_refit(with_intercept(gaussian_matrix(eng, 3, 5), gaussian_vector(eng, 3)),
                         {0, 1, 2}),
               RankDeficiencyError);
}

TEST(Tv1d, Examples) {
  const Vector y{{0.0, 1.0}};
  const Vector fit = tv1d_fit(y, 0.25);
  EXPECT_NEAR(fit[0], 0.25, 1e-12);
  EXPECT_NEAR(fit[1], 0.75, 1e-12);
  EXPECT_EQ(tv1d_fit(y, 0.0), y);
}

TEST(Svd, Examples) {
  Matrix y = Matrix::Zero(2, 2);
  y(0, 0) = 5.0;
  y(1, 1) = 2.0;
  const Matrix out = svd_soft_threshold(y, 3.0);
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 2.0;
  EXPECT_LT((out - expected).norm(), 1e-12);
  EXPECT_LT(svd_soft_threshold(y, 5.0).norm(), 1e-12);
}

TEST(Svd, SingularValuesAreSoftThresholded) {
  Engine eng = stream_engine(71, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix y = gaussian_matrix(eng, 6, 4);
    const double lambda = 0.8;
    const Vector d = Eigen::JacobiSVD<Matrix>(y).singularValues();
    const Vector e = Eigen::JacobiSVD<Matrix>(svd_soft_threshold(y, lambda)).singularValues();
    for (Index i = 0; i < d.size(); ++i) EXPECT_NEAR(e[i], std::max(d[i] - lambda, 0.0), 1e-10);
  }
}

TEST(Svd, RandomProbeObjectiveOracle) {
  Engine eng = stream_engine(72, 0);
  const Matrix y = gaussian_matrix(eng, 6, 4);
  const double lambda = 1.0;
  auto objective = [&](const Matrix& m) {
    return 0.5 * (y - m).squaredNorm() +
           lambda * Eigen::JacobiSVD<Matrix>(m).singularValues().sum();
  };
  const Matrix hat = svd_soft_threshold(y, lambda);
  const double best = objective(hat);
  for (int k = 0; k < 1000; ++k) {
    const double scale = std::pow(10.0, -3.0 + 3.0 * (k % 4) / 3.0);
    EXPECT_LE(best, objective(hat + scale * gaussian_matrix(eng, 6, 4)) + 1e-12);
  }
}
