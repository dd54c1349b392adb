#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "qut/qut_engine.hpp"
#include "qut/solvers.hpp"
#include "test_util.hpp"

using namespace qut;
using namespace qut::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Upper alpha-quantile of ||Z||_inf for Z ~ N(0, I_P).
double max_abs_normal_quantile(double alpha, Index p) {
  return normal_quantile((1.0 + std::pow(1.0 - alpha, 1.0 / static_cast<double>(p))) / 2.0);
}

NullSampler identity_sampler(Index p, std::uint64_t seed) {
  NullSampler s;
  s.x0 = Matrix(p, 0);
  s.x = Matrix::Identity(p, p);
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Quantile, OrderStatisticConvention) {
  std::vector<double> draws{10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
  EXPECT_EQ(empirical_quantile(draws, 0.05, 0).lambda_qut, 10.0);
  EXPECT_EQ(empirical_quantile(draws, 0.3, 0).lambda_qut, 7.0);
  EXPECT_EQ(empirical_quantile({4.2}, 0.5, 0).lambda_qut, 4.2);
  const ThresholdResult r = empirical_quantile({1.0, kInf, 2.0, kInf}, 0.4, 0);
  EXPECT_EQ(r.lambda_qut, kInf);
  EXPECT_DOUBLE_EQ(r.infinite_fraction, 0.5);
  EXPECT_TRUE(r.quantile_infinite());
  EXPECT_EQ(empirical_quantile({1.0, kInf, 2.0, 3.0}, 0.5, 0).lambda_qut, 2.0);
  EXPECT_THROW(empirical_quantile({1.0}, 0.0, 0), InputError);
  EXPECT_THROW(empirical_quantile({}, 0.05, 0), InputError);
}

TEST(Qut, SingleDrawAtMedianLevel) {
  const NullSampler s = identity_sampler(3, 9);
  const double draw = sample_null_stat(s, penalty::Lasso{}, 0);
  EXPECT_EQ(compute_qut(s, penalty::Lasso{}, 0.5, 1, 1).lambda_qut, draw);
}

TEST(Qut, IdentityDesignStatisticIsMaxAbsNoise) {
  NullSampler s = identity_sampler(6, 4);
  for (std::uint64_t i = 0; i < 20; ++i) {
    Engine eng = stream_engine(s.seed, i);
    const Vector z = draw_null_response(s, s.x0, eng);
    EXPECT_DOUBLE_EQ(sample_null_stat(s, penalty::Lasso{}, i), z.lpNorm<Eigen::Infinity>());
  }
}

TEST(Qut, OneDimensionalAnalyticQuantile) {
  const NullSampler s = identity_sampler(1, 5);
  const double q = compute_qut(s, penalty::Lasso{}, 0.05, 100000, 2).lambda_qut;
  EXPECT_NEAR(q, normal_quantile(0.975), 0.02);
}

TEST(Qut, IdentityDesignAnalyticQuantile) {
  for (Index p : {5, 10, 50}) {
    const NullSampler s = identity_sampler(p, 6 + static_cast<std::uint64_t>(p));
    const double q = compute_qut(s, penalty::Lasso{}, 0.05, 20000, 2).lambda_qut;
    EXPECT_NEAR(q, max_abs_normal_quantile(0.05, p), 0.05) << "P=" << p;
  }
}

TEST(Qut, SigmaScalesLinearly) {
  NullSampler s = identity_sampler(8, 7);
  const double a = compute_qut(s, penalty::Lasso{}, 0.1, 500, 1).lambda_qut;
  s.sigma = 2.0;
  const double b = compute_qut(s, penalty::Lasso{}, 0.1, 500, 1).lambda_qut;
  EXPECT_NEAR(b, 2.0 * a, 1e-12 * b);
}

TEST(Qut, GaussianStatisticIgnoresIntercept) {
  Engine eng = stream_engine(91, 0);
  ProblemInstance inst = with_intercept(gaussian_matrix(eng, 20, 30), gaussian_vector(eng, 20));
  NullSampler a = make_sampler(inst, 17);
  NullSampler b = a;
  a.intercept_beta0 = Vector::Zero(1);
  b.intercept_beta0 = Vector::Constant(1, 100.0);
  EXPECT_EQ(sample_null_stats(a, penalty::Lasso{}, 200, 1), sample_null_stats(b, penalty::Lasso{}, 200, 1));
}

TEST(Qut, MonotoneInAlpha) {
  Engine eng = stream_engine(92, 0);
  ProblemInstance inst = with_intercept(gaussian_matrix(eng, 25, 40), gaussian_vector(eng, 25));
  const NullSampler s = make_sampler(inst, 3);
  double prev = INFINITY;
  for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.5, 0.9}) {
    const double q = compute_qut(s, penalty::Lasso{}, alpha, 1000, 1).lambda_qut;
    EXPECT_LE(q, prev);
    prev = q;
  }
}

TEST(Qut, DeterministicAcrossWorkerCounts) {
  Engine eng = stream_engine(93, 0);
  for (const auto& fam : {GlmFamily::gaussian(), GlmFamily::poisson()}) {
    ProblemInstance inst = with_intercept(gaussian_matrix(eng, 30, 20), Vector::Ones(30), fam);
    for (DesignMode design : {DesignMode::Fixed, DesignMode::RandomBootstrapRows}) {
      NullSampler s = make_sampler(inst, 1234, design);
      s.intercept_beta0 = Vector::Constant(1, 0.3);
      const auto one = sample_null_stats(s, penalty::Lasso{}, 300, 1);
      const auto four = sample_null_stats(s, penalty::Lasso{}, 300, 4);
      EXPECT_EQ(one, four);
      EXPECT_EQ(compute_qut(s, penalty::Lasso{}, 0.05, 300, 3).lambda_qut,
                compute_qut(s, penalty::Lasso{}, 0.05, 300, 1).lambda_qut);
    }
  }
}

TEST(Qut, RandomDesignIsFiniteAndReproducible) {
  Engine eng = stream_engine(94, 0);
  ProblemInstance inst = with_intercept(gaussian_matrix(eng, 30, 20), gaussian_vector(eng, 30));
  const NullSampler s = make_sampler(inst, 55, DesignMode::RandomBootstrapRows);
  const ThresholdResult a = compute_qut(s, penalty::Lasso{}, 0.05, 500, 1);
  const ThresholdResult b = compute_qut(s, penalty::Lasso{}, 0.05, 500, 2);
  EXPECT_TRUE(std::isfinite(a.lambda_qut));
  EXPECT_EQ(a.lambda_qut, b.lambda_qut);
  const ThresholdResult fixed = compute_qut(make_sampler(inst, 55), penalty::Lasso{}, 0.05, 500, 1);
  EXPECT_NE(a.lambda_qut, fixed.lambda_qut);
}

TEST(Qut, PoissonInfiniteFractionMatchesEmptyResponseProbability) {
  // Lambda is infinite exactly when every count is zero: probability exp(-N mu).
  Engine eng = stream_engine(95, 0);
  const Index n = 5;
  const double mu = 0.2;
  ProblemInstance inst = with_intercept(gaussian_matrix(eng, n, 3), Vector::Ones(n), GlmFamily::poisson());
  NullSampler s = make_sampler(inst, 77);
  s.intercept_beta0 = Vector::Constant(1, std::log(mu));
  const ThresholdResult r = compute_qut(s, penalty::Lasso{}, 0.05, 4000, 1);
  EXPECT_NEAR(r.infinite_fraction, std::exp(-static_cast<double>(n) * mu), 0.03);
  EXPECT_TRUE(r.quantile_infinite());
}

TEST(Qut, GaussianNeverInfinite) {
  Engine eng = stream_engine(96, 0);
  ProblemInstance inst = with_intercept(gaussian_matrix(eng, 10, 5), gaussian_vector(eng, 10));
  const ThresholdResult r = compute_qut(make_sampler(inst, 1), penalty::Lasso{}, 0.05, 2000, 1);
  EXPECT_EQ(r.infinite_fraction, 0.0);
}

TEST(Qut, WeakFamilywiseErrorControl) {
  // Selection frequency under the null over 400 datasets; exact binomial 99%
  // band around 0.05 for n = 400 is [0.0275, 0.0775].
  Engine eng = stream_engine(97, 0);
  const Matrix x = gaussian_matrix(eng, 30, 60);
  ProblemInstance inst = with_intercept(x, Vector::Zero(30));
  NullSampler s = make_sampler(inst, 2024);
  const double lambda = compute_qut(s, penalty::Lasso{}, 0.05, 4000, 2).lambda_qut;
  int selected = 0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    Engine e = stream_engine(derive_seed(98, 1), static_cast<std::uint64_t>(r));
    inst.y = gaussian_vector(e, 30).array() + 1.0;
    if (!lasso_fit(inst, lambda).is_zero()) ++selected;
  }
  const double freq = static_cast<double>(selected) / reps;
  EXPECT_GE(freq, 0.0275);
  EXPECT_LE(freq, 0.0775);
}

TEST(ClosedForm, Arithmetic) {
  const auto bss = closed_form_qut(ClosedFormKind::BestSubsetOrthonormal, {1.0, 1024, 1});
  EXPECT_NEAR(bss.lambda, std::log(1024.0), 1e-12);
  EXPECT_NEAR(bss.implied_alpha, 1.0 / std::sqrt(M_PI * std::log(1024.0)), 1e-12);
  for (Index p : {16, 1000, 4096}) {
    const auto g = closed_form_qut(ClosedFormKind::GroupLassoOrthonormal, {1.0, p, 1});
    EXPECT_NEAR(g.lambda, std::sqrt(2.0 * std::log(static_cast<double>(p)) - std::log(M_PI)), 1e-12);
  }
  const auto s2 = closed_form_qut(ClosedFormKind::BestSubsetOrthonormal, {2.0, 1024, 1});
  EXPECT_NEAR(s2.lambda, 4.0 * std::log(1024.0), 1e-12);
}

TEST(ClosedForm, BestSubsetMonteCarloAgreement) {
  const ClosedFormParams params{1.0, 1024, 1};
  const ThresholdResult mc = mc_orthonormal_qut(ClosedFormKind::BestSubsetOrthonormal, params,
                                                alpha_bar(1024), 20000, 8, 2);
  EXPECT_NEAR(mc.lambda_qut / std::log(1024.0), 1.0, 0.05);
}

TEST(ClosedForm, MonteCarloMatchesNullStatistic) {
  // The orthonormal shortcut must agree with the general Monte Carlo path on
  // X = I, where X^T Z = Z.
  NullSampler s = identity_sampler(20, 31);
  const ThresholdResult general = compute_qut(s, penalty::BestSubset{}, 0.1, 500, 1);
  const ThresholdResult shortcut =
      mc_orthonormal_qut(ClosedFormKind::BestSubsetOrthonormal, {1.0, 20, 1}, 0.1, 500, 31, 1);
  EXPECT_NEAR(general.lambda_qut, shortcut.lambda_qut, 1e-12 * general.lambda_qut);
}

TEST(GlmPipeline, InitialStepIsLogitOfMean) {
  Engine eng = stream_engine(99, 0);
  const Matrix x = gaussian_matrix(eng, 40, 10);
  Vector y = glm_response(eng, GlmFamily::bernoulli(), Vector::Zero(40));
  ProblemInstance inst = with_intercept(x, y, GlmFamily::bernoulli());
  const GlmPipelineResult r = qut_pipeline_glm(inst, 0.05, 500, 3, 1);
  const double ybar = y.mean();
  EXPECT_NEAR(r.null_beta0[0], std::log(ybar / (1.0 - ybar)), 1e-9);
  EXPECT_TRUE(std::isfinite(r.threshold.lambda_qut));
  EXPECT_EQ(r.penalized.lambda, r.threshold.lambda_qut);
}

TEST(GlmPipeline, OutsideDomainIsDomainError) {
  Engine eng = stream_engine(100, 0);
  ProblemInstance inst = with_intercept(gaussian_matrix(eng, 10, 4), Vector::Ones(10), GlmFamily::bernoulli());
  EXPECT_THROW(qut_pipeline_glm(inst, 0.05, 100, 1, 1), DomainError);
}
