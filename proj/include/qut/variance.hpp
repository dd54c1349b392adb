#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "qut/cross_validation.hpp"
#include "qut/model.hpp"
#include "qut/qut_engine.hpp"

namespace qut {

enum class VarianceMethod { ResidualCV, RCV, RefittedQUT };

std::string variance_method_name(VarianceMethod method);

struct VarianceEstimate {
  double sigma2 = 0.0;
  VarianceMethod method = VarianceMethod::ResidualCV;
  /// Half sizes (RCV-based methods); n1 = N for residual CV.
  Index n1 = 0;
  Index n2 = 0;
  /// Selected model sizes on each half; m1 = s_hat for residual CV.
  Index m1 = 0;
  Index m2 = 0;
  /// Bisection steps (refitted QUT).
  int iterations = 0;
  /// Refitted QUT: the bracket showed no sign change; sigma2 is the endpoint
  /// with the smaller |g|.
  bool no_sign_change = false;
  /// Refitted QUT: lambda^QUT at sigma = 1 for each half's design.
  double lambda_z1 = 0.0;
  double lambda_z2 = 0.0;
};

/// ||(I - P_X0) y||^2 / N
double projected_mean_square(const ProblemInstance& instance);

/// ||y - X0 beta0 - X beta||^2 / (N - s_hat); RankDeficiencyError for a
/// saturated model (N - s_hat < 1 or a vanishing residual).
double sigma2_from_fit(const ProblemInstance& instance, const SparseFit& fit);

/// Lasso tuned by K-fold CV-min, then sigma2_from_fit.
VarianceEstimate sigma2_residual_cv(const ProblemInstance& instance, const CvOptions& cv = {});

/// Rows of each half: a seeded permutation, the first ceil(N/2) rows forming
/// the first half. Both halves come back sorted.
std::pair<std::vector<Index>, std::vector<Index>> split_halves(Index n, std::uint64_t seed);

/// Model-selection rule run on one half; `half` is 0 or 1.
using SupportSelector = std::function<IndexSet(const ProblemInstance& data, int half)>;

/// Lasso + CV-min selector with the given CV options.
SupportSelector cv_min_selector(CvOptions cv);

/// Refitted cross-validation: select on one half, then estimate the residual
/// variance on the other half after projecting onto X0 and the selected
/// columns, with n_j - m_hat degrees of freedom; the two estimates are averaged.
VarianceEstimate sigma2_rcv(const ProblemInstance& instance, const SupportSelector& selector,
                            std::uint64_t split_seed);

struct RefittedQutOptions {
  double alpha = 0.05;
  int mc_samples = 1000;
  /// Stop once |g| <= tol * v_hat, with v_hat = projected_mean_square(y).
  double tol = 1e-4;
  int max_steps = 60;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  int workers = 1;
  /// Design mode of the lambda_Z simulation on each half.
  DesignMode design = DesignMode::Fixed;
};

/// Fixed point sigma^2 = sigma^2_RCV(sigma^2), where the RCV selector is the
/// lasso at sigma * lambda_Z on each half. Solved by bisection over
/// [1e-4 v_hat, 10 v_hat] with the row split held fixed.
VarianceEstimate sigma2_refitted_qut(const ProblemInstance& instance,
                                     const RefittedQutOptions& opts = {});

}  // namespace qut
