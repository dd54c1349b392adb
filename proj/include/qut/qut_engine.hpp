#pragma once

#include <cstdint>
#include <vector>

#include "qut/model.hpp"
#include "qut/random.hpp"
#include "qut/zerothresh.hpp"

namespace qut {

enum class DesignMode { Fixed, RandomBootstrapRows };

/// Null model H0: the penalized coefficients are zero and Y0 follows the
/// family with linear predictor X0 * intercept_beta0 (plus sigma * N(0, 1)
/// noise for the Gaussian family).
struct NullSampler {
  Matrix x0;
  Matrix x;
  GlmFamily family = GlmFamily::gaussian();
  DesignMode design = DesignMode::Fixed;
  double sigma = 1.0;
  /// Length P0. Unused by Gaussian statistics, which project X0 out.
  Vector intercept_beta0;
  std::uint64_t seed = 0;

  Index n() const { return x.rows(); }
  void validate() const;
};

/// Null sampler over the instance's design; intercept_beta0 is zero.
NullSampler make_sampler(const ProblemInstance& instance, std::uint64_t seed,
                         DesignMode design = DesignMode::Fixed);

/// Draws Y0 given the (possibly bootstrapped) rows of X0.
Vector draw_null_response(const NullSampler& sampler, const Matrix& x0_rows,
                          Engine& engine);

/// One draw of Lambda = lambda0(Y0). For a non-Gaussian family the penalty
/// must be Lasso and the GLM zero-threshold is used (+inf outside the domain).
/// Draw i always uses substream i of the sampler's seed.
double sample_null_stat(const NullSampler& sampler, const PenaltySpec& penalty,
                        std::uint64_t draw);

/// Draws 0..m-1, in draw order, computed on up to `workers` threads.
std::vector<double> sample_null_stats(const NullSampler& sampler,
                                      const PenaltySpec& penalty, int m, int workers);

/// Upper alpha-quantile of the draws: the ceil((1 - alpha) M)-th order
/// statistic in ascending order, +inf draws sorted last.
ThresholdResult empirical_quantile(std::vector<double> draws, double alpha,
                                   std::uint64_t seed);

ThresholdResult compute_qut(const NullSampler& sampler, const PenaltySpec& penalty,
                            double alpha, int m, int workers = default_workers());

/// 1 / sqrt(pi log P), the level implied by the best-subset closed form.
double alpha_bar(Index p);

enum class ClosedFormKind { BestSubsetOrthonormal, TV1D, GroupLassoOrthonormal };

struct ClosedFormParams {
  double sigma = 1.0;
  /// Number of coefficients (groups for the group lasso).
  Index p = 0;
  /// Group size.
  Index q = 1;
};

struct ClosedFormQut {
  double lambda = 0.0;
  /// Implied level for the best-subset form; NaN otherwise.
  double implied_alpha = 0.0;
};

ClosedFormQut closed_form_qut(ClosedFormKind kind, const ClosedFormParams& params);

/// Monte Carlo counterpart of closed_form_qut under an orthonormal design,
/// where X^T Z is itself standard normal: ||Z||_inf^2 sigma^2 / 2 for best
/// subset, max_g sigma ||z_g||_2 for the group lasso, and the TV1D
/// zero-threshold of sigma Z.
ThresholdResult mc_orthonormal_qut(ClosedFormKind kind, const ClosedFormParams& params,
                                   double alpha, int m, std::uint64_t seed,
                                   int workers = default_workers());

struct GlmPipelineResult {
  ThresholdResult threshold;
  /// Constrained null MLE on the observed response.
  Vector null_beta0;
  SparseFit penalized;
  SparseFit refit;
  /// True when the MLE refit did not exist; `refit` then holds the penalized fit.
  bool refit_failed = false;
};

/// Null MLE on y, lambda^QUT with that intercept, lasso (GLM) fit at
/// lambda^QUT, then MLE refit on the selected support. Gaussian instances
/// must carry sigma. Throws DomainError when y is outside the domain or the
/// quantile is infinite.
GlmPipelineResult qut_pipeline_glm(const ProblemInstance& instance, double alpha, int m,
                                   std::uint64_t seed, int workers = default_workers(),
                                   DesignMode design = DesignMode::Fixed);

}  // namespace qut
