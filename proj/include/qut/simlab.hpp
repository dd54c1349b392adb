#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qut/model.hpp"
#include "qut/qut_engine.hpp"
#include "qut/random.hpp"
#include "qut/report.hpp"

namespace qut {

struct ScenarioSpec {
  Index n = 100;
  Index p = 1000;
  double theta = 0.5;
  /// Equicorrelation between columns.
  double omega = 0.0;
  double snr = 1.0;
  GlmFamily family = GlmFamily::gaussian();
  int replications = 100;
  std::uint64_t seed = 0;

  /// s* = ceil(N^theta)
  Index s_star() const;
  void validate() const;
  /// e.g. "gaussian(theta=0.5,omega=0,snr=1)"
  std::string label() const;
};

struct GeneratedData {
  ProblemInstance instance;
  double beta0_star = 1.0;
  Vector beta_star;
  IndexSet support;
};

/// Rows x = sqrt(omega) g 1 + sqrt(1 - omega) z with g, z standard normal;
/// support uniform of size s*; Laplace(1) entries rescaled so that
/// beta*^T Sigma_omega beta* = snr; intercept 1; unit Gaussian noise or a
/// canonical GLM draw. (spec, rep) determines the result exactly.
GeneratedData generate_scenario(const ScenarioSpec& spec, int rep);

/// beta^T Sigma_omega beta = (1 - omega) ||beta||^2 + omega (sum beta)^2
double equicorrelated_quadratic(const Vector& beta, double omega);

/// TPr and FDr; throws InputError when S* is empty.
SupportMetrics support_metrics(const IndexSet& s_hat, const IndexSet& s_star);

/// sqrt((b - b*)^T Sigma_omega (b - b*) / snr)
double rmse_metric(const Vector& beta_hat, const Vector& beta_star, double omega, double snr);

/// s_min / s_hat when S_hat contains S*, else 0; s_min is the smallest
/// screening support among `path` and S_hat itself.
double oir_metric(const std::vector<IndexSet>& path, const IndexSet& s_hat,
                  const IndexSet& s_star);

bool contains_all(const IndexSet& outer, const IndexSet& inner);

enum class Method { QutLasso, QutSqrtLasso, CvMin, Cv1se, Oracle };

std::string method_name(Method m);
/// Parses "qut-lasso", "qut-sqrt-lasso", "cv-min", "cv-1se", "oracle".
Method parse_method(const std::string& name);

struct CampaignOptions {
  double alpha = 0.05;
  int mc_samples = 1000;
  int cv_folds = 10;
  /// Relative tolerance of the refitted-QUT fixed point.
  double variance_tol = 1e-4;
  int workers = 1;
  /// Design mode of every lambda^QUT simulation, including refitted QUT.
  DesignMode design = DesignMode::Fixed;
};

struct MethodFit {
  /// Final coefficients: MLE refit for every method but CV-1se.
  SparseFit fit;
  IndexSet support;
  double lambda = 0.0;
  /// Estimated noise variance (Gaussian QUT-lasso), NaN otherwise.
  double sigma2 = 0.0;
  bool refit_failed = false;
};

/// Tunes and fits one method on an instance. Gaussian QUT-lasso estimates
/// sigma^2 by refitted QUT unless the instance carries sigma.
MethodFit apply_method(const ProblemInstance& instance, Method method,
                       const CampaignOptions& opts, std::uint64_t seed);

/// TPR/FDR/RMSE per replication and method for each scenario.
SimReport run_table2_campaign(const std::vector<ScenarioSpec>& specs,
                              const std::vector<Method>& methods, const CampaignOptions& opts);

struct PhaseGridSpec {
  Index p = 200;
  std::vector<Index> n_list{40};
  /// Sparsity levels rho = s*/N; s* = max(1, round(rho N)).
  std::vector<double> rho_list{0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9};
  double magnitude = 10.0;
  int replications = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

/// OIr per (delta, rho, method, replication) on Gaussian data without
/// intercept and with sigma = 1 known.
SimReport run_phase_campaign(const PhaseGridSpec& grid, const std::vector<Method>& methods,
                             const CampaignOptions& opts);

/// delta,rho,method,oir grid of mean OIr values.
std::string phase_grid_csv(const SimReport& report);

/// For each replication of a Poisson scenario, lambda^QUT and the resulting
/// TPr/FDr with the null intercept fixed at the truth (oracle), the
/// intercept-only MLE (initial) and the refitted intercept of the full
/// pipeline (final). The three arms share the Monte Carlo seed.
SimReport run_sensitivity_study(const ScenarioSpec& spec, const CampaignOptions& opts);

struct HoldoutSpec {
  Method method = Method::QutLasso;
  double split_fraction = 0.5;
  int repeats = 100;
  std::uint64_t seed = 0;
};

/// Repeated random train/test splits; the training part gets ceil(f N) rows.
/// Records model size and test MSE (classification rate at 0.5 for binary
/// responses). A split whose refit does not exist is kept with skipped = 1.
SimReport run_holdout(const ProblemInstance& data, const HoldoutSpec& spec,
                      const CampaignOptions& opts);

}  // namespace qut
