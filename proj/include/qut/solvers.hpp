#pragma once

#include <optional>
#include <vector>

#include "qut/linalg.hpp"
#include "qut/model.hpp"

namespace qut {

struct SolverConfig {
  /// Target for the subgradient optimality residual.
  double conv_tol = 1e-8;
  /// Coordinate-descent sweeps.
  int max_iter = 100000;
  /// Outer Newton steps for GLM problems.
  int max_outer = 100;
  double z_tol = kZeroTol;
  double line_search_shrink = 0.5;
  /// ||(beta0, beta)||_inf beyond this signals a non-existent MLE.
  double divergence_cap = 1e6;
  /// Opt-in: scale penalized columns to unit variance, then back-transform.
  bool standardize = false;

  static SolverConfig gaussian() { return {}; }
  static SolverConfig glm() {
    SolverConfig c;
    c.conv_tol = 1e-7;
    return c;
  }

  void validate() const;
};

/// Picks the Gaussian or GLM defaults for a family.
SolverConfig default_config(const GlmFamily& family);

/// Cyclic coordinate descent for 1/2||y - X beta||^2 + lambda ||beta||_1 on
/// data that has already been projected off the unpenalized block.
///
/// `beta` is the warm start and receives the solution; `resid` must equal
/// y - X beta on entry and is kept in sync. Returns the number of sweeps used;
/// `kkt` receives the final stationarity residual.
int coordinate_descent(const Matrix& x, const Vector& col_sq, double lambda,
                       double tol, int max_sweeps, Vector& beta, Vector& resid,
                       double& kkt);

/// Gaussian lasso with the unpenalized block handled by pre-projection.
/// Keeps its last solution as the warm start for the next call, so a
/// descending sequence of lambdas is solved along a path.
class LassoSolver {
 public:
  explicit LassoSolver(const ProblemInstance& instance, SolverConfig cfg = {});

  SparseFit fit(double lambda);

  struct PathOptions {
    /// Stop once the fraction of projected variance explained exceeds this.
    double max_r2 = 1.0;
    /// Stop once the support reaches N - P0 (saturation).
    bool stop_at_saturation = false;
  };
  /// Fits along `lambdas` (expected descending) with warm starts. The returned
  /// vector may be shorter than `lambdas` when an early-stop rule fires.
  std::vector<SparseFit> path(const std::vector<double>& lambdas, PathOptions opts);
  std::vector<SparseFit> path(const std::vector<double>& lambdas) {
    return path(lambdas, PathOptions{});
  }

  /// ||X~^T y~||_inf, the smallest lambda giving the zero solution.
  double lambda_max() const;
  void reset();
  /// Multiplies the stationarity tolerance of later fits (clamped to (0, 1]).
  void set_tolerance_scale(double scale);

  const Vector& projected_response() const { return yt_; }
  const Matrix& projected_design() const { return xt_; }

 private:
  SparseFit fit_to(double lambda, double tol);
  SparseFit assemble(double lambda, int sweeps, double kkt, double tol) const;

  SolverConfig cfg_;
  Matrix x0_;
  Matrix x_;
  Vector y_;
  ColumnProjector projector_;
  Matrix xt_;
  Vector yt_;
  Vector col_sq_;
  Vector scale_;
  Vector beta_;
  Vector resid_;
  double tol_scale_ = 1.0;
};

/// min over (beta0, beta) of 1/2||y - X0 beta0 - X beta||^2 + lambda ||beta||_1
SparseFit lasso_fit(const ProblemInstance& instance, double lambda,
                    const SolverConfig& cfg = SolverConfig::gaussian());

double lasso_objective(const ProblemInstance& instance, const Vector& beta0,
                       const Vector& beta, double lambda);

/// min ||y - X0 beta0 - X beta||_2 + lambda ||beta||_1 by the alternating
/// scheme beta <- lasso(lambda * ||residual||) run to a fixed point.
/// A collapsing residual returns the last iterate with status Interpolating.
SparseFit sqrt_lasso_fit(const ProblemInstance& instance, double lambda,
                         const SolverConfig& cfg = SolverConfig::gaussian());

double sqrt_lasso_objective(const ProblemInstance& instance, const Vector& beta0,
                            const Vector& beta, double lambda);

/// -loglik(beta0, beta; y) = sum_n b(theta_n) - y_n theta_n
double glm_negloglik(const ProblemInstance& instance, const Vector& beta0,
                     const Vector& beta);

/// Lasso-penalized canonical GLM by proximal Newton: a quadratic model of the
/// negative log-likelihood, solved by weighted coordinate descent, followed by
/// backtracking on the true objective. Throws NonExistenceError when the
/// constrained null MLE does not exist (no solution for lambda > 0) or the
/// iterates diverge.
SparseFit glm_lasso_fit(const ProblemInstance& instance, double lambda,
                        const SolverConfig& cfg = SolverConfig::glm(),
                        const SparseFit* warm_start = nullptr);

/// GLM lasso along a descending lambda grid with warm starts. Stops early
/// (returning the fits so far) once the deviance ratio exceeds `max_dev_ratio`
/// or a fit fails to exist.
std::vector<SparseFit> glm_lasso_path(const ProblemInstance& instance,
                                      const std::vector<double>& lambdas,
                                      const SolverConfig& cfg = SolverConfig::glm(),
                                      double max_dev_ratio = 0.999);

/// Solves X0^T y = X0^T mu(v) by damped Newton. Returns nullopt when the
/// iterates diverge, i.e. when y lies outside the set where the constrained
/// null MLE exists.
std::optional<Vector> null_mle(const ProblemInstance& instance,
                               const SolverConfig& cfg = SolverConfig::glm());

/// Unpenalized MLE over X0 and the selected columns of X; other coefficients
/// are zero. Throws RankDeficiencyError or NonExistenceError.
SparseFit mle_refit(const ProblemInstance& instance, const IndexSet& support,
                    const SolverConfig& cfg = SolverConfig::glm());

/// Exact minimizer of 1/2||y - b||^2 + lambda * sum_k |b_{k+1} - b_k|
/// (taut-string / direct algorithm, linear time in practice).
Vector tv1d_fit(const Vector& y, double lambda);

/// U diag(max(d - lambda, 0)) V^T
Matrix svd_soft_threshold(const Matrix& y, double lambda);

}  // namespace qut
