#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qut {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Sorted, duplicate-free list of 0-based column indices.
using IndexSet = std::vector<Index>;

/// Numeric-zero tolerance used when extracting supports.
inline constexpr double kZeroTol = 1e-8;

// Error taxonomy. The CLI maps these onto its exit codes.

/// Malformed input or violated precondition.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The response lies outside the set where the constrained null MLE exists,
/// or a threshold quantile is infinite.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// An (unpenalized or penalized) maximum likelihood problem has no solution.
struct NonExistenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RankDeficiencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FamilyKind { Gaussian, Bernoulli, BinomialScaled, Poisson };

/// Canonical exponential family with log-likelihood sum_n [y_n theta_n - b(theta_n)].
///
/// All four built-in families have Theta = R. Binomial responses are stored
/// pre-scaled by 1/m, so they live in {0, 1/m, ..., 1} and share the logistic
/// cumulant with the Bernoulli family.
class GlmFamily {
 public:
  static GlmFamily gaussian() { return GlmFamily(FamilyKind::Gaussian, 1); }
  static GlmFamily bernoulli() { return GlmFamily(FamilyKind::Bernoulli, 1); }
  static GlmFamily binomial(int trials);
  static GlmFamily poisson() { return GlmFamily(FamilyKind::Poisson, 1); }

  FamilyKind kind() const { return kind_; }
  /// Number of binomial trials m (1 for every other family).
  int trials() const { return trials_; }
  std::string name() const;

  bool in_domain(double theta) const;
  /// b(theta)
  double cumulant(double theta) const;
  /// b'(theta)
  double mean(double theta) const;
  /// b''(theta)
  double variance(double theta) const;
  /// Inverse of b', defined on the interior of the mean space.
  double link(double mu) const;

  /// True when y is an admissible response value for the family.
  bool valid_response(double y) const;

  bool operator==(const GlmFamily&) const = default;

 private:
  GlmFamily(FamilyKind kind, int trials) : kind_(kind), trials_(trials) {}

  FamilyKind kind_;
  int trials_;
};

/// Data for the penalized problems: unpenalized block X0 (may have zero
/// columns), penalized block X, response y.
struct ProblemInstance {
  Matrix x0;
  Matrix x;
  Vector y;
  GlmFamily family = GlmFamily::gaussian();
  std::optional<double> sigma;

  Index n() const { return y.size(); }
  Index p0() const { return x0.cols(); }
  Index p() const { return x.cols(); }

  /// Throws InputError when shapes or response values are inconsistent.
  void validate() const;
};

/// Instance with an intercept column as X0.
ProblemInstance with_intercept(Matrix x, Vector y,
                               GlmFamily family = GlmFamily::gaussian());

/// Instance with no unpenalized columns.
ProblemInstance without_intercept(Matrix x, Vector y,
                                  GlmFamily family = GlmFamily::gaussian());

enum class FitStatus { Converged, MaxIterations, Interpolating };

struct SparseFit {
  Vector beta0;
  Vector beta;
  double lambda = 0.0;
  IndexSet support;
  double kkt_residual = 0.0;
  int iterations = 0;
  FitStatus status = FitStatus::Converged;

  bool converged() const { return status == FitStatus::Converged; }
  bool is_zero() const { return (beta.array() == 0.0).all(); }
};

struct ThresholdResult {
  double lambda_qut = 0.0;
  double alpha = 0.05;
  int mc_samples = 0;
  double infinite_fraction = 0.0;
  std::uint64_t seed = 0;

  bool quantile_infinite() const;
};

struct SupportMetrics {
  double tpr = 0.0;
  double fdr = 0.0;
  double oir = 0.0;
  Index s_hat = 0;
  Index s_star = 0;
};

/// Componentwise b'(theta).
Vector family_mean(const GlmFamily& family, const Vector& theta);

/// {p : |beta_p| > z_tol}
IndexSet support_of(const Vector& beta, double z_tol = kZeroTol);

/// Columns of `x` listed in `cols`, in order.
Matrix select_columns(const Matrix& x, const IndexSet& cols);
/// Rows of `x` listed in `rows`, in order.
Matrix select_rows(const Matrix& x, const std::vector<Index>& rows);
Vector select_rows(const Vector& v, const std::vector<Index>& rows);

/// Restriction of an instance to a subset of rows.
ProblemInstance subset_rows(const ProblemInstance& instance,
                            const std::vector<Index>& rows);

}  // namespace qut
