#pragma once

#include <string>
#include <variant>
#include <vector>

#include "qut/linalg.hpp"
#include "qut/model.hpp"

namespace qut {

namespace penalty {

struct Lasso {};
/// Diagonal weights W in ||W X^T y||_inf.
struct AdaptiveLasso {
  Vector weights;
};
struct LadLasso {};
struct SqrtLasso {};
/// Groups must partition {0, ..., P-1}.
struct GroupLasso {
  std::vector<IndexSet> groups;
};
struct GroupSqrtLasso {
  std::vector<IndexSet> groups;
};
/// Penalty lambda ||B beta||_1 with B of full row rank.
struct GeneralizedLasso {
  Matrix b;
};
/// Denoising with X = I and first-difference penalty.
struct TotalVariation1D {};
struct BestSubset {};
/// Requires orthonormal X; nu in [0, 1).
struct SubbotinOrthonormal {
  double nu = 0.5;
};
struct ElasticNet {
  double lambda2 = 0.0;
};
/// Requires orthonormal X.
struct FusedLassoOrthonormal {
  double lambda2 = 0.0;
};
/// y holds a rows x (N / rows) matrix in column-major order.
struct LowRankTrace {
  Index rows = 1;
};
/// y holds the raw observations of a density-estimation sample.
struct DensityTV {};

}  // namespace penalty

using PenaltySpec =
    std::variant<penalty::Lasso, penalty::AdaptiveLasso, penalty::LadLasso,
                 penalty::SqrtLasso, penalty::GroupLasso, penalty::GroupSqrtLasso,
                 penalty::GeneralizedLasso, penalty::TotalVariation1D,
                 penalty::BestSubset, penalty::SubbotinOrthonormal,
                 penalty::ElasticNet, penalty::FusedLassoOrthonormal,
                 penalty::LowRankTrace, penalty::DensityTV>;

std::string penalty_name(const PenaltySpec& penalty);

/// Largest subset size enumerated by the best-subset branch for a
/// non-orthonormal X.
inline constexpr Index kBestSubsetMaxP = 20;

/// Zero-thresholding function for a fixed design, prepared once and then
/// evaluated on many responses (the Monte Carlo loop calls it per draw).
///
/// Lasso, AdaptiveLasso, SqrtLasso, the group branches and ElasticNet handle a
/// nonempty X0 by projecting it out; the other branches require P0 = 0. The
/// denoising branches (TotalVariation1D, LowRankTrace, DensityTV) read y
/// directly and accept X equal to I_N or with no columns.
class ZeroThreshold {
 public:
  ZeroThreshold(const Matrix& x0, const Matrix& x, PenaltySpec penalty);

  double operator()(const Vector& y) const;

  const PenaltySpec& penalty() const { return penalty_; }
  Index rows() const { return n_; }

 private:
  double best_subset(const Vector& y) const;
  double generalized(const Vector& y) const;

  PenaltySpec penalty_;
  Index n_ = 0;
  Matrix x_;
  /// (I - P_X0) X, or X itself when P0 = 0.
  Matrix xt_;
  ColumnProjector x0_proj_;
  bool has_x0_ = false;
  bool orthonormal_ = false;
  // Generalized lasso pieces: A1 and a projector onto range(A2).
  Matrix a1_;
  ColumnProjector a2_proj_;
};

/// lambda0(y) for the instance's design and response. A non-Gaussian family
/// is only accepted with the Lasso branch and dispatches to lambda0_glm.
double lambda0(const ProblemInstance& instance, const PenaltySpec& penalty);

/// Lasso-GLM zero-threshold, prepared for a fixed design. Returns +inf when
/// the constrained null MLE does not exist. With P0 = 0 the natural parameter
/// is taken as v = 0, so mu = b'(0) 1.
class GlmZeroThreshold {
 public:
  GlmZeroThreshold(const Matrix& x0, const Matrix& x, GlmFamily family);

  double operator()(const Vector& y) const;
  /// Null-model fit v (length P0), or nullopt outside the domain.
  std::optional<Vector> null_fit(const Vector& y) const;

 private:
  ProblemInstance base_;
};

double lambda0_glm(const ProblemInstance& instance);

/// True when the constrained null MLE exists for y. For X0 = 1 this is the
/// closed-form domain of the family; otherwise null_mle decides.
bool membership_D(const ProblemInstance& instance);

/// ||(B B^T)^{-1} B y||_inf with B the first-difference matrix.
double lambda0_tv1d(const Vector& y);

/// Largest singular value.
double lambda0_lowrank(const Matrix& y);

/// ||w||_inf from the order-statistic spacings of the sample.
double lambda0_density(const Vector& y);

/// Dense first-difference matrix, (N-1) x N.
Matrix first_difference(Index n);

}  // namespace qut
