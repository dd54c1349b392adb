#pragma once

#include <cstdint>
#include <vector>

#include "qut/model.hpp"
#include "qut/random.hpp"

namespace qut {

/// `size` log-spaced points from lambda_max down to lambda_max * ratio.
std::vector<double> lambda_grid(double lambda_max, int size = 100, double ratio = 1e-3);

/// Fold of each row: a seeded shuffle, then position modulo `folds`.
std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed);

/// lambda0 of the lasso (Gaussian) or lasso-GLM for the instance; DomainError
/// when it is infinite.
double lasso_lambda_max(const ProblemInstance& instance);

struct CvOptions {
  int folds = 10;
  int grid_size = 100;
  double grid_ratio = 1e-3;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct CvResult {
  /// Grid points reached by every fold.
  std::vector<double> lambdas;
  /// Mean held-out loss per grid point: squared error (Gaussian) or deviance.
  std::vector<double> mean_error;
  std::vector<double> std_error;
  std::size_t index_min = 0;
  /// Largest lambda whose error is within one standard error of the minimum.
  std::size_t index_1se = 0;

  double lambda_min() const { return lambdas[index_min]; }
  double lambda_1se() const { return lambdas[index_1se]; }
};

/// K-fold cross-validation of the lasso (or lasso-GLM) over a grid from the
/// full-data lambda0 downwards. Each fold path stops early once it nearly
/// interpolates (explained fraction above 0.999 or a saturated support).
CvResult cv_lasso(const ProblemInstance& instance, const CvOptions& opts = {});

/// Lasso or lasso-GLM fit at a single lambda, reached by a warm-started path
/// along the grid points above it.
SparseFit fit_on_grid(const ProblemInstance& instance, const std::vector<double>& grid,
                      double lambda);

}  // namespace qut
