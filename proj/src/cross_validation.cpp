#include "qut/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qut/solvers.hpp"
#include "qut/zerothresh.hpp"

namespace qut {
namespace {

// Per-observation deviance 2 [l_sat - l], for the held-out loss.
double unit_deviance(const GlmFamily& fam, double y, double eta) {
  double sat = 0.0;
  switch (fam.kind()) {
    case FamilyKind::Gaussian: return (y - eta) * (y - eta);
    case FamilyKind::Poisson: sat = y > 0.0 ? y * std::log(y) - y : 0.0; break;
    case FamilyKind::Bernoulli:
    case FamilyKind::BinomialScaled:
      if (y > 0.0 && y < 1.0) sat = y * std::log(y) + (1.0 - y) * std::log(1.0 - y);
      break;
  }
  return 2.0 * (sat - (y * eta - fam.cumulant(eta)));
}

std::vector<SparseFit> fit_path(const ProblemInstance& train, const std::vector<double>& grid) {
  if (train.family.kind() == FamilyKind::Gaussian) {
    LassoSolver solver(train);
    LassoSolver::PathOptions opts;
    opts.max_r2 = 0.999;
    opts.stop_at_saturation = true;
    return solver.path(grid, opts);
  }
  try {
    return glm_lasso_path(train, grid);
  } catch (const NonExistenceError&) {
    return {};
  }
}

}  // namespace

std::vector<double> lambda_grid(double lambda_max, int size, double ratio) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max))
    throw InputError("lambda grid needs a positive finite lambda_max");
  if (size < 1) throw InputError("lambda grid needs at least one point");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("grid ratio must lie in (0, 1)");
  std::vector<double> grid(static_cast<std::size_t>(size));
  for (int k = 0; k < size; ++k) {
    const double t = size == 1 ? 0.0 : static_cast<double>(k) / (size - 1);
    grid[k] = lambda_max * std::pow(ratio, t);
  }
  return grid;
}

std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
  if (folds < 2 || folds > n) throw InputError("number of folds must lie in [2, N]");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Engine engine = stream_engine(seed, 0);
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    fold[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % folds);
  return fold;
}

double lasso_lambda_max(const ProblemInstance& instance) {
  const double l0 = lambda0(instance, penalty::Lasso{});
  if (std::isinf(l0)) throw DomainError("response lies outside the domain where the null MLE exists");
  return l0;
}

CvResult cv_lasso(const ProblemInstance& instance, const CvOptions& opts) {
  instance.validate();
  const double lmax = lasso_lambda_max(instance);
  if (!(lmax > 0.0)) throw InputError("lambda0 is zero; nothing to cross-validate");
  const auto grid = lambda_grid(lmax, opts.grid_size, opts.grid_ratio);
  const auto fold = fold_assignment(instance.n(), opts.folds, opts.seed);

  // errors[k][j]: mean held-out loss of fold k at grid point j.
  std::vector<std::vector<double>> errors(static_cast<std::size_t>(opts.folds));
  parallel_for(errors.size(), opts.workers, [&](std::size_t k) {
    std::vector<Index> train_rows, test_rows;
    for (Index i = 0; i < instance.n(); ++i)
      (fold[i] == static_cast<int>(k) ? test_rows : train_rows).push_back(i);
    const ProblemInstance train = subset_rows(instance, train_rows);
    const ProblemInstance test = subset_rows(instance, test_rows);
    const auto path = fit_path(train, grid);
    for (const auto& fit : path) {
      Vector eta = test.x * fit.beta;
      if (test.p0() > 0) eta += test.x0 * fit.beta0;
      double loss = 0.0;
      for (Index i = 0; i < test.n(); ++i)
        loss += unit_deviance(instance.family, test.y[i], eta[i]);
      errors[k].push_back(loss / static_cast<double>(test.n()));
    }
  });

  std::size_t reached = grid.size();
  for (const auto& e : errors) reached = std::min(reached, e.size());
  if (reached == 0) throw NonExistenceError("a cross-validation fold has no lasso fit");

  CvResult out;
  out.lambdas.assign(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(reached));
  const double k = static_cast<double>(opts.folds);
  for (std::size_t j = 0; j < reached; ++j) {
    double mean = 0.0;
    for (const auto& e : errors) mean += e[j];
    mean /= k;
    double var = 0.0;
    for (const auto& e : errors) var += (e[j] - mean) * (e[j] - mean);
    var /= (k - 1.0);
    out.mean_error.push_back(mean);
    out.std_error.push_back(std::sqrt(var / k));
  }
  out.index_min = static_cast<std::size_t>(
      std::min_element(out.mean_error.begin(), out.mean_error.end()) - out.mean_error.begin());
  const double bound = out.mean_error[out.index_min] + out.std_error[out.index_min];
  out.index_1se = out.index_min;
  for (std::size_t j = 0; j <= out.index_min; ++j) {
    if (out.mean_error[j] <= bound) {
      out.index_1se = j;
      break;
    }
  }
  return out;
}

SparseFit fit_on_grid(const ProblemInstance& instance, const std::vector<double>& grid,
                      double lambda) {
  if (instance.family.kind() == FamilyKind::Gaussian) {
    LassoSolver solver(instance);
    for (double l : grid)
      if (l > lambda) solver.fit(l);
    return solver.fit(lambda);
  }
  std::optional<SparseFit> warm;
  for (double l : grid) {
    if (!(l > lambda)) break;
    warm = glm_lasso_fit(instance, l, SolverConfig::glm(), warm ? &*warm : nullptr);
  }
  return glm_lasso_fit(instance, lambda, SolverConfig::glm(), warm ? &*warm : nullptr);
}

}  // namespace qut
