#include "qut/variance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "qut/linalg.hpp"
#include "qut/qut_engine.hpp"
#include "qut/solvers.hpp"

namespace qut {
namespace {

// ||(I - P_[X0, X_S]) y||^2 / (n - |S|) on the evaluation half.
double cross_estimate(const ProblemInstance& eval, const IndexSet& support) {
  const Index m = static_cast<Index>(support.size());
  const Index dof = eval.n() - m;
  // The denominator ignores X0, but the fit itself must leave residual
  // freedom once X0 is included.
  if (dof - eval.p0() < 1)
    throw RankDeficiencyError("selected model leaves no residual degrees of freedom");
  Matrix design(eval.n(), eval.p0() + m);
  if (eval.p0() > 0) design.leftCols(eval.p0()) = eval.x0;
  for (Index j = 0; j < m; ++j) design.col(eval.p0() + j) = eval.x.col(support[j]);
  const ColumnProjector proj(design);
  if (!proj.full_column_rank())
    throw RankDeficiencyError("selected columns are rank deficient on the other half");
  const double rss = proj.residual(eval.y).squaredNorm();
  if (rss <= 1e-20 * std::max(eval.y.squaredNorm(), std::numeric_limits<double>::min()))
    throw RankDeficiencyError("selected model reproduces the other half exactly");
  return rss / static_cast<double>(dof);
}

void require_gaussian(const ProblemInstance& instance) {
  if (instance.family.kind() != FamilyKind::Gaussian)
    throw InputError("variance estimation applies to Gaussian regression");
}

}  // namespace

std::string variance_method_name(VarianceMethod method) {
  switch (method) {
    case VarianceMethod::ResidualCV: return "residual-cv";
    case VarianceMethod::RCV: return "rcv";
    case VarianceMethod::RefittedQUT: return "refitted-qut";
  }
  return "unknown";
}

double projected_mean_square(const ProblemInstance& instance) {
  const Matrix x0 = instance.p0() > 0 ? instance.x0 : Matrix(instance.n(), 0);
  return ColumnProjector(x0).residual(instance.y).squaredNorm() /
         static_cast<double>(instance.n());
}

double sigma2_from_fit(const ProblemInstance& instance, const SparseFit& fit) {
  const Index s_hat = static_cast<Index>(fit.support.size());
  if (instance.n() - s_hat - instance.p0() < 1)
    throw RankDeficiencyError("saturated model: no residual degrees of freedom");
  Vector r = instance.y - instance.x * fit.beta;
  if (instance.p0() > 0) r -= instance.x0 * fit.beta0;
  const double rss = r.squaredNorm();
  const double scale = std::max(instance.y.squaredNorm(), std::numeric_limits<double>::min());
  if (rss <= 1e-20 * scale) throw RankDeficiencyError("saturated model: zero residual");
  return rss / static_cast<double>(instance.n() - s_hat);
}

VarianceEstimate sigma2_residual_cv(const ProblemInstance& instance, const CvOptions& cv) {
  require_gaussian(instance);
  const CvResult res = cv_lasso(instance, cv);
  const SparseFit fit = fit_on_grid(instance, res.lambdas, res.lambda_min());
  VarianceEstimate out;
  out.method = VarianceMethod::ResidualCV;
  out.sigma2 = sigma2_from_fit(instance, fit);
  out.n1 = instance.n();
  out.m1 = static_cast<Index>(fit.support.size());
  return out;
}

std::pair<std::vector<Index>, std::vector<Index>> split_halves(Index n, std::uint64_t seed) {
  if (n < 2) throw InputError("splitting needs at least two rows");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Engine engine = stream_engine(seed, 0);
  std::shuffle(order.begin(), order.end(), engine);
  const auto first = static_cast<std::ptrdiff_t>((n + 1) / 2);
  std::vector<Index> a(order.begin(), order.begin() + first);
  std::vector<Index> b(order.begin() + first, order.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {std::move(a), std::move(b)};
}

SupportSelector cv_min_selector(CvOptions cv) {
  return [cv](const ProblemInstance& data, int half) {
    CvOptions opts = cv;
    opts.seed = derive_seed(cv.seed, static_cast<std::uint64_t>(half));
    opts.folds = std::min<int>(opts.folds, static_cast<int>(data.n()));
    const CvResult res = cv_lasso(data, opts);
    return fit_on_grid(data, res.lambdas, res.lambda_min()).support;
  };
}

VarianceEstimate sigma2_rcv(const ProblemInstance& instance, const SupportSelector& selector,
                            std::uint64_t split_seed) {
  require_gaussian(instance);
  instance.validate();
  const auto [rows1, rows2] = split_halves(instance.n(), split_seed);
  const ProblemInstance h1 = subset_rows(instance, rows1);
  const ProblemInstance h2 = subset_rows(instance, rows2);
  const IndexSet s1 = selector(h1, 0);
  const IndexSet s2 = selector(h2, 1);
  VarianceEstimate out;
  out.method = VarianceMethod::RCV;
  out.n1 = h1.n();
  out.n2 = h2.n();
  out.m1 = static_cast<Index>(s1.size());
  out.m2 = static_cast<Index>(s2.size());
  out.sigma2 = 0.5 * (cross_estimate(h2, s1) + cross_estimate(h1, s2));
  return out;
}

VarianceEstimate sigma2_refitted_qut(const ProblemInstance& instance,
                                     const RefittedQutOptions& opts) {
  require_gaussian(instance);
  instance.validate();
  if (!(opts.tol > 0.0)) throw InputError("tolerance must be positive");
  const auto [rows1, rows2] = split_halves(instance.n(), opts.split_seed);
  ProblemInstance h1 = subset_rows(instance, rows1);
  ProblemInstance h2 = subset_rows(instance, rows2);

  // lambda^QUT(sigma) = sigma * lambda_Z for each half's design.
  auto lambda_z = [&](ProblemInstance& half, std::uint64_t tag) {
    half.sigma = 1.0;
    const NullSampler sampler = make_sampler(half, derive_seed(opts.seed, tag), opts.design);
    const ThresholdResult t =
        compute_qut(sampler, penalty::Lasso{}, opts.alpha, opts.mc_samples, opts.workers);
    half.sigma.reset();
    return t.lambda_qut;
  };
  VarianceEstimate out;
  out.method = VarianceMethod::RefittedQUT;
  out.n1 = h1.n();
  out.n2 = h2.n();
  out.lambda_z1 = lambda_z(h1, 1);
  out.lambda_z2 = lambda_z(h2, 2);

  LassoSolver solver1(h1), solver2(h2);
  const double v_hat = projected_mean_square(instance);
  if (!(v_hat > 0.0)) throw InputError("response has no variation outside X0");

  struct Eval {
    double s2;
    double g;
    Index m1, m2;
  };
  std::vector<Eval> evals;
  auto g_at = [&](double s2) {
    const double sigma = std::sqrt(s2);
    const IndexSet a = solver1.fit(sigma * out.lambda_z1).support;
    const IndexSet b = solver2.fit(sigma * out.lambda_z2).support;
    double g = std::numeric_limits<double>::infinity();
    try {
      g = 0.5 * (cross_estimate(h2, a) + cross_estimate(h1, b)) - s2;
    } catch (const RankDeficiencyError&) {
      // A saturated selection can only occur for too small a sigma^2.
    }
    evals.push_back({s2, g, static_cast<Index>(a.size()), static_cast<Index>(b.size())});
    return g;
  };

  double lo = 1e-4 * v_hat, hi = 10.0 * v_hat;
  const double target = opts.tol * v_hat;
  // Evaluate the large end first so the solvers warm-start from sparse fits.
  const double g_hi = g_at(hi);
  const double g_lo = g_at(lo);
  int steps = 0;
  if ((g_lo > 0.0) == (g_hi > 0.0) || std::abs(g_hi) <= target || std::abs(g_lo) <= target) {
    out.no_sign_change = !(std::abs(g_hi) <= target || std::abs(g_lo) <= target);
  } else {
    while (steps < opts.max_steps) {
      const double mid = 0.5 * (lo + hi);
      const double g = g_at(mid);
      ++steps;
      if (std::abs(g) <= target || hi - lo <= target) break;
      if (g > 0.0)
        lo = mid;
      else
        hi = mid;
    }
  }
  const auto best = std::min_element(evals.begin(), evals.end(), [](const Eval& x, const Eval& y) {
    return std::abs(x.g) < std::abs(y.g);
  });
  out.sigma2 = best->s2;
  out.m1 = best->m1;
  out.m2 = best->m2;
  out.iterations = steps;
  return out;
}

}  // namespace qut
