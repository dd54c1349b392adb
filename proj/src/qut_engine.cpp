#include "qut/qut_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "qut/solvers.hpp"

namespace qut {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector standard_normal(Index n, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = normal(engine);
  return z;
}

// The zero-threshold evaluator for one design, built once per fixed design or
// once per bootstrap draw.
class Statistic {
 public:
  Statistic(const Matrix& x0, const Matrix& x, const GlmFamily& family,
            const PenaltySpec& penalty) {
    if (family.kind() == FamilyKind::Gaussian) {
      gaussian_.emplace(x0, x, penalty);
    } else {
      if (!std::holds_alternative<penalty::Lasso>(penalty))
        throw InputError("only the lasso branch is available for non-Gaussian families");
      glm_.emplace(x0, x, family);
    }
  }
  double operator()(const Vector& y) const {
    return gaussian_ ? (*gaussian_)(y) : (*glm_)(y);
  }

 private:
  std::optional<ZeroThreshold> gaussian_;
  std::optional<GlmZeroThreshold> glm_;
};

std::vector<Index> bootstrap_rows(Index n, Engine& engine) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = pick(engine);
  return rows;
}

Matrix x0_or_empty(const Matrix& x0, Index n) { return x0.cols() > 0 ? x0 : Matrix(n, 0); }

}  // namespace

void NullSampler::validate() const {
  if (x.rows() < 1) throw InputError("null sampler needs at least one row");
  if (x0.cols() > 0 && x0.rows() != x.rows())
    throw InputError("X0 and X disagree on the number of rows");
  if (family.kind() == FamilyKind::Gaussian && !(sigma > 0.0 && std::isfinite(sigma)))
    throw InputError("sigma must be positive");
  if (family.kind() != FamilyKind::Gaussian && intercept_beta0.size() != x0.cols())
    throw InputError("intercept_beta0 must have length P0");
}

NullSampler make_sampler(const ProblemInstance& instance, std::uint64_t seed,
                         DesignMode design) {
  NullSampler s;
  s.x0 = x0_or_empty(instance.x0, instance.n());
  s.x = instance.x;
  s.family = instance.family;
  s.design = design;
  s.sigma = instance.sigma.value_or(1.0);
  s.intercept_beta0 = Vector::Zero(s.x0.cols());
  s.seed = seed;
  return s;
}

Vector draw_null_response(const NullSampler& sampler, const Matrix& x0_rows,
                          Engine& engine) {
  const Index n = sampler.n();
  const GlmFamily& fam = sampler.family;
  // Gaussian statistics annihilate X0 beta0, so only the noise is drawn; this
  // keeps the draws bit-identical for every beta0.
  if (fam.kind() == FamilyKind::Gaussian) return sampler.sigma * standard_normal(n, engine);

  Vector eta = x0_rows.cols() > 0 ? Vector(x0_rows * sampler.intercept_beta0)
                                  : Vector::Zero(n);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const double mu = fam.mean(eta[i]);
    switch (fam.kind()) {
      case FamilyKind::Bernoulli: {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        y[i] = u(engine) < mu ? 1.0 : 0.0;
        break;
      }
      case FamilyKind::BinomialScaled: {
        std::binomial_distribution<int> b(fam.trials(), mu);
        y[i] = static_cast<double>(b(engine)) / fam.trials();
        break;
      }
      case FamilyKind::Poisson: {
        std::poisson_distribution<long long> pois(mu);
        y[i] = static_cast<double>(pois(engine));
        break;
      }
      case FamilyKind::Gaussian: break;
    }
  }
  return y;
}

std::vector<double> sample_null_stats(const NullSampler& sampler,
                                      const PenaltySpec& penalty, int m, int workers) {
  sampler.validate();
  if (m < 1) throw InputError("Monte Carlo sample count must be >= 1");
  std::vector<double> draws(static_cast<std::size_t>(m));
  const Matrix x0 = x0_or_empty(sampler.x0, sampler.n());

  if (sampler.design == DesignMode::Fixed) {
    const Statistic stat(x0, sampler.x, sampler.family, penalty);
    parallel_for(draws.size(), workers, [&](std::size_t i) {
      Engine engine = stream_engine(sampler.seed, i);
      draws[i] = stat(draw_null_response(sampler, x0, engine));
    });
  } else {
    parallel_for(draws.size(), workers, [&](std::size_t i) {
      Engine engine = stream_engine(sampler.seed, i);
      const auto rows = bootstrap_rows(sampler.n(), engine);
      const Matrix bx0 = x0.cols() > 0 ? select_rows(x0, rows) : Matrix(sampler.n(), 0);
      const Matrix bx = select_rows(sampler.x, rows);
      const Statistic stat(bx0, bx, sampler.family, penalty);
      draws[i] = stat(draw_null_response(sampler, bx0, engine));
    });
  }
  return draws;
}

double sample_null_stat(const NullSampler& sampler, const PenaltySpec& penalty,
                        std::uint64_t draw) {
  sampler.validate();
  const Matrix x0 = x0_or_empty(sampler.x0, sampler.n());
  Engine engine = stream_engine(sampler.seed, draw);
  if (sampler.design == DesignMode::Fixed) {
    const Statistic stat(x0, sampler.x, sampler.family, penalty);
    return stat(draw_null_response(sampler, x0, engine));
  }
  const auto rows = bootstrap_rows(sampler.n(), engine);
  const Matrix bx0 = x0.cols() > 0 ? select_rows(x0, rows) : Matrix(sampler.n(), 0);
  const Statistic stat(bx0, select_rows(sampler.x, rows), sampler.family, penalty);
  return stat(draw_null_response(sampler, bx0, engine));
}

ThresholdResult empirical_quantile(std::vector<double> draws, double alpha,
                                   std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (draws.empty()) throw InputError("no Monte Carlo draws");
  const auto m = static_cast<double>(draws.size());
  std::sort(draws.begin(), draws.end());  // +inf compares greatest
  const auto infinite = std::count_if(draws.begin(), draws.end(),
                                      [](double v) { return std::isinf(v); });
  long long k = static_cast<long long>(std::ceil((1.0 - alpha) * m - 1e-9));
  k = std::clamp<long long>(k, 1, static_cast<long long>(draws.size()));

  ThresholdResult out;
  out.lambda_qut = draws[static_cast<std::size_t>(k - 1)];
  out.alpha = alpha;
  out.mc_samples = static_cast<int>(draws.size());
  out.infinite_fraction = static_cast<double>(infinite) / m;
  out.seed = seed;
  return out;
}

ThresholdResult compute_qut(const NullSampler& sampler, const PenaltySpec& penalty,
                            double alpha, int m, int workers) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  return empirical_quantile(sample_null_stats(sampler, penalty, m, workers), alpha,
                            sampler.seed);
}

double alpha_bar(Index p) {
  if (p < 2) throw InputError("the implied level needs P >= 2");
  return 1.0 / std::sqrt(std::numbers::pi * std::log(static_cast<double>(p)));
}

ClosedFormQut closed_form_qut(ClosedFormKind kind, const ClosedFormParams& params) {
  if (!(params.sigma > 0.0)) throw InputError("sigma must be positive");
  const double p = static_cast<double>(params.p);
  const double s = params.sigma;
  ClosedFormQut out;
  out.implied_alpha = std::numeric_limits<double>::quiet_NaN();
  switch (kind) {
    case ClosedFormKind::BestSubsetOrthonormal:
      if (params.p < 2) throw InputError("best-subset closed form needs P >= 2");
      out.lambda = s * s * std::log(p);
      out.implied_alpha = alpha_bar(params.p);
      break;
    case ClosedFormKind::TV1D:
      if (params.p < 3) throw InputError("log log P needs P >= 3");
      out.lambda = s * std::sqrt(p * std::log(std::log(p))) / 2.0;
      break;
    case ClosedFormKind::GroupLassoOrthonormal: {
      if (params.p < 3) throw InputError("log log P needs P >= 3");
      if (params.q < 1) throw InputError("group size must be >= 1");
      const double q = static_cast<double>(params.q);
      const double inner = 2.0 * std::log(p) + (q - 1.0) * std::log(std::log(p)) -
                           2.0 * std::lgamma(q / 2.0);
      if (!(inner > 0.0)) throw InputError("closed form undefined for these parameters");
      out.lambda = s * std::sqrt(inner);
      break;
    }
  }
  return out;
}

ThresholdResult mc_orthonormal_qut(ClosedFormKind kind, const ClosedFormParams& params,
                                   double alpha, int m, std::uint64_t seed, int workers) {
  if (m < 1) throw InputError("Monte Carlo sample count must be >= 1");
  if (params.p < 1 || params.q < 1) throw InputError("P and Q must be positive");
  if (!(params.sigma > 0.0)) throw InputError("sigma must be positive");
  std::vector<double> draws(static_cast<std::size_t>(m));
  parallel_for(draws.size(), workers, [&](std::size_t i) {
    Engine engine = stream_engine(seed, i);
    switch (kind) {
      case ClosedFormKind::BestSubsetOrthonormal: {
        const double z = params.sigma * standard_normal(params.p, engine).lpNorm<Eigen::Infinity>();
        draws[i] = 0.5 * z * z;
        break;
      }
      case ClosedFormKind::TV1D:
        draws[i] = lambda0_tv1d(params.sigma * standard_normal(params.p, engine));
        break;
      case ClosedFormKind::GroupLassoOrthonormal: {
        double best = 0.0;
        for (Index g = 0; g < params.p; ++g)
          best = std::max(best, standard_normal(params.q, engine).norm());
        draws[i] = params.sigma * best;
        break;
      }
    }
  });
  return empirical_quantile(std::move(draws), alpha, seed);
}

GlmPipelineResult qut_pipeline_glm(const ProblemInstance& instance, double alpha, int m,
                                   std::uint64_t seed, int workers, DesignMode design) {
  instance.validate();
  const bool gaussian = instance.family.kind() == FamilyKind::Gaussian;
  if (gaussian && !instance.sigma)
    throw InputError("a Gaussian instance needs sigma (known or estimated)");

  GlmPipelineResult out;
  const SolverConfig cfg = default_config(instance.family);
  auto v = null_mle(instance, cfg);
  if (!v) throw DomainError("response lies outside the domain where the null MLE exists");
  out.null_beta0 = *v;

  NullSampler sampler = make_sampler(instance, seed, design);
  sampler.intercept_beta0 = *v;
  out.threshold = compute_qut(sampler, penalty::Lasso{}, alpha, m, workers);
  if (out.threshold.quantile_infinite())
    throw DomainError("the null-thresholding quantile is infinite");

  const double lambda = out.threshold.lambda_qut;
  out.penalized = gaussian ? lasso_fit(instance, lambda, cfg)
                           : glm_lasso_fit(instance, lambda, cfg);
  try {
    out.refit = mle_refit(instance, out.penalized.support, cfg);
    out.refit.lambda = lambda;
  } catch (const NonExistenceError&) {
    out.refit = out.penalized;
    out.refit_failed = true;
  } catch (const RankDeficiencyError&) {
    out.refit = out.penalized;
    out.refit_failed = true;
  }
  return out;
}

}  // namespace qut
