#include "qut/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qut/cross_validation.hpp"
#include "qut/qut_engine.hpp"
#include "qut/solvers.hpp"
#include "qut/variance.hpp"

namespace qut {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Tags separating the seed families used inside one replication.
enum SeedTag : std::uint64_t {
  kTagData = 1,
  kTagVarianceMc = 2,
  kTagSplit = 3,
  kTagLambdaZ = 4,
  kTagCv = 5,
  kTagSqrtMc = 6,
  kTagPipeline = 7,
  kTagSensitivity = 8,
};

std::string format_short(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Vector normal_vector(Index n, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = normal(engine);
  return z;
}

IndexSet random_support(Index p, Index s, Engine& engine) {
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), engine);
  IndexSet support(idx.begin(), idx.begin() + s);
  std::sort(support.begin(), support.end());
  return support;
}

Vector glm_response(const GlmFamily& fam, const Vector& eta, Engine& engine) {
  Vector y(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    const double mu = fam.mean(eta[i]);
    switch (fam.kind()) {
      case FamilyKind::Gaussian: {
        std::normal_distribution<double> normal(0.0, 1.0);
        y[i] = eta[i] + normal(engine);
        break;
      }
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
    }
  }
  return y;
}

struct Refit {
  SparseFit fit;
  bool failed = false;
};

Refit refit_or_keep(const ProblemInstance& instance, const SparseFit& penalized) {
  try {
    SparseFit r = mle_refit(instance, penalized.support, default_config(instance.family));
    r.lambda = penalized.lambda;
    return {std::move(r), false};
  } catch (const NonExistenceError&) {
  } catch (const RankDeficiencyError&) {
  }
  return {penalized, true};
}

double lasso_qut_lambda(const ProblemInstance& instance, double sigma, const PenaltySpec& pen,
                        const CampaignOptions& opts, std::uint64_t seed) {
  ProblemInstance unit = instance;
  unit.sigma = 1.0;
  const ThresholdResult t =
      compute_qut(make_sampler(unit, seed, opts.design), pen, opts.alpha, opts.mc_samples, 1);
  return sigma * t.lambda_qut;
}

// Smallest screening support size along a path (0 if none screens).
Index smallest_screening(const std::vector<IndexSet>& path, const IndexSet& s_star) {
  Index best = 0;
  for (const auto& s : path)
    if (contains_all(s, s_star)) {
      const auto size = static_cast<Index>(s.size());
      if (best == 0 || size < best) best = size;
    }
  return best;
}

}  // namespace

Index ScenarioSpec::s_star() const {
  return static_cast<Index>(std::ceil(std::pow(static_cast<double>(n), theta) - 1e-12));
}

void ScenarioSpec::validate() const {
  if (n < 2 || p < 1) throw InputError("scenario needs N >= 2 and P >= 1");
  if (!(theta > 0.0 && theta <= 1.0)) throw InputError("theta must lie in (0, 1]");
  if (!(omega >= 0.0 && omega < 1.0)) throw InputError("omega must lie in [0, 1)");
  if (!(snr > 0.0) || !std::isfinite(snr)) throw InputError("snr must be positive");
  if (replications < 1) throw InputError("replications must be >= 1");
  if (s_star() > p) throw InputError("s* = ceil(N^theta) exceeds P");
}

std::string ScenarioSpec::label() const {
  return family.name() + "(theta=" + format_short(theta) + ";omega=" + format_short(omega) +
         ";snr=" + format_short(snr) + ";N=" + std::to_string(n) + ";P=" + std::to_string(p) + ")";
}

double equicorrelated_quadratic(const Vector& beta, double omega) {
  const double s = beta.sum();
  return (1.0 - omega) * beta.squaredNorm() + omega * s * s;
}

GeneratedData generate_scenario(const ScenarioSpec& spec, int rep) {
  spec.validate();
  Engine engine = stream_engine(derive_seed(spec.seed, kTagData), static_cast<std::uint64_t>(rep));
  const double a = std::sqrt(spec.omega), b = std::sqrt(1.0 - spec.omega);
  Matrix x(spec.n, spec.p);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < spec.n; ++i) {
    const double g = normal(engine);
    for (Index j = 0; j < spec.p; ++j) x(i, j) = a * g + b * normal(engine);
  }

  GeneratedData out;
  out.support = random_support(spec.p, spec.s_star(), engine);
  out.beta_star = Vector::Zero(spec.p);
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution coin(0.5);
  for (Index j : out.support) {
    const double magnitude = expo(engine);
    out.beta_star[j] = coin(engine) ? magnitude : -magnitude;
  }
  const double q = equicorrelated_quadratic(out.beta_star, spec.omega);
  if (q > 0.0) out.beta_star *= std::sqrt(spec.snr / q);

  out.beta0_star = 1.0;
  const Vector eta = (x * out.beta_star).array() + out.beta0_star;
  Vector y = glm_response(spec.family, eta, engine);
  out.instance = with_intercept(std::move(x), std::move(y), spec.family);
  return out;
}

bool contains_all(const IndexSet& outer, const IndexSet& inner) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

SupportMetrics support_metrics(const IndexSet& s_hat, const IndexSet& s_star) {
  if (s_star.empty()) throw InputError("true support is empty; TPr is undefined");
  IndexSet common;
  std::set_intersection(s_hat.begin(), s_hat.end(), s_star.begin(), s_star.end(),
                        std::back_inserter(common));
  SupportMetrics m;
  m.s_hat = static_cast<Index>(s_hat.size());
  m.s_star = static_cast<Index>(s_star.size());
  m.tpr = static_cast<double>(common.size()) / static_cast<double>(s_star.size());
  m.fdr = s_hat.empty() ? 0.0
                        : static_cast<double>(s_hat.size() - common.size()) /
                              static_cast<double>(s_hat.size());
  return m;
}

double rmse_metric(const Vector& beta_hat, const Vector& beta_star, double omega, double snr) {
  if (beta_hat.size() != beta_star.size()) throw InputError("coefficient lengths differ");
  if (!(snr > 0.0)) throw InputError("snr must be positive");
  return std::sqrt(equicorrelated_quadratic(beta_hat - beta_star, omega) / snr);
}

double oir_metric(const std::vector<IndexSet>& path, const IndexSet& s_hat,
                  const IndexSet& s_star) {
  if (s_star.empty()) throw InputError("true support is empty; OIr is undefined");
  if (!contains_all(s_hat, s_star)) return 0.0;
  Index s_min = smallest_screening(path, s_star);
  const auto s = static_cast<Index>(s_hat.size());
  if (s_min == 0 || s < s_min) s_min = s;
  return static_cast<double>(s_min) / static_cast<double>(s);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::QutLasso: return "qut-lasso";
    case Method::QutSqrtLasso: return "qut-sqrt-lasso";
    case Method::CvMin: return "cv-min";
    case Method::Cv1se: return "cv-1se";
    case Method::Oracle: return "oracle";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::QutLasso, Method::QutSqrtLasso, Method::CvMin, Method::Cv1se,
                   Method::Oracle})
    if (method_name(m) == name) return m;
  throw InputError("unknown method '" + name + "'");
}

MethodFit apply_method(const ProblemInstance& instance, Method method,
                       const CampaignOptions& opts, std::uint64_t seed) {
  const bool gaussian = instance.family.kind() == FamilyKind::Gaussian;
  MethodFit out;
  out.sigma2 = kNaN;
  SparseFit penalized;
  bool refit = true;

  switch (method) {
    case Method::QutLasso: {
      if (!gaussian) {
        const GlmPipelineResult r = qut_pipeline_glm(instance, opts.alpha, opts.mc_samples,
                                                     derive_seed(seed, kTagPipeline), 1, opts.design);
        out.fit = r.refit;
        out.support = r.penalized.support;
        out.lambda = r.threshold.lambda_qut;
        out.refit_failed = r.refit_failed;
        return out;
      }
      double sigma2;
      if (instance.sigma) {
        sigma2 = *instance.sigma * *instance.sigma;
      } else {
        RefittedQutOptions v;
        v.alpha = opts.alpha;
        v.mc_samples = opts.mc_samples;
        v.tol = opts.variance_tol;
        v.seed = derive_seed(seed, kTagVarianceMc);
        v.split_seed = derive_seed(seed, kTagSplit);
        v.design = opts.design;
        sigma2 = sigma2_refitted_qut(instance, v).sigma2;
      }
      out.sigma2 = sigma2;
      out.lambda = lasso_qut_lambda(instance, std::sqrt(sigma2), penalty::Lasso{}, opts,
                                    derive_seed(seed, kTagLambdaZ));
      penalized = lasso_fit(instance, out.lambda);
      break;
    }
    case Method::QutSqrtLasso: {
      if (!gaussian) throw InputError("the square-root lasso applies to Gaussian data");
      out.lambda = lasso_qut_lambda(instance, 1.0, penalty::SqrtLasso{}, opts,
                                    derive_seed(seed, kTagSqrtMc));
      penalized = sqrt_lasso_fit(instance, out.lambda);
      break;
    }
    case Method::CvMin:
    case Method::Cv1se: {
      CvOptions cv;
      cv.folds = std::min<int>(opts.cv_folds, static_cast<int>(instance.n()));
      cv.seed = derive_seed(seed, kTagCv);
      const CvResult res = cv_lasso(instance, cv);
      out.lambda = method == Method::CvMin ? res.lambda_min() : res.lambda_1se();
      penalized = fit_on_grid(instance, res.lambdas, out.lambda);
      refit = method == Method::CvMin;
      break;
    }
    case Method::Oracle:
      throw InputError("the oracle method needs the true support");
  }

  out.support = penalized.support;
  if (refit) {
    Refit r = refit_or_keep(instance, penalized);
    out.fit = std::move(r.fit);
    out.refit_failed = r.failed;
  } else {
    out.fit = penalized;
  }
  return out;
}

SimReport run_table2_campaign(const std::vector<ScenarioSpec>& specs,
                              const std::vector<Method>& methods, const CampaignOptions& opts) {
  for (const auto& s : specs) s.validate();
  for (Method m : methods)
    if (m == Method::Oracle) throw InputError("the oracle method is only defined for OIR");
  SimReport report;
  for (const auto& spec : specs) {
    std::vector<std::vector<SimRecord>> per_rep(static_cast<std::size_t>(spec.replications));
    parallel_for(per_rep.size(), opts.workers, [&](std::size_t rep) {
      const GeneratedData data = generate_scenario(spec, static_cast<int>(rep));
      const std::uint64_t rep_seed = derive_seed(derive_seed(spec.seed, rep), kTagPipeline);
      for (Method m : methods) {
        SimRecord rec{spec.label(), method_name(m), static_cast<int>(rep), {}};
        try {
          const MethodFit f = apply_method(data.instance, m, opts, derive_seed(rep_seed, static_cast<std::uint64_t>(m)));
          const SupportMetrics sm = support_metrics(f.support, data.support);
          rec.metrics = {{"tpr", sm.tpr},
                         {"fdr", sm.fdr},
                         {"rmse", rmse_metric(f.fit.beta, data.beta_star, spec.omega, spec.snr)},
                         {"s_hat", static_cast<double>(sm.s_hat)},
                         {"lambda", f.lambda},
                         {"sigma2", f.sigma2},
                         {"refit_failed", f.refit_failed ? 1.0 : 0.0}};
        } catch (const DomainError&) {
          rec.metrics = {{"tpr", kNaN}, {"fdr", kNaN}, {"rmse", kNaN}, {"s_hat", kNaN},
                         {"lambda", kNaN}, {"sigma2", kNaN}, {"refit_failed", kNaN}};
        }
        per_rep[rep].push_back(std::move(rec));
      }
    });
    for (auto& recs : per_rep)
      for (auto& r : recs) report.add(std::move(r));
  }
  return report;
}

void PhaseGridSpec::validate() const {
  if (p < 2) throw InputError("phase grid needs P >= 2");
  if (n_list.empty() || rho_list.empty()) throw InputError("phase grid needs N and rho values");
  for (Index n : n_list)
    if (n < 2) throw InputError("phase grid N values must be >= 2");
  for (double r : rho_list)
    if (!(r > 0.0 && r <= 1.0)) throw InputError("rho values must lie in (0, 1]");
  if (!(magnitude > 0.0)) throw InputError("coefficient magnitude must be positive");
  if (replications < 1) throw InputError("replications must be >= 1");
}

SimReport run_phase_campaign(const PhaseGridSpec& grid, const std::vector<Method>& methods,
                             const CampaignOptions& opts) {
  grid.validate();
  SimReport report;
  for (std::size_t ni = 0; ni < grid.n_list.size(); ++ni) {
    const Index n = grid.n_list[ni];
    for (std::size_t ri = 0; ri < grid.rho_list.size(); ++ri) {
      const double rho = grid.rho_list[ri];
      const Index s = std::clamp<Index>(
          static_cast<Index>(std::llround(rho * static_cast<double>(n))), 1, std::min(n, grid.p));
      const double delta = static_cast<double>(n) / static_cast<double>(grid.p);
      const std::string label = "delta=" + format_short(delta) + ";rho=" + format_short(rho);
      const std::uint64_t cell_seed =
          derive_seed(derive_seed(grid.seed, static_cast<std::uint64_t>(n)), ri);

      std::vector<std::vector<SimRecord>> per_rep(static_cast<std::size_t>(grid.replications));
      parallel_for(per_rep.size(), opts.workers, [&](std::size_t rep) {
        Engine engine = stream_engine(cell_seed, rep);
        Matrix x(n, grid.p);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < grid.p; ++j) x(i, j) = normal(engine);
        const IndexSet s_star = random_support(grid.p, s, engine);
        Vector beta = Vector::Zero(grid.p);
        for (Index j : s_star) beta[j] = grid.magnitude;
        Vector y = x * beta + normal_vector(n, engine);
        ProblemInstance inst = without_intercept(std::move(x), std::move(y));
        inst.sigma = 1.0;

        std::vector<IndexSet> path;
        const double l0 = lambda0(inst, penalty::Lasso{});
        if (l0 > 0.0) {
          LassoSolver solver(inst);
          LassoSolver::PathOptions po;
          po.stop_at_saturation = true;
          for (const auto& f : solver.path(lambda_grid(l0), po)) path.push_back(f.support);
        }
        const std::uint64_t rep_seed = derive_seed(cell_seed, 1000003 + rep);
        for (Method m : methods) {
          IndexSet s_hat;
          if (m == Method::Oracle) {
            const Index s_min = smallest_screening(path, s_star);
            for (const auto& sp : path)
              if (s_min > 0 && static_cast<Index>(sp.size()) == s_min && contains_all(sp, s_star)) {
                s_hat = sp;
                break;
              }
          } else {
            s_hat = apply_method(inst, m, opts, derive_seed(rep_seed, static_cast<std::uint64_t>(m)))
                        .support;
          }
          const double oir = oir_metric(path, s_hat, s_star);
          const SupportMetrics sm = support_metrics(s_hat, s_star);
          per_rep[rep].push_back({label, method_name(m), static_cast<int>(rep),
                                  {{"delta", delta},
                                   {"rho", rho},
                                   {"oir", oir},
                                   {"tpr", sm.tpr},
                                   {"s_hat", static_cast<double>(sm.s_hat)}}});
        }
      });
      for (auto& recs : per_rep)
        for (auto& r : recs) report.add(std::move(r));
    }
  }
  return report;
}

std::string phase_grid_csv(const SimReport& report) {
  std::ostringstream os;
  os << "delta,rho,method,oir\n";
  for (const auto& g : report.summarize()) {
    const auto delta = report.values(g.scenario, g.method, "delta");
    const auto rho = report.values(g.scenario, g.method, "rho");
    const auto oir = report.values(g.scenario, g.method, "oir");
    if (delta.empty() || rho.empty() || oir.empty()) continue;
    double mean = 0.0;
    for (double v : oir) mean += v;
    mean /= static_cast<double>(oir.size());
    os << format_real(delta.front()) << ',' << format_real(rho.front()) << ',' << g.method << ','
       << format_real(mean) << '\n';
  }
  return os.str();
}

SimReport run_sensitivity_study(const ScenarioSpec& spec, const CampaignOptions& opts) {
  spec.validate();
  if (spec.family.kind() != FamilyKind::Poisson)
    throw InputError("the sensitivity study uses a Poisson scenario");
  const std::string label = spec.label();
  const char* arms[] = {"oracle-intercept", "initial-step", "final-step"};

  std::vector<std::vector<SimRecord>> per_rep(static_cast<std::size_t>(spec.replications));
  parallel_for(per_rep.size(), opts.workers, [&](std::size_t rep) {
    const GeneratedData data = generate_scenario(spec, static_cast<int>(rep));
    const ProblemInstance& inst = data.instance;
    const std::uint64_t mc_seed =
        derive_seed(derive_seed(spec.seed, kTagSensitivity), static_cast<std::uint64_t>(rep));
    const SolverConfig cfg = SolverConfig::glm();

    auto arm = [&](double beta0) {
      NullSampler sampler = make_sampler(inst, mc_seed, opts.design);
      sampler.intercept_beta0 = Vector::Constant(1, beta0);
      const ThresholdResult t =
          compute_qut(sampler, penalty::Lasso{}, opts.alpha, opts.mc_samples, 1);
      SupportMetrics sm{};
      double lambda = t.lambda_qut;
      if (!t.quantile_infinite()) {
        const SparseFit f = glm_lasso_fit(inst, lambda, cfg);
        sm = support_metrics(f.support, data.support);
      } else {
        sm.tpr = sm.fdr = kNaN;
      }
      return std::make_pair(lambda, sm);
    };

    const auto v = null_mle(inst, cfg);
    if (!v) {
      for (const char* a : arms)
        per_rep[rep].push_back({label, a, static_cast<int>(rep),
                                {{"beta0", kNaN}, {"lambda", kNaN}, {"tpr", kNaN}, {"fdr", kNaN},
                                 {"s_hat", kNaN}}});
      return;
    }
    const double initial = (*v)[0];
    // Final step: lasso-GLM at the initial-intercept threshold, then MLE refit.
    const auto [lambda_init, sm_init] = arm(initial);
    double final_beta0 = initial;
    if (std::isfinite(lambda_init)) {
      const SparseFit f = glm_lasso_fit(inst, lambda_init, cfg);
      final_beta0 = refit_or_keep(inst, f).fit.beta0[0];
    }
    const auto [lambda_oracle, sm_oracle] = arm(data.beta0_star);
    const auto [lambda_final, sm_final] = arm(final_beta0);

    auto push = [&](const char* name, double b0, double lambda, const SupportMetrics& sm) {
      per_rep[rep].push_back({label, name, static_cast<int>(rep),
                              {{"beta0", b0},
                               {"lambda", lambda},
                               {"tpr", sm.tpr},
                               {"fdr", sm.fdr},
                               {"s_hat", static_cast<double>(sm.s_hat)}}});
    };
    push(arms[0], data.beta0_star, lambda_oracle, sm_oracle);
    push(arms[1], initial, lambda_init, sm_init);
    push(arms[2], final_beta0, lambda_final, sm_final);
  });
  SimReport report;
  for (auto& recs : per_rep)
    for (auto& r : recs) report.add(std::move(r));
  return report;
}

SimReport run_holdout(const ProblemInstance& data, const HoldoutSpec& spec,
                      const CampaignOptions& opts) {
  data.validate();
  if (!(spec.split_fraction > 0.0 && spec.split_fraction < 1.0))
    throw InputError("split fraction must lie in (0, 1)");
  if (spec.repeats < 1) throw InputError("repeats must be >= 1");
  const Index n = data.n();
  const auto n_train =
      static_cast<Index>(std::ceil(spec.split_fraction * static_cast<double>(n) - 1e-12));
  if (n_train < 2 || n_train >= n) throw InputError("split leaves an empty training or test set");
  const bool binary = data.family.kind() == FamilyKind::Bernoulli;
  const std::string metric = binary ? "test_ccr" : "test_mse";

  std::vector<SimRecord> records(static_cast<std::size_t>(spec.repeats));
  parallel_for(records.size(), opts.workers, [&](std::size_t r) {
    Engine engine = stream_engine(spec.seed, r);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), engine);
    std::vector<Index> train_rows(order.begin(), order.begin() + n_train);
    std::vector<Index> test_rows(order.begin() + n_train, order.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    const ProblemInstance train = subset_rows(data, train_rows);
    const ProblemInstance test = subset_rows(data, test_rows);

    SimRecord rec{"holdout", method_name(spec.method), static_cast<int>(r), {}};
    try {
      const MethodFit f = apply_method(train, spec.method, opts, derive_seed(spec.seed, 1000003 + r));
      if (f.refit_failed && spec.method != Method::Cv1se) throw NonExistenceError("refit failed");
      Vector eta = test.x * f.fit.beta;
      if (test.p0() > 0) eta += test.x0 * f.fit.beta0;
      double score = 0.0;
      for (Index i = 0; i < test.n(); ++i) {
        if (binary) {
          score += ((eta[i] >= 0.0) == (test.y[i] == 1.0)) ? 1.0 : 0.0;
        } else {
          const double d = test.y[i] - data.family.mean(eta[i]);
          score += d * d;
        }
      }
      score /= static_cast<double>(test.n());
      rec.metrics = {{"s_hat", static_cast<double>(f.support.size())},
                     {metric, score},
                     {"lambda", f.lambda},
                     {"skipped", 0.0}};
    } catch (const NonExistenceError&) {
      rec.metrics = {{"s_hat", kNaN}, {metric, kNaN}, {"lambda", kNaN}, {"skipped", 1.0}};
    } catch (const DomainError&) {
      rec.metrics = {{"s_hat", kNaN}, {metric, kNaN}, {"lambda", kNaN}, {"skipped", 1.0}};
    }
    records[r] = std::move(rec);
  });
  SimReport report;
  for (auto& r : records) report.add(std::move(r));
  return report;
}

}  // namespace qut
