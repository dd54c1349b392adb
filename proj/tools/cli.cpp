#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "qut/cross_validation.hpp"
#include "qut/csv.hpp"
#include "qut/linalg.hpp"
#include "qut/qut_engine.hpp"
#include "qut/report.hpp"
#include "qut/simlab.hpp"
#include "qut/solvers.hpp"
#include "qut/variance.hpp"
#include "qut/zerothresh.hpp"

namespace qut::cli {
namespace {

namespace fs = std::filesystem;

struct DataOptions {
  std::string data;
  std::string response_col = "y";
  std::string x0_cols;
  std::string intercept = "on";
  std::string family = "gaussian";
  int binomial_m = 1;
};

struct ThresholdOptions {
  std::string penalty = "lasso";
  double alpha = 0.05;
  int mc_samples = 1000;
  std::string design = "fixed";
  double sigma = 0.0;
  std::string estimate_sigma = "refitted-qut";
  Index group_size = 1;
  double nu = 0.5;
  double lambda2 = 0.0;
  Index rows = 1;
};

struct CommonOptions {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output = "qut-output";
};

struct FitOptions {
  std::string refit_mle = "on";
  double lambda = 0.0;
  std::string standardize = "off";
};

struct ScenarioOptions {
  Index n = 100;
  Index p = 1000;
  double theta = 0.5;
  double omega = 0.0;
  double snr = 1.0;
  std::string family = "gaussian";
  int binomial_m = 1;
  int reps = 100;
  std::string methods;
};

struct PhaseOptions {
  Index p = 200;
  std::string n_list = "40";
  std::string rho_list = "0.05,0.1,0.2,0.3,0.5,0.7,0.9";
  double magnitude = 10.0;
  int reps = 20;
  std::string methods = "oracle,qut-lasso,qut-sqrt-lasso,cv-min,cv-1se";
};

struct HoldoutOptions {
  std::string method = "qut-lasso";
  double split_fraction = 0.5;
  int repeats = 100;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
std::vector<T> parse_numbers(const std::string& s, const char* what) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw InputError(std::string("invalid ") + what + " '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError(std::string("empty ") + what + " list");
  return out;
}

bool on_off(const std::string& v, const char* flag) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw InputError(std::string(flag) + " takes on or off");
}

GlmFamily parse_family(const std::string& name, int m) {
  if (name == "gaussian") return GlmFamily::gaussian();
  if (name == "bernoulli") return GlmFamily::bernoulli();
  if (name == "binomial") return GlmFamily::binomial(m);
  if (name == "poisson") return GlmFamily::poisson();
  throw InputError("unknown family '" + name + "'");
}

DesignMode parse_design(const std::string& s) {
  if (s == "fixed") return DesignMode::Fixed;
  if (s == "random") return DesignMode::RandomBootstrapRows;
  throw InputError("--design takes fixed or random");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");
}

struct LoadedData {
  ProblemInstance instance;
  std::vector<std::string> x_names;
  std::vector<std::string> x0_names;
};

LoadedData load_data(const DataOptions& o) {
  if (o.data.empty()) throw InputError("--data is required");
  const CsvTable table = read_csv(o.data);
  const Index ycol = table.column(o.response_col);
  std::vector<Index> x0_idx;
  for (const auto& c : split_list(o.x0_cols)) x0_idx.push_back(table.column(c));

  LoadedData d;
  const GlmFamily fam = parse_family(o.family, o.binomial_m);
  const bool intercept = on_off(o.intercept, "--intercept");
  const Index n = table.data.rows();
  const Index p0 = static_cast<Index>(x0_idx.size()) + (intercept ? 1 : 0);
  d.instance.x0 = Matrix(n, p0);
  Index c = 0;
  if (intercept) {
    d.instance.x0.col(c++).setOnes();
    d.x0_names.push_back("(intercept)");
  }
  for (Index j : x0_idx) {
    d.instance.x0.col(c++) = table.data.col(j);
    d.x0_names.push_back(table.header[j]);
  }
  std::vector<Index> x_idx;
  for (Index j = 0; j < table.data.cols(); ++j)
    if (j != ycol && std::find(x0_idx.begin(), x0_idx.end(), j) == x0_idx.end()) x_idx.push_back(j);
  d.instance.x = Matrix(n, static_cast<Index>(x_idx.size()));
  for (std::size_t k = 0; k < x_idx.size(); ++k) {
    d.instance.x.col(static_cast<Index>(k)) = table.data.col(x_idx[k]);
    d.x_names.push_back(table.header[x_idx[k]]);
  }
  d.instance.y = table.data.col(ycol);
  // Binomial responses arrive as success counts out of m.
  if (fam.kind() == FamilyKind::BinomialScaled) d.instance.y /= static_cast<double>(fam.trials());
  d.instance.family = fam;
  d.instance.validate();
  return d;
}

PenaltySpec make_penalty(const ThresholdOptions& o, Index p) {
  const std::string& name = o.penalty;
  if (name == "lasso") return penalty::Lasso{};
  if (name == "sqrt-lasso") return penalty::SqrtLasso{};
  if (name == "lad-lasso") return penalty::LadLasso{};
  if (name == "elastic-net") return penalty::ElasticNet{o.lambda2};
  if (name == "tv1d") return penalty::TotalVariation1D{};
  if (name == "best-subset") return penalty::BestSubset{};
  if (name == "subbotin") return penalty::SubbotinOrthonormal{o.nu};
  if (name == "fused-lasso") return penalty::FusedLassoOrthonormal{o.lambda2};
  if (name == "low-rank") return penalty::LowRankTrace{o.rows};
  if (name == "group-lasso" || name == "group-sqrt-lasso") {
    if (o.group_size < 1 || p % o.group_size != 0)
      throw InputError("--group-size must divide the number of penalized columns");
    std::vector<IndexSet> groups;
    for (Index start = 0; start < p; start += o.group_size) {
      IndexSet g;
      for (Index j = start; j < start + o.group_size; ++j) g.push_back(j);
      groups.push_back(std::move(g));
    }
    if (name == "group-lasso") return penalty::GroupLasso{groups};
    return penalty::GroupSqrtLasso{groups};
  }
  throw InputError("unknown or unsupported penalty '" + name + "'");
}

// Penalties whose null statistic does not depend on sigma.
bool pivotal(const PenaltySpec& p) {
  return std::holds_alternative<penalty::SqrtLasso>(p) ||
         std::holds_alternative<penalty::LadLasso>(p) ||
         std::holds_alternative<penalty::GroupSqrtLasso>(p);
}

VarianceEstimate estimate_variance(const ProblemInstance& inst, const std::string& method,
                                   const ThresholdOptions& t, const CommonOptions& c) {
  CvOptions cv;
  cv.seed = derive_seed(c.seed, 11);
  cv.workers = c.workers;
  cv.folds = std::min<int>(10, static_cast<int>(inst.n()));
  if (method == "residual-cv") return sigma2_residual_cv(inst, cv);
  if (method == "rcv") {
    CvOptions half = cv;
    return sigma2_rcv(inst, cv_min_selector(half), derive_seed(c.seed, 12));
  }
  if (method == "refitted-qut") {
    RefittedQutOptions r;
    r.alpha = t.alpha;
    r.mc_samples = t.mc_samples;
    r.seed = derive_seed(c.seed, 13);
    r.split_seed = derive_seed(c.seed, 12);
    r.workers = c.workers;
    r.design = parse_design(t.design);
    return sigma2_refitted_qut(inst, r);
  }
  throw InputError("unknown variance method '" + method + "'");
}

void write_config(CLI::App* sub, const CommonOptions& c) {
  write_text_file(fs::path(c.output) / "config.toml", sub->config_to_str(true, false));
}

void add_data_options(CLI::App* sub, DataOptions& d) {
  sub->add_option("--data", d.data, "CSV file with a header row");
  sub->add_option("--response-col", d.response_col, "Response column (name or 1-based position)")
      ->capture_default_str();
  sub->add_option("--x0-cols", d.x0_cols, "Comma-separated unpenalized columns");
  sub->add_option("--intercept", d.intercept, "Add an intercept column to X0 (on|off)")
      ->capture_default_str();
  sub->add_option("--family", d.family, "gaussian|bernoulli|binomial|poisson")
      ->capture_default_str();
  sub->add_option("--binomial-m", d.binomial_m, "Trials per binomial response (CSV holds counts)")
      ->capture_default_str();
}

void add_threshold_options(CLI::App* sub, ThresholdOptions& t) {
  sub->add_option("--penalty", t.penalty,
                  "lasso|sqrt-lasso|lad-lasso|group-lasso|group-sqrt-lasso|elastic-net|tv1d|"
                  "best-subset|subbotin|fused-lasso|low-rank")
      ->capture_default_str();
  sub->add_option("--alpha", t.alpha, "Level of the upper quantile")->capture_default_str();
  sub->add_option("--mc-samples", t.mc_samples, "Monte Carlo draws")->capture_default_str();
  sub->add_option("--design", t.design, "fixed|random")->capture_default_str();
  sub->add_option("--sigma", t.sigma, "Known noise standard deviation (0: unknown)")
      ->capture_default_str();
  sub->add_option("--estimate-sigma", t.estimate_sigma,
                  "Variance estimator when sigma is unknown: refitted-qut|rcv|residual-cv")
      ->capture_default_str();
  sub->add_option("--group-size", t.group_size, "Contiguous group size for group penalties")
      ->capture_default_str();
  sub->add_option("--nu", t.nu, "Subbotin exponent")->capture_default_str();
  sub->add_option("--lambda2", t.lambda2, "Second penalty parameter (elastic net, fused lasso)")
      ->capture_default_str();
  sub->add_option("--rows", t.rows, "Rows of the response matrix for low-rank")
      ->capture_default_str();
}

void add_common_options(CLI::App* sub, CommonOptions& c) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--workers", c.workers, "Worker threads (default from QUT_WORKERS)")
      ->configurable(false);
  sub->add_option("--output", c.output, "Output directory")->configurable(false)->capture_default_str();
  sub->add_option("--config", "Read options from a key = value config file written by a previous run")
      ->configurable(false);
}

void add_scenario_options(CLI::App* sub, ScenarioOptions& s) {
  sub->add_option("--n", s.n, "Observations")->capture_default_str();
  sub->add_option("--p", s.p, "Penalized covariates")->capture_default_str();
  sub->add_option("--theta", s.theta, "Sparsity exponent: s* = ceil(N^theta)")->capture_default_str();
  sub->add_option("--omega", s.omega, "Column equicorrelation")->capture_default_str();
  sub->add_option("--snr", s.snr, "Signal-to-noise ratio")->capture_default_str();
  sub->add_option("--family", s.family, "gaussian|bernoulli|binomial|poisson")->capture_default_str();
  sub->add_option("--binomial-m", s.binomial_m, "Binomial trials")->capture_default_str();
  sub->add_option("--reps", s.reps, "Replications")->capture_default_str();
}

ScenarioSpec make_scenario(const ScenarioOptions& s, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.n = s.n;
  spec.p = s.p;
  spec.theta = s.theta;
  spec.omega = s.omega;
  spec.snr = s.snr;
  spec.family = parse_family(s.family, s.binomial_m);
  spec.replications = s.reps;
  spec.seed = seed;
  spec.validate();
  return spec;
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  for (const auto& m : split_list(list)) out.push_back(parse_method(m));
  if (out.empty()) throw InputError("no methods given");
  return out;
}

CampaignOptions campaign_options(const ThresholdOptions& t, const CommonOptions& c) {
  check_alpha(t.alpha);
  if (t.mc_samples < 1) throw InputError("--mc-samples must be >= 1");
  CampaignOptions o;
  o.alpha = t.alpha;
  o.mc_samples = t.mc_samples;
  o.workers = c.workers;
  o.design = parse_design(t.design);
  return o;
}

void write_report(const SimReport& report, const CommonOptions& c, std::ostream& out) {
  report.write(fs::path(c.output) / "report");
  out << report.table();
}

void json_vector(JsonWriter& w, const std::string& key, const Vector& v) {
  w.key(key).begin_array();
  for (Index i = 0; i < v.size(); ++i) w.value(v[i]);
  w.end_array();
}

void json_fit(JsonWriter& w, const std::string& key, const SparseFit& fit, const LoadedData& d) {
  w.key(key).begin_object();
  w.field("lambda", fit.lambda);
  w.key("beta0").begin_object();
  for (Index i = 0; i < fit.beta0.size(); ++i) w.field(d.x0_names[i], fit.beta0[i]);
  w.end_object();
  w.key("coefficients").begin_object();
  for (Index j : fit.support) w.field(d.x_names[j], fit.beta[j]);
  w.end_object();
  w.field("kkt_residual", fit.kkt_residual);
  w.end_object();
}

// ---------------------------------------------------------------------------

int cmd_qut(CLI::App* sub, const DataOptions& d, const ThresholdOptions& t, const CommonOptions& c,
            std::ostream& out) {
  check_alpha(t.alpha);
  if (t.mc_samples < 1) throw InputError("--mc-samples must be >= 1");
  LoadedData data = load_data(d);
  ProblemInstance& inst = data.instance;
  const DesignMode design = parse_design(t.design);
  const PenaltySpec pen = make_penalty(t, inst.p());
  const bool gaussian = inst.family.kind() == FamilyKind::Gaussian;

  NullSampler sampler = make_sampler(inst, c.seed, design);
  double sigma = 1.0;
  double sigma2_hat = std::nan("");
  if (gaussian) {
    if (t.sigma > 0.0) {
      sigma = t.sigma;
    } else if (!pivotal(pen)) {
      sigma2_hat = estimate_variance(inst, t.estimate_sigma, t, c).sigma2;
      sigma = std::sqrt(sigma2_hat);
    }
    sampler.sigma = sigma;
  } else {
    const auto v = null_mle(inst);
    if (!v) throw DomainError("response lies outside the domain where the null MLE exists");
    sampler.intercept_beta0 = *v;
  }
  const ThresholdResult r = compute_qut(sampler, pen, t.alpha, t.mc_samples, c.workers);

  JsonWriter w;
  w.begin_object();
  w.field("command", "qut");
  w.field("penalty", penalty_name(pen));
  w.field("family", inst.family.name());
  w.field("design", t.design);
  w.field("lambda_qut", r.lambda_qut);
  w.field("alpha", r.alpha);
  w.field("mc_samples", r.mc_samples);
  w.field("infinite_fraction", r.infinite_fraction);
  w.field("seed", static_cast<long long>(r.seed));
  if (gaussian) w.field("sigma", sigma);
  if (!std::isnan(sigma2_hat)) w.field("sigma2_hat", sigma2_hat);
  w.field("quantile_infinite", r.quantile_infinite());
  w.end_object();
  write_text_file(fs::path(c.output) / "result.json", w.str());
  write_config(sub, c);

  out << "lambda_qut " << format_real(r.lambda_qut) << "\nalpha " << format_real(r.alpha)
      << "\nmc_samples " << r.mc_samples << "\ninfinite_fraction "
      << format_real(r.infinite_fraction) << '\n';
  if (r.quantile_infinite()) throw DomainError("the null-thresholding quantile is infinite");
  return kOk;
}

int cmd_fit(CLI::App* sub, const DataOptions& d, const ThresholdOptions& t, const FitOptions& f,
            const CommonOptions& c, std::ostream& out) {
  check_alpha(t.alpha);
  if (t.mc_samples < 1) throw InputError("--mc-samples must be >= 1");
  if (f.lambda < 0.0) throw InputError("--lambda must be nonnegative");
  const bool refit = on_off(f.refit_mle, "--refit-mle");
  const bool standardize = on_off(f.standardize, "--standardize");
  LoadedData data = load_data(d);
  ProblemInstance& inst = data.instance;
  Vector scale = Vector::Ones(inst.p());
  if (standardize) {
    const Matrix xt = ColumnProjector(inst.x0).residual(inst.x);
    const double n = static_cast<double>(inst.n());
    for (Index j = 0; j < inst.p(); ++j) {
      const double sj = xt.col(j).norm() / std::sqrt(n);
      if (sj > 0.0) scale[j] = sj;
    }
    inst.x = inst.x * scale.cwiseInverse().asDiagonal();
  }
  const DesignMode design = parse_design(t.design);
  const bool gaussian = inst.family.kind() == FamilyKind::Gaussian;
  if (t.penalty != "lasso" && t.penalty != "sqrt-lasso")
    throw InputError("fit supports --penalty lasso or sqrt-lasso");
  const bool sqrt_lasso = t.penalty == "sqrt-lasso";
  if (sqrt_lasso && !gaussian) throw InputError("sqrt-lasso needs the gaussian family");
  if (!gaussian && !membership_D(inst))
    throw DomainError("response lies outside the domain where the null MLE exists");

  double sigma2_hat = std::nan("");
  std::optional<ThresholdResult> threshold;
  double lambda = f.lambda;
  if (lambda == 0.0) {
    NullSampler sampler = make_sampler(inst, c.seed, design);
    if (gaussian && !sqrt_lasso) {
      if (t.sigma > 0.0) {
        sampler.sigma = t.sigma;
      } else {
        sigma2_hat = estimate_variance(inst, t.estimate_sigma, t, c).sigma2;
        sampler.sigma = std::sqrt(sigma2_hat);
      }
    } else if (!gaussian) {
      sampler.intercept_beta0 = *null_mle(inst);
    }
    const PenaltySpec pen = sqrt_lasso ? PenaltySpec{penalty::SqrtLasso{}} : PenaltySpec{penalty::Lasso{}};
    threshold = compute_qut(sampler, pen, t.alpha, t.mc_samples, c.workers);
    if (threshold->quantile_infinite())
      throw DomainError("the null-thresholding quantile is infinite");
    lambda = threshold->lambda_qut;
  }

  const SolverConfig cfg = default_config(inst.family);
  SparseFit penalized = sqrt_lasso ? sqrt_lasso_fit(inst, lambda, cfg)
                        : gaussian ? lasso_fit(inst, lambda, cfg)
                                   : glm_lasso_fit(inst, lambda, cfg);
  std::optional<SparseFit> refitted;
  bool refit_failed = false;
  if (refit) {
    try {
      refitted = mle_refit(inst, penalized.support, cfg);
      refitted->lambda = lambda;
    } catch (const NonExistenceError&) {
      refit_failed = true;
    } catch (const RankDeficiencyError&) {
      refit_failed = true;
    }
  }

  penalized.beta = penalized.beta.cwiseQuotient(scale);
  if (refitted) refitted->beta = refitted->beta.cwiseQuotient(scale);

  JsonWriter w;
  w.begin_object();
  w.field("command", "fit");
  w.field("penalty", t.penalty);
  w.field("family", inst.family.name());
  w.field("lambda", lambda);
  if (threshold) {
    w.field("lambda_qut", threshold->lambda_qut);
    w.field("alpha", threshold->alpha);
    w.field("mc_samples", threshold->mc_samples);
    w.field("infinite_fraction", threshold->infinite_fraction);
  }
  if (!std::isnan(sigma2_hat)) w.field("sigma2_hat", sigma2_hat);
  if (gaussian && t.sigma > 0.0) w.field("sigma", t.sigma);
  w.key("support").begin_array();
  for (Index j : penalized.support) w.value(data.x_names[j]);
  w.end_array();
  json_fit(w, "penalized", penalized, data);
  if (refitted) json_fit(w, "refit", *refitted, data);
  w.field("refit_failed", refit_failed);
  w.end_object();
  write_text_file(fs::path(c.output) / "fit.json", w.str());
  write_config(sub, c);

  out << "lambda " << format_real(lambda) << "\nsupport";
  for (Index j : penalized.support) out << ' ' << data.x_names[j];
  out << '\n';
  if (!std::isnan(sigma2_hat)) out << "sigma2_hat " << format_real(sigma2_hat) << '\n';
  if (refit_failed) throw NonExistenceError("MLE refit does not exist; penalized fit reported");
  return kOk;
}

int cmd_variance(CLI::App* sub, const DataOptions& d, const ThresholdOptions& t,
                 const std::string& method, const CommonOptions& c, std::ostream& out) {
  check_alpha(t.alpha);
  LoadedData data = load_data(d);
  const VarianceEstimate v = estimate_variance(data.instance, method, t, c);
  JsonWriter w;
  w.begin_object();
  w.field("command", "variance");
  w.field("method", variance_method_name(v.method));
  w.field("sigma2", v.sigma2);
  w.field("n1", static_cast<long long>(v.n1));
  w.field("n2", static_cast<long long>(v.n2));
  w.field("m1", static_cast<long long>(v.m1));
  w.field("m2", static_cast<long long>(v.m2));
  w.field("iterations", v.iterations);
  w.field("no_sign_change", v.no_sign_change);
  w.end_object();
  write_text_file(fs::path(c.output) / "variance.json", w.str());
  write_config(sub, c);
  out << "sigma2 " << format_real(v.sigma2) << '\n';
  return kOk;
}

// CLI11 only reads config files attached to the top-level app, so a
// subcommand's --config is expanded here: the file's key = value pairs become
// flags placed right after the subcommand name, ahead of the user's own flags,
// which therefore take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw InputError("--config needs a file name");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (file.empty() || rest.size() < 2) return args;
  if (!fs::exists(file)) throw InputError("cannot open config file " + file);
  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigTOML().from_file(file)) {
    if (!item.parents.empty() || item.name == "++" || item.name == "--") continue;
    if (item.inputs.empty() || (item.inputs.size() == 1 && item.inputs[0].empty())) continue;
    injected.push_back("--" + item.name);
    for (const auto& v : item.inputs) injected.push_back(v);
  }
  rest.insert(rest.begin() + 2, injected.begin(), injected.end());
  return rest;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantile universal threshold: thresholds, fits, variance estimates and simulations"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", "qut 1.0");

  DataOptions data;
  ThresholdOptions thr;
  CommonOptions common;
  common.workers = default_workers();
  FitOptions fit;
  ScenarioOptions scen;
  PhaseOptions phase;
  HoldoutOptions hold;
  std::string variance_method = "refitted-qut";

  auto* qut = app.add_subcommand("qut", "Monte Carlo quantile universal threshold");
  add_data_options(qut, data);
  add_threshold_options(qut, thr);
  add_common_options(qut, common);

  auto* fitc = app.add_subcommand("fit", "Threshold, fit and refit");
  add_data_options(fitc, data);
  add_threshold_options(fitc, thr);
  fitc->add_option("--refit-mle", fit.refit_mle, "Refit the selected model by MLE (on|off)")
      ->capture_default_str();
  fitc->add_option("--lambda", fit.lambda, "Manual lambda; 0 computes lambda^QUT")
      ->capture_default_str();
  fitc->add_option("--standardize", fit.standardize,
                   "Scale penalized columns to unit mean square after removing X0 (on|off); "
                   "coefficients are reported on the original scale")
      ->capture_default_str();
  add_common_options(fitc, common);

  auto* var = app.add_subcommand("variance", "Noise variance estimation");
  add_data_options(var, data);
  add_threshold_options(var, thr);
  var->add_option("--method", variance_method, "refitted-qut|rcv|residual-cv")
      ->capture_default_str();
  add_common_options(var, common);

  auto* sim = app.add_subcommand("simulate", "TPR/FDR/RMSE campaign on synthetic data");
  add_scenario_options(sim, scen);
  add_threshold_options(sim, thr);
  sim->add_option("--methods", scen.methods,
                  "Comma-separated methods (default: all applicable)");
  add_common_options(sim, common);

  auto* ph = app.add_subcommand("phase", "Oracle inclusive rate over a sparsity grid");
  ph->add_option("--p", phase.p, "Covariates")->capture_default_str();
  ph->add_option("--n-list", phase.n_list, "Comma-separated sample sizes")->capture_default_str();
  ph->add_option("--rho-list", phase.rho_list, "Comma-separated s*/N values")->capture_default_str();
  ph->add_option("--magnitude", phase.magnitude, "Nonzero coefficient value")->capture_default_str();
  ph->add_option("--reps", phase.reps, "Replications per grid cell")->capture_default_str();
  ph->add_option("--methods", phase.methods, "Comma-separated methods")->capture_default_str();
  add_threshold_options(ph, thr);
  add_common_options(ph, common);

  auto* sens = app.add_subcommand("sensitivity", "Intercept sensitivity study (Poisson)");
  ScenarioOptions sens_scen;
  sens_scen.n = 100;
  sens_scen.p = 300;
  sens_scen.snr = 0.5;
  sens_scen.reps = 50;
  sens_scen.family = "poisson";
  add_scenario_options(sens, sens_scen);
  add_threshold_options(sens, thr);
  add_common_options(sens, common);

  auto* ho = app.add_subcommand("holdout", "Repeated train/test evaluation on a CSV data set");
  add_data_options(ho, data);
  add_threshold_options(ho, thr);
  ho->add_option("--method", hold.method, "qut-lasso|qut-sqrt-lasso|cv-min|cv-1se")
      ->capture_default_str();
  ho->add_option("--split-fraction", hold.split_fraction, "Training fraction")->capture_default_str();
  ho->add_option("--repeats", hold.repeats, "Number of random splits")->capture_default_str();
  add_common_options(ho, common);

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  std::vector<const char*> argv;
  for (const auto& a : expanded) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (common.workers < 1) throw InputError("--workers must be >= 1");
    if (qut->parsed()) return cmd_qut(qut, data, thr, common, out);
    if (fitc->parsed()) return cmd_fit(fitc, data, thr, fit, common, out);
    if (var->parsed()) return cmd_variance(var, data, thr, variance_method, common, out);
    if (sim->parsed()) {
      // The simulate defaults describe the Table 2 layout.
      const ScenarioSpec spec = make_scenario(scen, common.seed);
      std::string methods = scen.methods;
      if (methods.empty())
        methods = spec.family.kind() == FamilyKind::Gaussian
                      ? "qut-lasso,qut-sqrt-lasso,cv-min,cv-1se"
                      : "qut-lasso,cv-min,cv-1se";
      const SimReport report =
          run_table2_campaign({spec}, parse_methods(methods), campaign_options(thr, common));
      write_report(report, common, out);
      write_config(sim, common);
      return kOk;
    }
    if (ph->parsed()) {
      PhaseGridSpec grid;
      grid.p = phase.p;
      grid.n_list = parse_numbers<Index>(phase.n_list, "N");
      grid.rho_list = parse_numbers<double>(phase.rho_list, "rho");
      grid.magnitude = phase.magnitude;
      grid.replications = phase.reps;
      grid.seed = common.seed;
      const SimReport report =
          run_phase_campaign(grid, parse_methods(phase.methods), campaign_options(thr, common));
      write_report(report, common, out);
      write_text_file(fs::path(common.output) / "grid.csv", phase_grid_csv(report));
      write_config(ph, common);
      return kOk;
    }
    if (sens->parsed()) {
      const ScenarioSpec spec = make_scenario(sens_scen, common.seed);
      const SimReport report = run_sensitivity_study(spec, campaign_options(thr, common));
      write_report(report, common, out);
      write_config(sens, common);
      return kOk;
    }
    if (ho->parsed()) {
      const LoadedData loaded = load_data(data);
      HoldoutSpec spec;
      spec.method = parse_method(hold.method);
      spec.split_fraction = hold.split_fraction;
      spec.repeats = hold.repeats;
      spec.seed = common.seed;
      const SimReport report = run_holdout(loaded.instance, spec, campaign_options(thr, common));
      write_report(report, common, out);
      write_config(ho, common);
      return kOk;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const NonExistenceError& e) {
    err << "error: " << e.what() << '\n';
    return kRefit;
  } catch (const RankDeficiencyError& e) {
    err << "error: " << e.what() << '\n';
    return kRefit;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace qut::cli
