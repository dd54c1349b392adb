// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "qut/csv.hpp"
#include "qut/linalg.hpp"
#include "qut/qut_engine.hpp"
#include "qut/report.hpp"
#include "qut/simlab.hpp"
#include "qut/solvers.hpp"
#include "qut/variance.hpp"
#include "qut/zerothresh.hpp"

namespace fs = std::filesystem;
using namespace qut;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

Matrix gaussian_matrix(Engine& eng, Index rows, Index cols) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = nd(eng);
  return m;
}

Vector gaussian_vector(Engine& eng, Index n) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = nd(eng);
  return v;
}

Vector glm_response(Engine& eng, const GlmFamily& fam, const Vector& eta) {
  Vector y(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    const double mu = fam.mean(eta[i]);
    if (fam.kind() == FamilyKind::Bernoulli)
      y[i] = std::bernoulli_distribution(mu)(eng) ? 1.0 : 0.0;
    else
      y[i] = std::poisson_distribution<int>(mu)(eng);
  }
  return y;
}

ProblemInstance random_glm_instance(Engine& eng, const GlmFamily& fam, Index n, Index p) {
  const Matrix x = gaussian_matrix(eng, n, p);
  Vector beta = Vector::Zero(p);
  for (Index j = 0; j < std::min<Index>(3, p); ++j) beta[j] = 0.7 * (j % 2 ? -1.0 : 1.0);
  const double offset = fam.kind() == FamilyKind::Poisson ? 0.5 : 0.0;
  Vector y;
  do {
    y = glm_response(eng, fam, (x * beta).array() + offset);
  } while (!membership_D(with_intercept(x, y, fam)));
  return with_intercept(x, y, fam);
}

double glm_kkt(const ProblemInstance& inst, const SparseFit& fit) {
  Vector eta = inst.x * fit.beta;
  if (inst.p0() > 0) eta += inst.x0 * fit.beta0;
  const Vector r = inst.y - family_mean(inst.family, eta);
  double worst = l1_stationarity_residual(inst.x.transpose() * r, fit.beta, fit.lambda);
  if (inst.p0() > 0) worst = std::max(worst, (inst.x0.transpose() * r).lpNorm<Eigen::Infinity>());
  return worst;
}

double total_variation(const Vector& b) {
  double tv = 0.0;
  for (Index k = 0; k + 1 < b.size(); ++k) tv += std::abs(b[k + 1] - b[k]);
  return tv;
}

Outcome weak_fwer() {
  Engine eng = stream_engine(1001, 0);
  const Index n = 50, p = 200;
  ProblemInstance inst = with_intercept(gaussian_matrix(eng, n, p), Vector::Zero(n));
  inst.sigma = 1.0;
  const double lambda = compute_qut(make_sampler(inst, 1002), penalty::Lasso{}, 0.05, 5000).lambda_qut;
  const int reps = 1000;
  int selected = 0;
  for (int r = 0; r < reps; ++r) {
    Engine e = stream_engine(1003, static_cast<std::uint64_t>(r));
    inst.y = gaussian_vector(e, n).array() + 1.0;
    if (!lasso_fit(inst, lambda).is_zero()) ++selected;
  }
  const double freq = static_cast<double>(selected) / reps;
  return {freq >= 0.032 && freq <= 0.070,
          "selection frequency " + fmt(freq) + " over " + std::to_string(reps) +
              " null datasets, band [0.032, 0.070]"};
}

Outcome zero_threshold_equivalence() {
  struct Branch {
    std::string name;
    // Returns (lambda0, is_zero(lambda)) for instance number i.
    std::function<std::pair<double, std::function<bool(double)>>(Engine&)> make;
  };
  const std::vector<Branch> branches{
      {"lasso",
       [](Engine& eng) {
         const Index n = 20 + static_cast<Index>(eng() % 40), p = 5 + static_cast<Index>(eng() % 80);
         const ProblemInstance inst = with_intercept(gaussian_matrix(eng, n, p), gaussian_vector(eng, n));
         return std::make_pair(lambda0(inst, penalty::Lasso{}),
                               std::function<bool(double)>([inst](double l) {
                                 return lasso_fit(inst, l).is_zero();
                               }));
       }},
      {"sqrt-lasso",
       [](Engine& eng) {
         const Index n = 20 + static_cast<Index>(eng() % 40), p = 5 + static_cast<Index>(eng() % 80);
         const ProblemInstance inst = with_intercept(gaussian_matrix(eng, n, p), gaussian_vector(eng, n));
         return std::make_pair(lambda0(inst, penalty::SqrtLasso{}),
                               std::function<bool(double)>([inst](double l) {
                                 return sqrt_lasso_fit(inst, l).is_zero();
                               }));
       }},
      {"glm-bernoulli",
       [](Engine& eng) {
         const ProblemInstance inst = random_glm_instance(eng, GlmFamily::bernoulli(), 40, 15);
         return std::make_pair(lambda0_glm(inst), std::function<bool(double)>([inst](double l) {
                                 return glm_lasso_fit(inst, l).is_zero();
                               }));
       }},
      {"glm-poisson",
       [](Engine& eng) {
         const ProblemInstance inst = random_glm_instance(eng, GlmFamily::poisson(), 40, 15);
         return std::make_pair(lambda0_glm(inst), std::function<bool(double)>([inst](double l) {
                                 return glm_lasso_fit(inst, l).is_zero();
                               }));
       }},
      {"tv1d",
       [](Engine& eng) {
         const Vector y = gaussian_vector(eng, 2 + static_cast<Index>(eng() % 150));
         return std::make_pair(lambda0_tv1d(y), std::function<bool(double)>([y](double l) {
                                 return total_variation(tv1d_fit(y, l)) == 0.0;
                               }));
       }},
      {"low-rank",
       [](Engine& eng) {
         const Matrix y = gaussian_matrix(eng, 2 + static_cast<Index>(eng() % 20),
                                          2 + static_cast<Index>(eng() % 20));
         return std::make_pair(lambda0_lowrank(y), std::function<bool(double)>([y](double l) {
                                 return (svd_soft_threshold(y, l).array() == 0.0).all();
                               }));
       }},
  };
  bool pass = true;
  std::string detail;
  for (std::size_t b = 0; b < branches.size(); ++b) {
    int boundary_fail = 0;
    double worst_rel = 0.0;
    for (int i = 0; i < 100; ++i) {
      Engine eng = stream_engine(2000 + b, static_cast<std::uint64_t>(i));
      const auto [l0, is_zero] = branches[b].make(eng);
      if (!is_zero(1.001 * l0) || is_zero(0.999 * l0)) ++boundary_fail;
      double lo = 0.5 * l0, hi = 2.0 * l0;
      while (hi - lo > 1e-7 * hi) {
        const double mid = 0.5 * (lo + hi);
        (is_zero(mid) ? hi : lo) = mid;
      }
      worst_rel = std::max(worst_rel, std::abs(hi - l0) / l0);
    }
    pass = pass && boundary_fail == 0 && worst_rel <= 1e-4;
    detail += (b ? "; " : "") + branches[b].name + " boundary failures " +
              std::to_string(boundary_fail) + "/100, bisection rel err " + fmt(worst_rel, 2);
  }
  return {pass, detail};
}

Outcome best_subset_closed_form() {
  const Index p = 1024;
  const ThresholdResult mc = mc_orthonormal_qut(ClosedFormKind::BestSubsetOrthonormal, {1.0, p, 1},
                                                alpha_bar(p), 100000, 3001);
  const double target = std::log(static_cast<double>(p));
  const double rel = std::abs(mc.lambda_qut / target - 1.0);
  return {rel <= 0.05, "MC quantile " + fmt(mc.lambda_qut) + " vs log P = " + fmt(target) +
                           ", rel diff " + fmt(rel, 3) + " (tolerance 0.05)"};
}

Outcome group_closed_form() {
  const Index p = 4096;
  const ThresholdResult mc = mc_orthonormal_qut(ClosedFormKind::GroupLassoOrthonormal, {1.0, p, 1},
                                                alpha_bar(p), 100000, 4001);
  const double target = std::sqrt(2.0 * std::log(static_cast<double>(p)) - std::log(M_PI));
  const double rel = std::abs(mc.lambda_qut / target - 1.0);
  return {rel <= 0.05, "MC quantile " + fmt(mc.lambda_qut) + " vs sqrt(2 log P - log pi) = " +
                           fmt(target) + ", rel diff " + fmt(rel, 3) + " (tolerance 0.05)"};
}

Outcome table2() {
  struct Target {
    double theta, tpr, tpr_tol, fdr_lo, fdr_hi, rmse, rmse_tol;
  };
  const Target targets[] = {{0.5, 0.09, 0.05, -0.01, 0.05, 0.85, 0.08},
                            {0.1, 0.61, 0.10, 0.00, 0.03, 0.35, 0.08}};
  std::vector<ScenarioSpec> specs;
  for (const auto& t : targets) {
    ScenarioSpec s;
    s.n = 100;
    s.p = 1000;
    s.theta = t.theta;
    s.omega = 0.0;
    s.snr = 1.0;
    s.replications = 100;
    s.seed = 5001;
    specs.push_back(s);
  }
  const SimReport r = run_table2_campaign(specs, {Method::QutLasso}, CampaignOptions{});
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& t = targets[i];
    auto mean = [&](const char* m) {
      const auto v = r.values(specs[i].label(), method_name(Method::QutLasso), m);
      double s = 0.0;
      for (double x : v) s += x;
      return v.empty() ? NAN : s / static_cast<double>(v.size());
    };
    const double tpr = mean("tpr"), fdr = mean("fdr"), rmse = mean("rmse");
    double ms = 0.0;
    const auto rv = r.values(specs[i].label(), method_name(Method::QutLasso), "rmse");
    for (double x : rv) ms += x * x;
    const double rms = std::sqrt(ms / static_cast<double>(rv.size()));
    const bool ok = std::abs(tpr - t.tpr) <= t.tpr_tol && fdr >= t.fdr_lo && fdr <= t.fdr_hi &&
                    std::abs(rmse - t.rmse) <= t.rmse_tol;
    pass = pass && ok;
    detail += std::string(i ? "; " : "") + "theta=" + fmt(t.theta) + ": TPR " + fmt(tpr, 3) +
              " (" + fmt(t.tpr) + "+-" + fmt(t.tpr_tol) + "), FDR " + fmt(fdr, 3) + " (" +
              fmt(std::max(0.0, t.fdr_lo)) + ".." + fmt(t.fdr_hi) + "), RMSE " + fmt(rmse, 3) +
              " [root mean square " + fmt(rms, 3) + "] (" + fmt(t.rmse) + "+-" + fmt(t.rmse_tol) + ")";
  }
  return {pass, detail};
}

Outcome phase_shape() {
  PhaseGridSpec g;
  g.p = 200;
  g.n_list = {40};
  g.magnitude = 10.0;
  g.replications = 20;
  g.seed = 6001;
  const SimReport r = run_phase_campaign(g, {Method::QutLasso}, CampaignOptions{});
  std::vector<double> oir;
  for (const auto& grp : r.summarize())
    for (const auto& m : grp.metrics)
      if (m.name == "oir") oir.push_back(m.mean);
  if (oir.size() != g.rho_list.size()) return {false, "unexpected grid size"};
  int inversions = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < oir.size(); ++i)
    if (oir[i + 1] > oir[i]) {
      ++inversions;
      worst = std::max(worst, oir[i + 1] - oir[i]);
    }
  std::string curve;
  for (std::size_t i = 0; i < oir.size(); ++i)
    curve += (i ? " " : "") + fmt(g.rho_list[i], 2) + ":" + fmt(oir[i], 3);
  const bool pass = oir.front() >= 0.5 && oir.back() == 0.0 && inversions <= 1 && worst <= 0.1;
  return {pass, "OIR by rho " + curve + "; inversions " + std::to_string(inversions) +
                    " (largest " + fmt(worst, 3) + ")"};
}

Outcome glm_kkt_certification() {
  int fits = 0, unconverged = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    Engine eng = stream_engine(7001, static_cast<std::uint64_t>(i));
    const GlmFamily fam = i % 2 ? GlmFamily::poisson() : GlmFamily::bernoulli();
    const Index n = 30 + static_cast<Index>(eng() % 50), p = 5 + static_cast<Index>(eng() % 60);
    const ProblemInstance inst = random_glm_instance(eng, fam, n, p);
    const double l0 = lambda0_glm(inst);
    for (double frac : {0.9, 0.5, 0.2}) {
      const SparseFit fit = glm_lasso_fit(inst, frac * l0);
      ++fits;
      if (!fit.converged()) {
        ++unconverged;
        continue;
      }
      worst = std::max(worst, glm_kkt(inst, fit));
    }
  }
  return {unconverged == 0 && worst <= 1e-6,
          std::to_string(fits) + " fits on 200 Bernoulli/Poisson instances, " +
              std::to_string(unconverged) + " unconverged, worst stationarity residual " +
              fmt(worst, 3) + " (tolerance 1e-6)"};
}

Outcome variance_calibration() {
  std::vector<double> qut_est, cv_est;
  for (int rep = 0; rep < 100; ++rep) {
    Engine eng = stream_engine(8001, static_cast<std::uint64_t>(rep));
    const Matrix x = gaussian_matrix(eng, 200, 500);
    const Vector y = gaussian_vector(eng, 200);
    const ProblemInstance inst = with_intercept(x, y);
    RefittedQutOptions r;
    r.seed = derive_seed(8002, static_cast<std::uint64_t>(rep));
    r.split_seed = derive_seed(8003, static_cast<std::uint64_t>(rep));
    qut_est.push_back(sigma2_refitted_qut(inst, r).sigma2);
    CvOptions cv;
    cv.seed = derive_seed(8004, static_cast<std::uint64_t>(rep));
    cv_est.push_back(sigma2_residual_cv(inst, cv).sigma2);
  }
  const double med = median_of(qut_est);
  const double iqr_qut = iqr_of(qut_est), iqr_cv = iqr_of(cv_est);
  return {std::abs(med - 1.0) <= 0.1 && iqr_qut <= iqr_cv,
          "refitted-QUT median " + fmt(med) + ", IQR " + fmt(iqr_qut, 3) +
              "; residual-CV median " + fmt(median_of(cv_est)) + ", IQR " + fmt(iqr_cv, 3)};
}

Outcome sensitivity() {
  ScenarioSpec s;
  s.n = 100;
  s.p = 300;
  s.theta = 0.5;
  s.omega = 0.0;
  s.snr = 0.5;
  s.family = GlmFamily::poisson();
  s.replications = 100;
  s.seed = 9001;
  const SimReport r = run_sensitivity_study(s, CampaignOptions{});
  const double initial = median_of(r.values(s.label(), "initial-step", "beta0"));
  const double final_step = median_of(r.values(s.label(), "final-step", "beta0"));
  // Paired by replication: every arm records every replication, NaN when the
  // arm failed, so pair through the records.
  std::vector<double> oracle_tpr(static_cast<std::size_t>(s.replications), NAN);
  std::vector<double> final_tpr(oracle_tpr);
  for (const auto& rec : r.records())
    for (const auto& [name, v] : rec.metrics)
      if (name == "tpr") {
        if (rec.method == "oracle-intercept") oracle_tpr[static_cast<std::size_t>(rec.replication)] = v;
        if (rec.method == "final-step") final_tpr[static_cast<std::size_t>(rec.replication)] = v;
      }
  std::vector<double> diffs;
  for (std::size_t i = 0; i < oracle_tpr.size(); ++i)
    if (std::isfinite(oracle_tpr[i]) && std::isfinite(final_tpr[i]))
      diffs.push_back(std::abs(oracle_tpr[i] - final_tpr[i]));
  const double med_diff = diffs.empty() ? NAN : median_of(diffs);
  const bool pass =
      std::abs(final_step - 1.0) < std::abs(initial - 1.0) && !diffs.empty() && med_diff <= 0.1;
  return {pass, "median intercept initial " + fmt(initial) + ", final " + fmt(final_step) +
                    "; median |TPr oracle - final| " + fmt(med_diff, 3) + " over " +
                    std::to_string(diffs.size()) + " replications"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Every regular file below `dir`, relative path -> contents.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
  std::sort(files.begin(), files.end());
  return files;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "qut_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  Engine eng = stream_engine(10001, 0);
  const Index n = 60, p = 40;
  const Matrix x = gaussian_matrix(eng, n, p);
  Vector y = x.col(0) * 2.0 - x.col(3) + gaussian_vector(eng, n);
  std::vector<std::string> header{"y"};
  for (Index j = 0; j < p; ++j) header.push_back("x" + std::to_string(j + 1));
  Matrix m(n, p + 1);
  m.col(0) = y;
  m.rightCols(p) = x;
  const std::string data = (root / "data.csv").string();
  write_text_file(data, format_csv(header, m));

  const std::vector<std::vector<std::string>> commands{
      {"qut", "--data", data, "--mc-samples", "300"},
      {"qut", "--data", data, "--mc-samples", "300", "--penalty", "sqrt-lasso"},
      {"fit", "--data", data, "--mc-samples", "300"},
      {"variance", "--data", data, "--method", "refitted-qut", "--mc-samples", "300"},
      {"variance", "--data", data, "--method", "rcv"},
      {"simulate", "--n", "40", "--p", "60", "--theta", "0.3", "--reps", "4", "--mc-samples", "200",
       "--methods", "qut-lasso,qut-sqrt-lasso,cv-min,cv-1se"},
      {"phase", "--p", "40", "--n-list", "20", "--rho-list", "0.05,0.5", "--reps", "3",
       "--mc-samples", "200", "--methods", "oracle,qut-lasso,cv-min"},
      {"sensitivity", "--n", "40", "--p", "60", "--reps", "3", "--mc-samples", "200"},
      {"holdout", "--data", data, "--repeats", "4", "--mc-samples", "200"},
  };
  int mismatches = 0, failures = 0;
  std::string which;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::vector<std::vector<std::pair<std::string, std::string>>> outputs;
    for (const std::string workers : {"1", "1", "3"}) {
      const fs::path out = root / ("run" + std::to_string(c) + "_" + std::to_string(outputs.size()));
      std::vector<std::string> args{"qut"};
      args.insert(args.end(), commands[c].begin(), commands[c].end());
      args.insert(args.end(), {"--seed", "17", "--workers", workers, "--output", out.string()});
      std::ostringstream sink;
      if (cli::run_cli(args, sink, sink) != 0) {
        ++failures;
        which += " " + commands[c][0] + "(exit)";
        break;
      }
      outputs.push_back(snapshot(out));
    }
    if (outputs.size() == 3 && (outputs[0] != outputs[1] || outputs[0] != outputs[2])) {
      ++mismatches;
      which += " " + commands[c][0];
    }
  }
  fs::remove_all(root);
  return {mismatches == 0 && failures == 0,
          std::to_string(commands.size()) + " CLI commands run twice with 1 worker and once with 3; " +
              std::to_string(mismatches) + " differing, " + std::to_string(failures) + " failed" +
              (which.empty() ? "" : ":" + which)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"weak FWER control of the lasso at the QUT", weak_fwer},
      {"zero-thresholding boundary across six branches", zero_threshold_equivalence},
      {"best-subset closed form vs Monte Carlo", best_subset_closed_form},
      {"group-lasso closed form vs Monte Carlo", group_closed_form},
      {"desk-scale TPR/FDR/RMSE reproduction", table2},
      {"phase-transition shape of the OIR", phase_shape},
      {"GLM lasso stationarity certification", glm_kkt_certification},
      {"null calibration of refitted-QUT variance", variance_calibration},
      {"Poisson intercept sensitivity harness", sensitivity},
      {"byte-identical outputs across runs and worker counts", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
