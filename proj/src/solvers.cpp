#include "qut/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qut {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

// Stationarity target that respects double-precision limits on huge-scale data.
double effective_tol(double tol, const Vector& col_sq, const Vector& y) {
  const double xmax = col_sq.size() > 0 ? std::sqrt(col_sq.maxCoeff()) : 0.0;
  return std::max(tol, 64.0 * kEps * xmax * y.norm());
}

Vector linear_predictor(const ProblemInstance& inst, const Vector& beta0,
                        const Vector& beta) {
  Vector eta = inst.x * beta;
  if (inst.p0() > 0) eta += inst.x0 * beta0;
  return eta;
}

double negloglik_eta(const GlmFamily& family, const Vector& y, const Vector& eta) {
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i)
    total += family.cumulant(eta[i]) - y[i] * eta[i];
  return total;
}

// Intercept-only X0: returns the constant c when X0 = c * 1, else 0.
double constant_column(const Matrix& x0) {
  if (x0.cols() != 1 || x0.rows() == 0) return 0.0;
  const double c = x0(0, 0);
  if (c == 0.0) return 0.0;
  return (x0.array() == c).all() ? c : 0.0;
}

// Damped Newton for the unpenalized canonical GLM over `design`.
std::optional<Vector> newton_mle(const Matrix& design, const Vector& y,
                                 const GlmFamily& family, const SolverConfig& cfg,
                                 Vector start) {
  const Index k = design.cols();
  Vector v = std::move(start);
  Vector eta = design * v;
  double f = negloglik_eta(family, y, eta);
  if (!std::isfinite(f)) {
    v.setZero();
    eta.setZero();
    f = negloglik_eta(family, y, eta);
  }
  constexpr int kMaxNewton = 500;
  for (int it = 0; it < kMaxNewton; ++it) {
    Vector mu(y.size()), w(y.size());
    for (Index i = 0; i < y.size(); ++i) {
      mu[i] = family.mean(eta[i]);
      w[i] = family.variance(eta[i]);
    }
    const Vector score = design.transpose() * (y - mu);
    const bool small_score = score.lpNorm<Eigen::Infinity>() <= cfg.conv_tol;
    // A vanishing score with fitted means pinned to the edge of the mean space
    // is also what a divergent (separated) problem looks like; tell the two
    // apart by whether Newton still moves the iterate by O(1).
    const bool at_edge = family.kind() != FamilyKind::Gaussian && w.size() > 0 &&
                         w.minCoeff() < 1e-8 * std::max(1.0, w.maxCoeff());
    if (small_score && !at_edge) return v;

    const Matrix hessian = design.transpose() * w.asDiagonal() * design;
    Eigen::LDLT<Matrix> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14)
      return std::nullopt;
    const Vector step = ldlt.solve(score);
    if (!step.allFinite()) return std::nullopt;
    if (small_score) {
      if (step.lpNorm<Eigen::Infinity>() > 1e-3 * std::max(1.0, v.lpNorm<Eigen::Infinity>()))
        return std::nullopt;
      return v;
    }

    const double slope = -score.dot(step);
    double t = 1.0;
    bool accepted = false;
    Vector candidate(k);
    Vector eta_c(y.size());
    double f_c = f;
    while (t > 1e-12) {
      candidate = v + t * step;
      eta_c = design * candidate;
      f_c = negloglik_eta(family, y, eta_c);
      if (std::isfinite(f_c) && f_c <= f + 1e-4 * t * slope + 16.0 * kEps * std::abs(f)) {
        accepted = true;
        break;
      }
      t *= cfg.line_search_shrink;
    }
    if (!accepted) return std::nullopt;
    v = std::move(candidate);
    eta = std::move(eta_c);
    f = f_c;
    if (v.lpNorm<Eigen::Infinity>() > cfg.divergence_cap) return std::nullopt;
  }
  return std::nullopt;
}

Vector glm_start(const Matrix& design, const Vector& y, const GlmFamily& family) {
  if (design.cols() == 0) return Vector(0);
  Vector eta(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    double mu = y[i];
    switch (family.kind()) {
      case FamilyKind::Gaussian: break;
      case FamilyKind::Poisson: mu = y[i] + 0.1; break;
      case FamilyKind::Bernoulli:
      case FamilyKind::BinomialScaled: mu = (y[i] + 0.5) / 2.0; break;
    }
    eta[i] = family.link(mu);
  }
  ColumnProjector proj(design);
  if (!proj.full_column_rank()) return Vector::Zero(design.cols());
  return proj.coefficients(eta);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(conv_tol > 0.0)) throw InputError("conv_tol must be positive");
  if (max_iter < 1 || max_outer < 1) throw InputError("iteration limits must be >= 1");
  if (!(z_tol > 0.0)) throw InputError("z_tol must be positive");
  if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0))
    throw InputError("line_search_shrink must lie in (0, 1)");
}

SolverConfig default_config(const GlmFamily& family) {
  return family.kind() == FamilyKind::Gaussian ? SolverConfig::gaussian()
                                               : SolverConfig::glm();
}

constexpr int kDirectEvery = 25;

int coordinate_descent(const Matrix& x, const Vector& col_sq, double lambda,
                       double tol, int max_sweeps, Vector& beta, Vector& resid,
                       double& kkt) {
  const Index p = x.cols();
  const Vector col_norm = col_sq.cwiseSqrt();
  const double xmax = p > 0 ? col_norm.maxCoeff() : 0.0;
  int sweeps = 0;

  auto update = [&](Index j) -> double {
    if (col_sq[j] == 0.0) return 0.0;
    const double old = beta[j];
    const double z = x.col(j).dot(resid) + col_sq[j] * old;
    const double next = soft_threshold(z, lambda) / col_sq[j];
    if (next == old) return 0.0;
    resid.noalias() -= (next - old) * x.col(j);
    beta[j] = next;
    return std::abs(next - old) * col_norm[j];
  };

  // Cyclic updates crawl when the active columns are nearly collinear. Every
  // so often the exact minimizer on the current sign face,
  // X_A^T X_A b = X_A^T (r + X_A beta_A) - lambda s, is tried instead. When
  // a coordinate would change sign the step stops where it reaches zero, the
  // coordinate leaves A and the solve is repeated. Every step lowers the
  // objective; the outer loop re-checks stationarity over all coordinates.
  auto direct_solve = [&](std::vector<Index> active) {
    bool moved = false;
    while (!active.empty() && static_cast<Index>(active.size()) < x.rows()) {
      const Index k = static_cast<Index>(active.size());
      Matrix xa(x.rows(), k);
      Vector sign(k), old(k);
      for (Index a = 0; a < k; ++a) {
        xa.col(a) = x.col(active[a]);
        old[a] = beta[active[a]];
        sign[a] = old[a] > 0.0 ? 1.0 : -1.0;
      }
      const Vector fitted = resid + xa * old;
      Eigen::LDLT<Matrix> ldlt(xa.transpose() * xa);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return moved;
      const Vector cand = ldlt.solve(xa.transpose() * fitted - lambda * sign);
      if (!cand.allFinite()) return moved;
      double t = 1.0;
      for (Index a = 0; a < k; ++a)
        if (cand[a] * sign[a] <= 0.0) t = std::min(t, old[a] / (old[a] - cand[a]));
      Vector next = old + t * (cand - old);
      std::vector<Index> keep;
      for (Index a = 0; a < k; ++a) {
        if (t < 1.0 && (cand[a] * sign[a] <= 0.0) && old[a] / (old[a] - cand[a]) <= t) next[a] = 0.0;
        beta[active[a]] = next[a];
        if (next[a] != 0.0) keep.push_back(active[a]);
      }
      resid = fitted - xa * next;
      moved = true;
      if (t >= 1.0) return true;
      active = std::move(keep);
    }
    return moved;
  };

  std::vector<Index> active;
  for (;;) {
    const Vector grad = x.transpose() * resid;
    kkt = l1_stationarity_residual(grad, beta, lambda);
    if (kkt <= tol || sweeps >= max_sweeps) return sweeps;

    // Full sweep, then iterate on the nonzero set until the accumulated
    // movement can no longer change any gradient entry by more than tol/2.
    for (Index j = 0; j < p; ++j) update(j);
    ++sweeps;
    active.clear();
    for (Index j = 0; j < p; ++j)
      if (beta[j] != 0.0) active.push_back(j);
    int inner = 0;
    while (sweeps < max_sweeps) {
      double moved = 0.0;
      for (Index j : active) moved += update(j);
      ++sweeps;
      if (moved * xmax <= 0.5 * tol) break;
      if (++inner % kDirectEvery == 0) {
        // Recompute the nonzero set: coordinates may have left it.
        std::vector<Index> nz;
        for (Index j : active)
          if (beta[j] != 0.0) nz.push_back(j);
        if (direct_solve(nz)) break;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Gaussian lasso

LassoSolver::LassoSolver(const ProblemInstance& instance, SolverConfig cfg)
    : cfg_(cfg), x0_(instance.x0), x_(instance.x), y_(instance.y) {
  cfg_.validate();
  if (x_.rows() != y_.size()) throw InputError("X and y disagree on the number of rows");
  if (x0_.cols() > 0 && x0_.rows() != y_.size())
    throw InputError("X0 and y disagree on the number of rows");
  if (x0_.cols() == 0) x0_ = Matrix(y_.size(), 0);
  projector_ = ColumnProjector(x0_);
  if (!projector_.full_column_rank())
    throw InputError("unpenalized block X0 must have full column rank");
  xt_ = projector_.residual(x_);
  yt_ = projector_.residual(y_);
  scale_ = Vector::Ones(x_.cols());
  if (cfg_.standardize) {
    const double n = static_cast<double>(y_.size());
    for (Index j = 0; j < xt_.cols(); ++j) {
      const double s = xt_.col(j).norm() / std::sqrt(n);
      if (s > 0.0) {
        scale_[j] = s;
        xt_.col(j) /= s;
      }
    }
  }
  col_sq_ = xt_.colwise().squaredNorm().transpose();
  reset();
}

void LassoSolver::reset() {
  beta_ = Vector::Zero(xt_.cols());
  resid_ = yt_;
}

void LassoSolver::set_tolerance_scale(double scale) {
  tol_scale_ = std::clamp(scale, std::numeric_limits<double>::min(), 1.0);
}

double LassoSolver::lambda_max() const {
  if (xt_.cols() == 0) return 0.0;
  return (xt_.transpose() * yt_).lpNorm<Eigen::Infinity>();
}

SparseFit LassoSolver::fit(double lambda) {
  return fit_to(lambda, effective_tol(tol_scale_ * cfg_.conv_tol, col_sq_, yt_));
}

SparseFit LassoSolver::fit_to(double lambda, double tol) {
  if (!(lambda >= 0.0)) throw InputError("lambda must be nonnegative");
  double kkt = 0.0;
  const int sweeps = coordinate_descent(xt_, col_sq_, lambda, tol, cfg_.max_iter,
                                        beta_, resid_, kkt);
  // Refresh the residual to shed drift accumulated by incremental updates.
  resid_ = yt_ - xt_ * beta_;
  return assemble(lambda, sweeps, kkt, tol);
}

SparseFit LassoSolver::assemble(double lambda, int sweeps, double kkt, double tol) const {
  SparseFit out;
  out.lambda = lambda;
  out.beta = beta_.cwiseQuotient(scale_);
  out.beta0 = projector_.coefficients(y_ - x_ * out.beta);
  out.support = support_of(out.beta, cfg_.z_tol);
  out.kkt_residual = kkt;
  out.iterations = sweeps;
  out.status = kkt <= tol ? FitStatus::Converged : FitStatus::MaxIterations;
  return out;
}

std::vector<SparseFit> LassoSolver::path(const std::vector<double>& lambdas,
                                         PathOptions opts) {
  std::vector<SparseFit> fits;
  fits.reserve(lambdas.size());
  const double total = yt_.squaredNorm();
  const Index saturation = y_.size() - x0_.cols();
  for (double lambda : lambdas) {
    fits.push_back(fit(lambda));
    if (total > 0.0 && 1.0 - resid_.squaredNorm() / total > opts.max_r2) break;
    if (opts.stop_at_saturation &&
        static_cast<Index>(fits.back().support.size()) >= saturation)
      break;
  }
  return fits;
}

SparseFit lasso_fit(const ProblemInstance& instance, double lambda,
                    const SolverConfig& cfg) {
  if (instance.family.kind() != FamilyKind::Gaussian)
    throw InputError("lasso_fit expects a Gaussian instance");
  LassoSolver solver(instance, cfg);
  return solver.fit(lambda);
}

double lasso_objective(const ProblemInstance& instance, const Vector& beta0,
                       const Vector& beta, double lambda) {
  const Vector r = instance.y - linear_predictor(instance, beta0, beta);
  return 0.5 * r.squaredNorm() + lambda * beta.lpNorm<1>();
}

// ---------------------------------------------------------------------------
// Square-root lasso

SparseFit sqrt_lasso_fit(const ProblemInstance& instance, double lambda,
                         const SolverConfig& cfg) {
  if (instance.family.kind() != FamilyKind::Gaussian)
    throw InputError("sqrt_lasso_fit expects a Gaussian instance");
  if (!(lambda >= 0.0)) throw InputError("lambda must be nonnegative");
  LassoSolver solver(instance, cfg);
  const double base = solver.projected_response().norm();
  const double collapse = 1e-10 * std::max(1.0, base);

  auto finish = [&](SparseFit fit, int outer, FitStatus status) {
    fit.lambda = lambda;
    fit.iterations = outer;
    fit.status = status;
    const Vector r = instance.y - linear_predictor(instance, fit.beta0, fit.beta);
    const double rn = r.norm();
    if (rn > 0.0) {
      const Vector g = instance.x.transpose() * r / rn;
      fit.kkt_residual = l1_stationarity_residual(g, fit.beta, lambda);
    }
    return fit;
  };

  if (base < collapse) {
    SparseFit fit = solver.fit(0.0);
    return finish(fit, 0, FitStatus::Interpolating);
  }

  double sigma = base;
  SparseFit fit = solver.fit(lambda * sigma);
  constexpr int kMaxFixedPoint = 10000;
  for (int outer = 1; outer <= kMaxFixedPoint; ++outer) {
    // beta0 is the least-squares coefficient, so this equals the projected residual.
    const double next =
        (instance.y - linear_predictor(instance, fit.beta0, fit.beta)).norm();
    if (next < collapse) return finish(fit, outer, FitStatus::Interpolating);
    if (std::abs(next - sigma) <= 1e-8 * sigma) {
      const FitStatus st = fit.converged() ? FitStatus::Converged : FitStatus::MaxIterations;
      return finish(fit, outer, st);
    }
    sigma = next;
    // The inner gradient is compared with lambda * sigma, so its tolerance
    // shrinks with the residual norm.
    solver.set_tolerance_scale(sigma / base);
    fit = solver.fit(lambda * sigma);
  }
  return finish(fit, kMaxFixedPoint, FitStatus::MaxIterations);
}

double sqrt_lasso_objective(const ProblemInstance& instance, const Vector& beta0,
                            const Vector& beta, double lambda) {
  const Vector r = instance.y - linear_predictor(instance, beta0, beta);
  return r.norm() + lambda * beta.lpNorm<1>();
}

// ---------------------------------------------------------------------------
// GLM

double glm_negloglik(const ProblemInstance& instance, const Vector& beta0,
                     const Vector& beta) {
  return negloglik_eta(instance.family, instance.y,
                       linear_predictor(instance, beta0, beta));
}

std::optional<Vector> null_mle(const ProblemInstance& instance, const SolverConfig& cfg) {
  const Index p0 = instance.p0();
  if (p0 == 0) return Vector(0);
  const GlmFamily& fam = instance.family;
  if (fam.kind() == FamilyKind::Gaussian) {
    ColumnProjector proj(instance.x0);
    if (!proj.full_column_rank())
      throw InputError("unpenalized block X0 must have full column rank");
    return proj.coefficients(instance.y);
  }
  if (const double c = constant_column(instance.x0); c != 0.0) {
    const double ybar = instance.y.mean();
    const bool interior = fam.kind() == FamilyKind::Poisson ? ybar > 0.0
                                                            : (ybar > 0.0 && ybar < 1.0);
    if (!interior) return std::nullopt;
    return Vector::Constant(1, fam.link(ybar) / c);
  }
  if (numerical_rank(instance.x0) < p0)
    throw InputError("unpenalized block X0 must have full column rank");
  return newton_mle(instance.x0, instance.y, fam, cfg,
                    glm_start(instance.x0, instance.y, fam));
}

SparseFit mle_refit(const ProblemInstance& instance, const IndexSet& support,
                    const SolverConfig& cfg) {
  const Index p0 = instance.p0();
  const Index k = static_cast<Index>(support.size());
  if (p0 + k > instance.n())
    throw RankDeficiencyError("refit has more coefficients than observations");
  Matrix design(instance.n(), p0 + k);
  if (p0 > 0) design.leftCols(p0) = instance.x0;
  for (Index j = 0; j < k; ++j) design.col(p0 + j) = instance.x.col(support[j]);
  if (design.cols() > 0 && numerical_rank(design) < design.cols())
    throw RankDeficiencyError("selected columns are rank deficient");

  Vector coef;
  if (instance.family.kind() == FamilyKind::Gaussian) {
    coef = ColumnProjector(design).coefficients(instance.y);
  } else {
    auto solved = newton_mle(design, instance.y, instance.family, cfg,
                             glm_start(design, instance.y, instance.family));
    if (!solved) throw NonExistenceError("maximum likelihood estimate does not exist");
    coef = *solved;
  }

  SparseFit out;
  out.beta0 = coef.head(p0);
  out.beta = Vector::Zero(instance.p());
  for (Index j = 0; j < k; ++j) out.beta[support[j]] = coef[p0 + j];
  out.lambda = 0.0;
  out.support = support_of(out.beta, cfg.z_tol);
  const Vector eta = linear_predictor(instance, out.beta0, out.beta);
  const Vector mu = family_mean(instance.family, eta);
  out.kkt_residual = design.cols() > 0
                         ? (design.transpose() * (instance.y - mu)).lpNorm<Eigen::Infinity>()
                         : 0.0;
  return out;
}

SparseFit glm_lasso_fit(const ProblemInstance& instance, double lambda,
                        const SolverConfig& cfg, const SparseFit* warm_start) {
  cfg.validate();
  if (!(lambda >= 0.0)) throw InputError("lambda must be nonnegative");
  const GlmFamily& fam = instance.family;
  const Index n = instance.n(), p0 = instance.p0(), p = instance.p();
  const Matrix x0 = p0 > 0 ? instance.x0 : Matrix(n, 0);

  Vector beta0, beta;
  if (warm_start && warm_start->beta.size() == p && warm_start->beta0.size() == p0) {
    beta0 = warm_start->beta0;
    beta = warm_start->beta;
  } else {
    auto v = null_mle(instance, cfg);
    if (!v)
      throw NonExistenceError(
          "constrained null MLE does not exist; the penalized problem has no solution");
    beta0 = *v;
    beta = Vector::Zero(p);
  }

  Vector eta = linear_predictor(instance, beta0, beta);
  double objective = negloglik_eta(fam, instance.y, eta) + lambda * beta.lpNorm<1>();
  double kkt = std::numeric_limits<double>::infinity();
  int sweeps_total = 0;
  int outer = 0;
  FitStatus status = FitStatus::MaxIterations;

  for (;;) {
    Vector mu(n), w(n);
    for (Index i = 0; i < n; ++i) {
      mu[i] = fam.mean(eta[i]);
      w[i] = fam.variance(eta[i]);
    }
    const Vector r = instance.y - mu;
    const Vector g = instance.x.transpose() * r;
    const Vector g0 = x0.transpose() * r;
    kkt = std::max(p0 > 0 ? g0.lpNorm<Eigen::Infinity>() : 0.0,
                   l1_stationarity_residual(g, beta, lambda));
    if (kkt <= cfg.conv_tol) {
      status = FitStatus::Converged;
      break;
    }
    if (outer >= cfg.max_outer) break;
    ++outer;

    // Quadratic model around eta, written as weighted least squares on the
    // working response z = eta + (y - mu)/w.
    const double wmax = w.maxCoeff();
    if (!(wmax > 0.0)) throw NonExistenceError("GLM weights vanished; iterates diverged");
    const Vector wf = w.cwiseMax(1e-12 * wmax);
    const Vector sw = wf.cwiseSqrt();
    const Vector zw = sw.cwiseProduct(eta) + r.cwiseQuotient(sw);
    const Matrix xw = sw.asDiagonal() * instance.x;
    const Matrix x0w = sw.asDiagonal() * x0;
    const ColumnProjector proj(x0w);
    if (!proj.full_column_rank())
      throw InputError("unpenalized block X0 must have full column rank");
    const Matrix xt = proj.residual(xw);
    const Vector zt = proj.residual(zw);
    const Vector col_sq = xt.colwise().squaredNorm().transpose();

    Vector b = beta;
    Vector resid = zt - xt * b;
    const double inner_tol = std::max(0.01 * cfg.conv_tol, std::min(0.1 * kkt, 1.0));
    double inner_kkt = 0.0;
    sweeps_total += coordinate_descent(xt, col_sq, lambda, inner_tol, cfg.max_iter,
                                       b, resid, inner_kkt);
    const Vector b0 = proj.coefficients(zw - xw * b);

    const Vector d = b - beta;
    const Vector d0 = b0 - beta0;
    const double decrease = -g.dot(d) - (p0 > 0 ? g0.dot(d0) : 0.0) +
                            lambda * (b.lpNorm<1>() - beta.lpNorm<1>());
    double t = 1.0;
    bool accepted = false;
    Vector cand, cand0, eta_c;
    double obj_c = objective;
    while (t > 1e-10) {
      cand = beta + t * d;
      cand0 = beta0 + t * d0;
      eta_c = linear_predictor(instance, cand0, cand);
      obj_c = negloglik_eta(fam, instance.y, eta_c) + lambda * cand.lpNorm<1>();
      if (std::isfinite(obj_c) &&
          obj_c <= objective + 1e-4 * t * std::min(decrease, 0.0) +
                       16.0 * kEps * std::abs(objective)) {
        accepted = true;
        break;
      }
      t *= cfg.line_search_shrink;
    }
    if (!accepted) break;
    beta = std::move(cand);
    beta0 = std::move(cand0);
    eta = std::move(eta_c);
    objective = obj_c;
    const double size = std::max(beta.size() ? beta.lpNorm<Eigen::Infinity>() : 0.0,
                                 beta0.size() ? beta0.lpNorm<Eigen::Infinity>() : 0.0);
    if (size > cfg.divergence_cap)
      throw NonExistenceError("GLM lasso iterates diverged");
  }

  SparseFit out;
  out.beta0 = beta0;
  out.beta = beta;
  out.lambda = lambda;
  out.support = support_of(beta, cfg.z_tol);
  out.kkt_residual = kkt;
  out.iterations = outer;
  out.status = status;
  (void)sweeps_total;
  return out;
}

std::vector<SparseFit> glm_lasso_path(const ProblemInstance& instance,
                                      const std::vector<double>& lambdas,
                                      const SolverConfig& cfg, double max_dev_ratio) {
  std::vector<SparseFit> fits;
  auto v = null_mle(instance, cfg);
  if (!v) throw NonExistenceError("constrained null MLE does not exist");
  const Vector zero = Vector::Zero(instance.p());
  const double null_dev = glm_negloglik(instance, *v, zero);
  // Saturated log-likelihood term for the deviance ratio.
  double saturated = 0.0;
  for (Index i = 0; i < instance.n(); ++i) {
    const double yi = instance.y[i];
    switch (instance.family.kind()) {
      case FamilyKind::Gaussian: saturated += -0.5 * yi * yi; break;
      case FamilyKind::Poisson: saturated += yi > 0 ? yi - yi * std::log(yi) : 0.0; break;
      case FamilyKind::Bernoulli:
      case FamilyKind::BinomialScaled:
        if (yi > 0.0 && yi < 1.0)
          saturated += -(yi * std::log(yi) + (1 - yi) * std::log(1 - yi));
        break;
    }
  }
  const double null_gap = null_dev - saturated;
  const SparseFit* warm = nullptr;
  for (double lambda : lambdas) {
    try {
      fits.push_back(glm_lasso_fit(instance, lambda, cfg, warm));
    } catch (const NonExistenceError&) {
      break;
    }
    warm = &fits.back();
    if (!fits.back().converged()) break;
    const double dev = glm_negloglik(instance, fits.back().beta0, fits.back().beta);
    if (null_gap > 0.0 && 1.0 - (dev - saturated) / null_gap > max_dev_ratio) break;
  }
  return fits;
}

}  // namespace qut
