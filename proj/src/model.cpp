#include "qut/model.hpp"

#include <cmath>
#include <limits>

namespace qut {

GlmFamily GlmFamily::binomial(int trials) {
  if (trials < 1) throw InputError("binomial family needs at least one trial");
  return GlmFamily(trials == 1 ? FamilyKind::Bernoulli : FamilyKind::BinomialScaled,
                   trials);
}

std::string GlmFamily::name() const {
  switch (kind_) {
    case FamilyKind::Gaussian: return "gaussian";
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::BinomialScaled: return "binomial(" + std::to_string(trials_) + ")";
    case FamilyKind::Poisson: return "poisson";
  }
  return "unknown";
}

bool GlmFamily::in_domain(double theta) const { return std::isfinite(theta); }

double GlmFamily::cumulant(double theta) const {
  switch (kind_) {
    case FamilyKind::Gaussian: return 0.5 * theta * theta;
    case FamilyKind::Poisson: return std::exp(theta);
    case FamilyKind::Bernoulli:
    case FamilyKind::BinomialScaled:
      // log(1 + e^theta) without overflow
      return theta > 0.0 ? theta + std::log1p(std::exp(-theta))
                         : std::log1p(std::exp(theta));
  }
  return 0.0;
}

double GlmFamily::mean(double theta) const {
  switch (kind_) {
    case FamilyKind::Gaussian: return theta;
    case FamilyKind::Poisson: return std::exp(theta);
    case FamilyKind::Bernoulli:
    case FamilyKind::BinomialScaled:
      if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
      {
        const double e = std::exp(theta);
        return e / (1.0 + e);
      }
  }
  return 0.0;
}

double GlmFamily::variance(double theta) const {
  switch (kind_) {
    case FamilyKind::Gaussian: return 1.0;
    case FamilyKind::Poisson: return std::exp(theta);
    case FamilyKind::Bernoulli:
    case FamilyKind::BinomialScaled: {
      const double mu = mean(theta);
      return mu * (1.0 - mu);
    }
  }
  return 0.0;
}

double GlmFamily::link(double mu) const {
  switch (kind_) {
    case FamilyKind::Gaussian: return mu;
    case FamilyKind::Poisson: return std::log(mu);
    case FamilyKind::Bernoulli:
    case FamilyKind::BinomialScaled: return std::log(mu / (1.0 - mu));
  }
  return 0.0;
}

bool GlmFamily::valid_response(double y) const {
  if (!std::isfinite(y)) return false;
  switch (kind_) {
    case FamilyKind::Gaussian: return true;
    case FamilyKind::Poisson: return y >= 0.0 && y == std::floor(y);
    case FamilyKind::Bernoulli: return y == 0.0 || y == 1.0;
    case FamilyKind::BinomialScaled: {
      if (y < 0.0 || y > 1.0) return false;
      const double k = y * trials_;
      return std::abs(k - std::round(k)) <= 1e-9 * trials_;
    }
  }
  return false;
}

void ProblemInstance::validate() const {
  const Index rows = y.size();
  if (rows < 1) throw InputError("instance needs at least one observation");
  if (x.rows() != rows) throw InputError("X and y disagree on the number of rows");
  if (x0.cols() > 0 && x0.rows() != rows)
    throw InputError("X0 and y disagree on the number of rows");
  if (!x.allFinite() || !x0.allFinite() || !y.allFinite())
    throw InputError("instance contains non-finite values");
  for (Index i = 0; i < rows; ++i)
    if (!family.valid_response(y[i]))
      throw InputError("response value " + std::to_string(y[i]) +
                       " is not admissible for the " + family.name() + " family");
  if (sigma && !(*sigma > 0.0)) throw InputError("sigma must be positive");
}

ProblemInstance with_intercept(Matrix x, Vector y, GlmFamily family) {
  ProblemInstance inst;
  inst.x0 = Matrix::Ones(y.size(), 1);
  inst.x = std::move(x);
  inst.y = std::move(y);
  inst.family = family;
  return inst;
}

ProblemInstance without_intercept(Matrix x, Vector y, GlmFamily family) {
  ProblemInstance inst;
  inst.x0 = Matrix(y.size(), 0);
  inst.x = std::move(x);
  inst.y = std::move(y);
  inst.family = family;
  return inst;
}

bool ThresholdResult::quantile_infinite() const { return std::isinf(lambda_qut); }

Vector family_mean(const GlmFamily& family, const Vector& theta) {
  Vector mu(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    if (!family.in_domain(theta[i]))
      throw DomainError("natural parameter outside the family's domain");
    mu[i] = family.mean(theta[i]);
  }
  return mu;
}

IndexSet support_of(const Vector& beta, double z_tol) {
  if (!(z_tol > 0.0)) throw InputError("support tolerance must be positive");
  IndexSet s;
  for (Index p = 0; p < beta.size(); ++p)
    if (std::abs(beta[p]) > z_tol) s.push_back(p);
  return s;
}

Matrix select_columns(const Matrix& x, const IndexSet& cols) {
  Matrix out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(j) = x.col(cols[j]);
  return out;
}

Matrix select_rows(const Matrix& x, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = x.row(rows[i]);
  return out;
}

Vector select_rows(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

ProblemInstance subset_rows(const ProblemInstance& instance,
                            const std::vector<Index>& rows) {
  ProblemInstance out;
  out.x0 = instance.p0() > 0 ? select_rows(instance.x0, rows)
                             : Matrix(static_cast<Index>(rows.size()), 0);
  out.x = select_rows(instance.x, rows);
  out.y = select_rows(instance.y, rows);
  out.family = instance.family;
  out.sigma = instance.sigma;
  return out;
}

}  // namespace qut
