#include "qut/zerothresh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "qut/solvers.hpp"

namespace qut {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

bool is_identity(const Matrix& x) {
  if (x.rows() != x.cols()) return false;
  return (x - Matrix::Identity(x.rows(), x.cols())).cwiseAbs().maxCoeff() <= 1e-12;
}

void check_groups(const std::vector<IndexSet>& groups, Index p) {
  std::vector<int> seen(static_cast<std::size_t>(p), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw InputError("groups must be nonempty");
    for (Index j : g) {
      if (j < 0 || j >= p) throw InputError("group index out of range");
      if (seen[static_cast<std::size_t>(j)]++) throw InputError("groups overlap");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw InputError("groups do not cover every column");
}

double max_group_norm(const Vector& g, const std::vector<IndexSet>& groups) {
  double best = 0.0;
  for (const auto& grp : groups) {
    double s = 0.0;
    for (Index j : grp) s += g[j] * g[j];
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

double inf_norm(const Vector& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

std::string penalty_name(const PenaltySpec& penalty) {
  return std::visit(
      overloaded{
          [](const penalty::Lasso&) { return std::string("lasso"); },
          [](const penalty::AdaptiveLasso&) { return std::string("adaptive-lasso"); },
          [](const penalty::LadLasso&) { return std::string("lad-lasso"); },
          [](const penalty::SqrtLasso&) { return std::string("sqrt-lasso"); },
          [](const penalty::GroupLasso&) { return std::string("group-lasso"); },
          [](const penalty::GroupSqrtLasso&) { return std::string("group-sqrt-lasso"); },
          [](const penalty::GeneralizedLasso&) { return std::string("generalized-lasso"); },
          [](const penalty::TotalVariation1D&) { return std::string("tv1d"); },
          [](const penalty::BestSubset&) { return std::string("best-subset"); },
          [](const penalty::SubbotinOrthonormal&) { return std::string("subbotin"); },
          [](const penalty::ElasticNet&) { return std::string("elastic-net"); },
          [](const penalty::FusedLassoOrthonormal&) { return std::string("fused-lasso"); },
          [](const penalty::LowRankTrace&) { return std::string("low-rank"); },
          [](const penalty::DensityTV&) { return std::string("density-tv"); },
      },
      penalty);
}

Matrix first_difference(Index n) {
  if (n < 2) throw InputError("first differences need at least two points");
  Matrix b = Matrix::Zero(n - 1, n);
  for (Index k = 0; k + 1 < n; ++k) {
    b(k, k) = -1.0;
    b(k, k + 1) = 1.0;
  }
  return b;
}

double lambda0_tv1d(const Vector& y) {
  if (y.size() < 2) throw InputError("total variation needs at least two points");
  // (B B^T)^{-1} B y is the partial sum of the centred data, up to sign.
  const double mean = y.mean();
  double partial = 0.0, best = 0.0;
  for (Index k = 0; k + 1 < y.size(); ++k) {
    partial += y[k] - mean;
    best = std::max(best, std::abs(partial));
  }
  return best;
}

double lambda0_lowrank(const Matrix& y) {
  if (y.size() == 0) return 0.0;
  if (!y.allFinite()) throw InputError("matrix contains non-finite values");
  Eigen::BDCSVD<Matrix> svd(y);
  return svd.singularValues()[0];
}

double lambda0_density(const Vector& y) {
  const Index n = y.size();
  if (n < 2) throw InputError("density estimation needs at least two observations");
  std::vector<double> s(y.data(), y.data() + n);
  std::sort(s.begin(), s.end());
  std::vector<double> a(static_cast<std::size_t>(n));
  a[0] = (s[1] - s[0]) / 2.0;
  a[n - 1] = (s[n - 1] - s[n - 2]) / 2.0;
  for (Index i = 1; i + 1 < n; ++i) a[i] = (s[i + 1] - s[i - 1]) / 2.0;
  double total = 0.0;
  for (double v : a) total += v;
  double partial = 0.0, best = 0.0;
  for (Index k = 1; k < n; ++k) {
    partial += a[k - 1];
    best = std::max(best, std::abs(static_cast<double>(n) * partial -
                                   static_cast<double>(k) * total));
  }
  return best;
}

ZeroThreshold::ZeroThreshold(const Matrix& x0, const Matrix& x, PenaltySpec penalty)
    : penalty_(std::move(penalty)), n_(x.rows()), x_(x) {
  has_x0_ = x0.cols() > 0;
  if (has_x0_ && x0.rows() != n_) throw InputError("X0 and X disagree on the number of rows");
  const Index p = x.cols();

  const bool projects =
      std::holds_alternative<penalty::Lasso>(penalty_) ||
      std::holds_alternative<penalty::AdaptiveLasso>(penalty_) ||
      std::holds_alternative<penalty::SqrtLasso>(penalty_) ||
      std::holds_alternative<penalty::GroupLasso>(penalty_) ||
      std::holds_alternative<penalty::GroupSqrtLasso>(penalty_) ||
      std::holds_alternative<penalty::ElasticNet>(penalty_);
  if (has_x0_ && !projects)
    throw InputError("the " + penalty_name(penalty_) +
                     " zero-threshold is defined without unpenalized columns");
  if (has_x0_) {
    x0_proj_ = ColumnProjector(x0);
    if (!x0_proj_.full_column_rank())
      throw InputError("unpenalized block X0 must have full column rank");
    xt_ = x0_proj_.residual(x);
  } else {
    xt_ = x;
  }

  const bool denoising = std::holds_alternative<penalty::TotalVariation1D>(penalty_) ||
                         std::holds_alternative<penalty::LowRankTrace>(penalty_) ||
                         std::holds_alternative<penalty::DensityTV>(penalty_);
  if (denoising && p != 0 && !is_identity(x))
    throw InputError("the " + penalty_name(penalty_) + " branch requires X = I");

  std::visit(
      overloaded{
          [&](const penalty::AdaptiveLasso& a) {
            if (a.weights.size() != p) throw InputError("adaptive weights must have length P");
            if (!(a.weights.array() > 0.0).all() || !a.weights.allFinite())
              throw InputError("adaptive weights must be positive");
          },
          [&](const penalty::GroupLasso& g) { check_groups(g.groups, p); },
          [&](const penalty::GroupSqrtLasso& g) { check_groups(g.groups, p); },
          [&](const penalty::GeneralizedLasso& g) {
            const Matrix& b = g.b;
            if (b.cols() != p) throw InputError("B must have P columns");
            const Index k = b.rows();
            if (k == 0 || k > p) throw InputError("B must have between 1 and P rows");
            Eigen::ColPivHouseholderQR<Matrix> bqr(b);
            if (bqr.rank() < k) throw InputError("B must have full row rank");
            const auto& perm = bqr.colsPermutation().indices();
            IndexSet in(perm.data(), perm.data() + k);
            std::sort(in.begin(), in.end());
            IndexSet out;
            for (Index j = 0, c = 0; j < p; ++j) {
              if (c < k && in[c] == j) {
                ++c;
                continue;
              }
              out.push_back(j);
            }
            const Matrix b_in = select_columns(b, in);
            Eigen::PartialPivLU<Matrix> lu(b_in);
            const Matrix b_in_inv = lu.inverse();
            if (!b_in_inv.allFinite()) throw InputError("selected block of B is singular");
            const Matrix x_in = select_columns(x, in);
            a1_ = x_in * b_in_inv;
            const Matrix a2 = select_columns(x, out) - a1_ * select_columns(b, out);
            a2_proj_ = ColumnProjector(a2);
          },
          [&](const penalty::BestSubset&) {
            orthonormal_ = p <= n_ && is_orthonormal(x);
            if (!orthonormal_ && p > kBestSubsetMaxP)
              throw InputError("best-subset enumeration is limited to P <= 20");
          },
          [&](const penalty::SubbotinOrthonormal& s) {
            if (!(s.nu >= 0.0 && s.nu < 1.0)) throw InputError("Subbotin nu must lie in [0, 1)");
            if (!is_orthonormal(x)) throw InputError("Subbotin branch requires orthonormal X");
          },
          [&](const penalty::ElasticNet& e) {
            if (!(e.lambda2 >= 0.0)) throw InputError("lambda2 must be nonnegative");
          },
          [&](const penalty::FusedLassoOrthonormal& f) {
            if (!(f.lambda2 >= 0.0)) throw InputError("lambda2 must be nonnegative");
            if (!is_orthonormal(x)) throw InputError("fused-lasso branch requires orthonormal X");
          },
          [&](const penalty::LowRankTrace& l) {
            if (l.rows < 1 || n_ % l.rows != 0)
              throw InputError("low-rank rows must divide the response length");
          },
          [](const auto&) {},
      },
      penalty_);
}

double ZeroThreshold::best_subset(const Vector& y) const {
  if (orthonormal_) {
    const double m = inf_norm(x_.transpose() * y);
    return 0.5 * m * m;
  }
  const Index p = x_.cols();
  const Index r = numerical_rank(x_);
  std::vector<double> delta(static_cast<std::size_t>(r + 1), 0.0);
  const std::uint32_t limit = std::uint32_t{1} << p;
  for (std::uint32_t mask = 1; mask < limit; ++mask) {
    const Index size = std::popcount(mask);
    if (size > r) continue;
    IndexSet cols;
    for (Index j = 0; j < p; ++j)
      if (mask & (std::uint32_t{1} << j)) cols.push_back(j);
    const double fit = ColumnProjector(select_columns(x_, cols)).project(y).squaredNorm();
    delta[size] = std::max(delta[size], 0.5 * fit);
  }
  double best = 0.0;
  for (Index s = 1; s <= r; ++s) best = std::max(best, delta[s] / static_cast<double>(s));
  return best;
}

double ZeroThreshold::generalized(const Vector& y) const {
  return inf_norm(a1_.transpose() * a2_proj_.residual(y));
}

double ZeroThreshold::operator()(const Vector& y) const {
  if (y.size() != n_) throw InputError("response length does not match the design");
  return std::visit(
      overloaded{
          [&](const penalty::Lasso&) { return inf_norm(xt_.transpose() * y); },
          [&](const penalty::ElasticNet&) { return inf_norm(xt_.transpose() * y); },
          [&](const penalty::AdaptiveLasso& a) {
            return inf_norm(a.weights.cwiseProduct(xt_.transpose() * y));
          },
          [&](const penalty::LadLasso&) {
            const Vector s = y.unaryExpr([](double v) {
              return static_cast<double>((v > 0.0) - (v < 0.0));
            });
            return inf_norm(x_.transpose() * s);
          },
          [&](const penalty::SqrtLasso&) {
            const Vector yt = has_x0_ ? x0_proj_.residual(y) : y;
            const double denom = yt.norm();
            if (denom == 0.0) return 0.0;
            return inf_norm(xt_.transpose() * yt) / denom;
          },
          [&](const penalty::GroupLasso& g) {
            return max_group_norm(xt_.transpose() * y, g.groups);
          },
          [&](const penalty::GroupSqrtLasso& g) {
            const Vector yt = has_x0_ ? x0_proj_.residual(y) : y;
            const double denom = yt.norm();
            if (denom == 0.0) return 0.0;
            return max_group_norm(xt_.transpose() * yt, g.groups) / denom;
          },
          [&](const penalty::GeneralizedLasso&) { return generalized(y); },
          [&](const penalty::TotalVariation1D&) { return lambda0_tv1d(y); },
          [&](const penalty::BestSubset&) { return best_subset(y); },
          [&](const penalty::SubbotinOrthonormal& s) {
            const double m = inf_norm(x_.transpose() * y);
            return std::pow(m / (2.0 - s.nu), 2.0 - s.nu) /
                   std::pow(2.0 * (1.0 - s.nu), s.nu - 1.0);
          },
          [&](const penalty::FusedLassoOrthonormal& f) {
            const Vector z = x_.transpose() * y;
            if (z.size() < 2) return inf_norm(z);
            return inf_norm(tv1d_fit(z, f.lambda2));
          },
          [&](const penalty::LowRankTrace& l) {
            const Eigen::Map<const Matrix> m(y.data(), l.rows, n_ / l.rows);
            return lambda0_lowrank(m);
          },
          [&](const penalty::DensityTV&) { return lambda0_density(y); },
      },
      penalty_);
}

GlmZeroThreshold::GlmZeroThreshold(const Matrix& x0, const Matrix& x, GlmFamily family) {
  base_.x0 = x0.cols() > 0 ? x0 : Matrix(x.rows(), 0);
  base_.x = x;
  base_.family = family;
  if (base_.x0.rows() != x.rows()) throw InputError("X0 and X disagree on the number of rows");
  if (base_.x0.cols() > 0 && numerical_rank(base_.x0) < base_.x0.cols())
    throw InputError("unpenalized block X0 must have full column rank");
}

std::optional<Vector> GlmZeroThreshold::null_fit(const Vector& y) const {
  if (y.size() != base_.x.rows()) throw InputError("response length does not match the design");
  if (base_.x0.cols() == 0) return Vector(0);
  ProblemInstance null_inst;
  null_inst.x0 = base_.x0;
  null_inst.x = Matrix(y.size(), 0);
  null_inst.y = y;
  null_inst.family = base_.family;
  return null_mle(null_inst);
}

double GlmZeroThreshold::operator()(const Vector& y) const {
  const auto v = null_fit(y);
  if (!v) return kInf;
  Vector mu;
  if (base_.x0.cols() == 0)
    mu = Vector::Constant(y.size(), base_.family.mean(0.0));
  else
    mu = family_mean(base_.family, base_.x0 * *v);
  return inf_norm(base_.x.transpose() * (y - mu));
}

double lambda0_glm(const ProblemInstance& instance) {
  instance.validate();
  return GlmZeroThreshold(instance.x0, instance.x, instance.family)(instance.y);
}

bool membership_D(const ProblemInstance& instance) {
  for (Index i = 0; i < instance.n(); ++i)
    if (!instance.family.valid_response(instance.y[i])) return false;
  if (instance.family.kind() == FamilyKind::Gaussian || instance.p0() == 0) return true;
  ProblemInstance null_inst;
  null_inst.x0 = instance.x0;
  null_inst.x = Matrix(instance.n(), 0);
  null_inst.y = instance.y;
  null_inst.family = instance.family;
  return null_mle(null_inst).has_value();
}

double lambda0(const ProblemInstance& instance, const PenaltySpec& penalty) {
  if (instance.family.kind() != FamilyKind::Gaussian) {
    if (!std::holds_alternative<penalty::Lasso>(penalty))
      throw InputError("only the lasso branch is available for non-Gaussian families");
    return lambda0_glm(instance);
  }
  instance.validate();
  return ZeroThreshold(instance.x0, instance.x, penalty)(instance.y);
}

}  // namespace qut
