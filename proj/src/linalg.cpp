#include "qut/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace qut {

ColumnProjector::ColumnProjector(const Matrix& a) : cols_(a.cols()) {
  if (a.cols() == 0) {
    basis_ = Matrix(a.rows(), 0);
    return;
  }
  qr_.compute(a);
  const Index r = qr_.rank();
  const Matrix q = qr_.householderQ() * Matrix::Identity(a.rows(), r);
  basis_ = q;
}

Vector ColumnProjector::project(const Vector& v) const {
  if (basis_.cols() == 0) return Vector::Zero(v.size());
  return basis_ * (basis_.transpose() * v);
}

Vector ColumnProjector::residual(const Vector& v) const {
  if (basis_.cols() == 0) return v;
  return v - basis_ * (basis_.transpose() * v);
}

Matrix ColumnProjector::residual(const Matrix& m) const {
  if (basis_.cols() == 0) return m;
  return m - basis_ * (basis_.transpose() * m);
}

Vector ColumnProjector::coefficients(const Vector& v) const {
  if (cols_ == 0) return Vector(0);
  if (!full_column_rank())
    throw RankDeficiencyError("least-squares coefficients of a rank-deficient design");
  return qr_.solve(v);
}

Index numerical_rank(const Matrix& a) {
  if (a.cols() == 0 || a.rows() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  return qr.rank();
}

bool is_orthonormal(const Matrix& x, double tol) {
  if (x.cols() == 0) return true;
  const Matrix gram = x.transpose() * x;
  return (gram - Matrix::Identity(x.cols(), x.cols())).cwiseAbs().maxCoeff() <= tol;
}

double l1_stationarity_residual(const Vector& gradient, const Vector& beta,
                                double lambda) {
  double worst = 0.0;
  for (Index p = 0; p < beta.size(); ++p) {
    double d;
    if (beta[p] > 0.0) {
      d = std::abs(gradient[p] - lambda);
    } else if (beta[p] < 0.0) {
      d = std::abs(gradient[p] + lambda);
    } else {
      d = std::max(0.0, std::abs(gradient[p]) - lambda);
    }
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace qut
