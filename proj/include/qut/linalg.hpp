#pragma once

#include "qut/model.hpp"

namespace qut {

/// Orthogonal projection onto the column space of a matrix, built from a
/// column-pivoted Householder QR. A matrix with zero columns projects onto {0}.
class ColumnProjector {
 public:
  ColumnProjector() = default;
  explicit ColumnProjector(const Matrix& a);

  Index rank() const { return basis_.cols(); }
  Index cols() const { return cols_; }
  bool full_column_rank() const { return rank() == cols_; }

  Vector project(const Vector& v) const;
  /// (I - P) v
  Vector residual(const Vector& v) const;
  /// (I - P) M, column by column.
  Matrix residual(const Matrix& m) const;

  /// Least-squares coefficients of v on the columns; requires full column rank.
  Vector coefficients(const Vector& v) const;

 private:
  Matrix basis_;  // orthonormal basis of the range, N x rank
  Eigen::ColPivHouseholderQR<Matrix> qr_;
  Index cols_ = 0;
};

/// Numerical rank via column-pivoted QR.
Index numerical_rank(const Matrix& a);

/// ||X^T X - I||_max <= tol
bool is_orthonormal(const Matrix& x, double tol = 1e-8);

/// max_p dist(g_p, lambda * subdifferential of |beta_p|)
double l1_stationarity_residual(const Vector& gradient, const Vector& beta,
                                double lambda);

}  // namespace qut
