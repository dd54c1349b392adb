#include <vector>

#include "qut/solvers.hpp"

namespace qut {

// Condat's direct algorithm. The dual variable u runs along the sequence and
// a new segment starts whenever the running bounds [vmin, vmax] on the
// segment value can no longer keep |u| <= lambda; this is the taut string
// traced left to right.
Vector tv1d_fit(const Vector& y, double lambda) {
  if (lambda < 0.0) throw InputError("total-variation weight must be nonnegative");
  const Index n = y.size();
  Vector out(n);
  if (n == 0) return out;
  if (n == 1 || lambda == 0.0) return y;

  Index k = 0, k0 = 0;
  Index kplus = 0, kminus = 0;
  double umin = lambda, umax = -lambda;
  double vmin = y[0] - lambda, vmax = y[0] + lambda;
  const double twolambda = 2.0 * lambda;

  for (;;) {
    while (k == n - 1) {
      if (umin < 0.0) {
        do out[k0++] = vmin; while (k0 <= kminus);
        k = kminus = k0;
        vmin = y[k];
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {
        do out[k0++] = vmax; while (k0 <= kplus);
        k = kplus = k0;
        vmax = y[k];
        umax = -lambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        do out[k0++] = vmin; while (k0 <= k);
        return out;
      }
    }
    if ((umin += y[k + 1] - vmin) < -lambda) {
      do out[k0++] = vmin; while (k0 <= kminus);
      k = kminus = kplus = k0;
      vmin = y[k];
      vmax = vmin + twolambda;
      umin = lambda;
      umax = -lambda;
    } else if ((umax += y[k + 1] - vmax) > lambda) {
      do out[k0++] = vmax; while (k0 <= kplus);
      k = kminus = kplus = k0;
      vmax = y[k];
      vmin = vmax - twolambda;
      umin = lambda;
      umax = -lambda;
    } else {
      ++k;
      if (umin >= lambda) {
        kminus = k;
        vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
        umin = lambda;
      }
      if (umax <= -lambda) {
        kplus = k;
        vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
        umax = -lambda;
      }
    }
  }
}

Matrix svd_soft_threshold(const Matrix& y, double lambda) {
  if (lambda < 0.0) throw InputError("singular-value threshold must be nonnegative");
  if (!y.allFinite()) throw InputError("matrix contains non-finite entries");
  if (y.size() == 0) return y;
  Eigen::BDCSVD<Matrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw std::runtime_error("SVD failed");
  const Vector d = (svd.singularValues().array() - lambda).max(0.0).matrix();
  return svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace qut
