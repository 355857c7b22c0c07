#pragma once

#include <functional>

#include "tsmc/common.hpp"

namespace tsmc {

/// Central finite differences with per-coordinate step h = 1e-6 (1 + |x_j|),
/// the validation oracle behind the check-gradients command.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    probe[j] = x[j] + h;
    const double fp = f(probe);
    probe[j] = x[j] - h;
    const double fm = f(probe);
    probe[j] = x[j];
    grad[j] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    probe[j] = x[j] + h;
    const Vector fp = f(probe);
    probe[j] = x[j] - h;
    const Vector fm = f(probe);
    probe[j] = x[j];
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// Max-norm error scaled by the reference magnitude, floored at 1 so a
/// near-zero reference degrades to an absolute criterion.
inline double fd_relative_error(const Matrix& approx, const Matrix& reference) {
  const double scale = std::max(1.0, reference.cwiseAbs().maxCoeff());
  return (approx - reference).cwiseAbs().maxCoeff() / scale;
}

}  // namespace tsmc
