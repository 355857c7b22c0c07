#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsmc/rollout.hpp"

namespace tsmc {

/// How raw controller outputs are mapped into the actuator range.
/// tanh_scaled keeps gradients alive near the limits; clip zeroes the
/// sensitivity of saturated coordinates.
enum class Squash { none, tanh_scaled, clip };

namespace detail {
inline double squash_value(Squash mode, double u_max, double z) {
  switch (mode) {
    case Squash::none: return z;
    case Squash::tanh_scaled: return u_max * std::tanh(z);
    case Squash::clip: return std::clamp(z, -u_max, u_max);
  }
  return z;
}

inline double squash_derivative(Squash mode, double u_max, double z) {
  switch (mode) {
    case Squash::none: return 1.0;
    case Squash::tanh_scaled: {
      const double th = std::tanh(z);
      return u_max * (1.0 - th * th);
    }
    case Squash::clip: return (z > -u_max && z < u_max) ? 1.0 : 0.0;
  }
  return 1.0;
}
}  // namespace detail

/// Open-loop parameterization theta = (z_0, ..., z_{T-1}), u_t = squash(z_t).
/// The state Jacobian is identically zero and the parameter Jacobian is the
/// t-th m x m block, scaled by the squash derivative.
class OpenLoopController final : public Controller {
 public:
  OpenLoopController(int horizon, int control_dim, Squash squash = Squash::none,
                     double u_max = kInf)
      : horizon_(horizon), control_dim_(control_dim), squash_(squash), u_max_(u_max) {
    if (horizon_ < 1 || control_dim_ < 1)
      throw std::invalid_argument("OpenLoopController: horizon and control_dim must be >= 1");
    if (squash_ != Squash::none && !(u_max_ > 0.0))
      throw std::invalid_argument("OpenLoopController: u_max must be > 0 when squashing");
  }

  int param_dim() const override { return horizon_ * control_dim_; }
  int control_dim() const override { return control_dim_; }

  Vector act(const Vector& theta, int t, const Vector&) const override {
    check(theta, t);
    Vector u(control_dim_);
    for (int j = 0; j < control_dim_; ++j)
      u[j] = detail::squash_value(squash_, u_max_, theta[t * control_dim_ + j]);
    return u;
  }

  Matrix jac_state(const Vector&, int, const Vector& x) const override {
    return Matrix::Zero(control_dim_, x.size());
  }

  Matrix jac_params(const Vector& theta, int t, const Vector&) const override {
    check(theta, t);
    Matrix g = Matrix::Zero(control_dim_, param_dim());
    for (int j = 0; j < control_dim_; ++j) {
      const int col = t * control_dim_ + j;
      g(j, col) = detail::squash_derivative(squash_, u_max_, theta[col]);
    }
    return g;
  }

 private:
  void check(const Vector& theta, int t) const {
    if (theta.size() != param_dim())
      throw std::invalid_argument("OpenLoopController: theta dimension mismatch");
    if (t < 0 || t >= horizon_) throw std::invalid_argument("OpenLoopController: stage out of range");
  }

  int horizon_;
  int control_dim_;
  Squash squash_;
  double u_max_;
};

}  // namespace tsmc
