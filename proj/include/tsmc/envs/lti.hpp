#pragma once

#include "tsmc/rollout.hpp"

namespace tsmc::envs {

/// Scalar linear system x_{t+1} = a x_t + b u_t. Cheap enough for
/// statistical cross-checks between sampler variants.
class ScalarLtiDynamics final : public DynamicsModel {
 public:
  explicit ScalarLtiDynamics(double a = 0.9, double b = 1.0) : a_(a), b_(b) {}

  int state_dim() const override { return 1; }
  int control_dim() const override { return 1; }
  double a() const { return a_; }
  double b() const { return b_; }

  Vector step(const Vector& x, const Vector& u) const override {
    return Vector::Constant(1, a_ * x[0] + b_ * u[0]);
  }
  Matrix jac_x(const Vector&, const Vector&) const override {
    return Matrix::Constant(1, 1, a_);
  }
  Matrix jac_u(const Vector&, const Vector&) const override {
    return Matrix::Constant(1, 1, b_);
  }

 private:
  double a_;
  double b_;
};

}  // namespace tsmc::envs
