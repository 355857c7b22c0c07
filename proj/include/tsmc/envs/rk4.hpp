#pragma once

#include <memory>
#include <stdexcept>

#include "tsmc/rollout.hpp"

namespace tsmc::envs {

/// Continuous-time dynamics xdot = f(x, u) with exact Jacobians.
class ContinuousDynamics {
 public:
  virtual ~ContinuousDynamics() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual Vector deriv(const Vector& x, const Vector& u) const = 0;
  virtual Matrix deriv_jac_x(const Vector& x, const Vector& u) const = 0;
  virtual Matrix deriv_jac_u(const Vector& x, const Vector& u) const = 0;
};

/// Classical fourth-order Runge-Kutta discretization. The discrete Jacobians
/// are exact: the chain rule is propagated through all four stages, so A and
/// B differentiate the integrator itself, not the continuous flow.
class Rk4Dynamics final : public DynamicsModel {
 public:
  Rk4Dynamics(std::shared_ptr<const ContinuousDynamics> continuous, double dt)
      : continuous_(std::move(continuous)), dt_(dt) {
    if (dt_ <= 0.0) throw std::invalid_argument("Rk4Dynamics: dt must be > 0");
  }

  int state_dim() const override { return continuous_->state_dim(); }
  int control_dim() const override { return continuous_->control_dim(); }
  double dt() const { return dt_; }

  Vector step(const Vector& x, const Vector& u) const override {
    const Vector k1 = continuous_->deriv(x, u);
    const Vector k2 = continuous_->deriv(x + 0.5 * dt_ * k1, u);
    const Vector k3 = continuous_->deriv(x + 0.5 * dt_ * k2, u);
    const Vector k4 = continuous_->deriv(x + dt_ * k3, u);
    return x + (dt_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  Matrix jac_x(const Vector& x, const Vector& u) const override {
    Matrix a, b;
    jacobians(x, u, a, b);
    return a;
  }

  Matrix jac_u(const Vector& x, const Vector& u) const override {
    Matrix a, b;
    jacobians(x, u, a, b);
    return b;
  }

  void jacobians(const Vector& x, const Vector& u, Matrix& a, Matrix& b) const override {
    const int n = state_dim();
    const Matrix eye = Matrix::Identity(n, n);

    const Vector k1 = continuous_->deriv(x, u);
    const Vector x2 = x + 0.5 * dt_ * k1;
    const Vector k2 = continuous_->deriv(x2, u);
    const Vector x3 = x + 0.5 * dt_ * k2;
    const Vector k3 = continuous_->deriv(x3, u);
    const Vector x4 = x + dt_ * k3;

    const Matrix k1x = continuous_->deriv_jac_x(x, u);
    const Matrix k1u = continuous_->deriv_jac_u(x, u);
    const Matrix j2x = continuous_->deriv_jac_x(x2, u);
    const Matrix k2x = j2x * (eye + 0.5 * dt_ * k1x);
    const Matrix k2u = j2x * (0.5 * dt_ * k1u) + continuous_->deriv_jac_u(x2, u);
    const Matrix j3x = continuous_->deriv_jac_x(x3, u);
    const Matrix k3x = j3x * (eye + 0.5 * dt_ * k2x);
    const Matrix k3u = j3x * (0.5 * dt_ * k2u) + continuous_->deriv_jac_u(x3, u);
    const Matrix j4x = continuous_->deriv_jac_x(x4, u);
    const Matrix k4x = j4x * (eye + dt_ * k3x);
    const Matrix k4u = j4x * (dt_ * k3u) + continuous_->deriv_jac_u(x4, u);

    a = eye + (dt_ / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    b = (dt_ / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  }

 private:
  std::shared_ptr<const ContinuousDynamics> continuous_;
  double dt_;
};

}  // namespace tsmc::envs
