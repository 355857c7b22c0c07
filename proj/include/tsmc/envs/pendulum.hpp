#pragma once

#include <cmath>

#include "tsmc/rollout.hpp"

namespace tsmc::envs {

/// Torque-limited pendulum, angle measured from the hanging position.
/// Physical constants are artifact defaults, not literature values.
struct PendulumParams {
  double mass = 1.0;
  double length = 1.0;
  double gravity = 9.81;
  double damping = 0.05;
  double u_max = 6.0;    // enforced by the controller's squashing
  double dt = 0.1;
  int substeps = 2;      // integrator substeps per dt
  int horizon = 30;
};

/// Symplectic kick-drift-kick (velocity Verlet) discretization. For the
/// undamped pendulum the scheme conserves a shadow Hamiltonian, so the energy
/// error oscillates at O(dt^2) instead of drifting, which is what allows the
/// fairly large 0.1 s step. The damping force in the second kick is evaluated
/// at the half-step velocity to keep the update explicit.
class PendulumDynamics final : public DynamicsModel {
 public:
  explicit PendulumDynamics(PendulumParams params = {}) : p_(params) {}

  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  const PendulumParams& params() const { return p_; }

  Vector step(const Vector& x, const Vector& u) const override {
    Vector state = x;
    for (int s = 0; s < p_.substeps; ++s) state = substep(state, u[0]);
    return state;
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

  void jacobians(const Vector& x, const Vector& u, Matrix& jac_x_out,
                 Matrix& jac_u_out) const override {
    jac_x_out = Matrix::Identity(2, 2);
    jac_u_out = Matrix::Zero(2, 1);
    Vector state = x;
    for (int s = 0; s < p_.substeps; ++s) {
      Matrix a(2, 2), b(2, 1);
      substep_jacobians(state, u[0], a, b);
      jac_x_out = a * jac_x_out;
      jac_u_out = a * jac_u_out + b;
      state = substep(state, u[0]);
    }
  }

  /// Total mechanical energy, used by the bounded-drift diagnostic.
  double mechanical_energy(const Vector& x) const {
    const double kinetic = 0.5 * p_.mass * p_.length * p_.length * x[1] * x[1];
    const double potential = p_.mass * p_.gravity * p_.length * (1.0 - std::cos(x[0]));
    return kinetic + potential;
  }

 private:
  double accel(double angle, double vel, double torque) const {
    const double inertia = p_.mass * p_.length * p_.length;
    return (torque - p_.damping * vel) / inertia - (p_.gravity / p_.length) * std::sin(angle);
  }

  double accel_dangle(double angle) const {
    return -(p_.gravity / p_.length) * std::cos(angle);
  }

  double sub_dt() const { return p_.dt / static_cast<double>(p_.substeps); }

  Vector substep(const Vector& x, double torque) const {
    const double h = sub_dt();
    const double vel_half = x[1] + 0.5 * h * accel(x[0], x[1], torque);
    const double angle_next = x[0] + h * vel_half;
    const double vel_next = vel_half + 0.5 * h * accel(angle_next, vel_half, torque);
    Vector out(2);
    out << angle_next, vel_next;
    return out;
  }

  void substep_jacobians(const Vector& x, double torque, Matrix& a, Matrix& b) const {
    const double h = sub_dt();
    const double inertia = p_.mass * p_.length * p_.length;
    const double a_vel = -p_.damping / inertia;
    const double vel_half = x[1] + 0.5 * h * accel(x[0], x[1], torque);
    const double angle_next = x[0] + h * vel_half;

    // vel_half = vel + h/2 a(angle, vel); angle' = angle + h vel_half;
    // vel' = vel_half + h/2 a(angle', vel_half)
    const double dvh_dangle = 0.5 * h * accel_dangle(x[0]);
    const double dvh_dvel = 1.0 + 0.5 * h * a_vel;
    const double dq_dangle = 1.0 + h * dvh_dangle;
    const double dq_dvel = h * dvh_dvel;
    const double a_q_next = accel_dangle(angle_next);

    a.resize(2, 2);
    a(0, 0) = dq_dangle;
    a(0, 1) = dq_dvel;
    a(1, 0) = dvh_dangle + 0.5 * h * (a_q_next * dq_dangle + a_vel * dvh_dangle);
    a(1, 1) = dvh_dvel + 0.5 * h * (a_q_next * dq_dvel + a_vel * dvh_dvel);

    const double dvh_du = 0.5 * h / inertia;
    const double dq_du = h * dvh_du;
    b.resize(2, 1);
    b(0, 0) = dq_du;
    b(1, 0) = dvh_du + 0.5 * h * (a_q_next * dq_du + a_vel * dvh_du + 1.0 / inertia);
  }

  PendulumParams p_;
};

}  // namespace tsmc::envs
