#pragma once

#include <cmath>

#include "tsmc/envs/rk4.hpp"

namespace tsmc::envs {

/// Two-link underactuated pendulum actuated at the elbow. Equal unit links
/// with uniform-rod inertia; angles measured from the hanging position,
/// q2 relative to link 1. State (q1, q2, q1dot, q2dot).
struct AcrobotParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double lc1 = 0.5;
  double lc2 = 0.5;
  double inertia1 = 1.0 / 12.0;  // about the link's center of mass
  double inertia2 = 1.0 / 12.0;
  double gravity = 9.81;
  double damping1 = 0.1;  // viscous joint damping, keeps long rollouts bounded
  double damping2 = 0.1;
  double u_max = 10.0;
  double dt = 0.025;
  int horizon = 200;
};

class AcrobotContinuous final : public ContinuousDynamics {
 public:
  explicit AcrobotContinuous(AcrobotParams params = {}) : p_(params) {}

  int state_dim() const override { return 4; }
  int control_dim() const override { return 1; }
  const AcrobotParams& params() const { return p_; }

  Vector deriv(const Vector& x, const Vector& u) const override {
    const double q2 = x[1];
    const Eigen::Vector2d rhs = forcing(x, u[0], std::sin(q2));
    const Eigen::Vector2d accel = mass_matrix(std::cos(q2)).inverse() * rhs;
    Vector out(4);
    out << x[2], x[3], accel[0], accel[1];
    return out;
  }

  Matrix deriv_jac_x(const Vector& x, const Vector& u) const override {
    Matrix jac = Matrix::Zero(4, 4);
    jac(0, 2) = 1.0;
    jac(1, 3) = 1.0;

    const double q2 = x[1];
    const double c2 = std::cos(q2), s2 = std::sin(q2);
    const Eigen::Matrix2d mass = mass_matrix(c2);
    const Eigen::Matrix2d mass_inv = mass.inverse();
    const Eigen::Vector2d accel = mass_inv * forcing(x, u[0], s2);

    // d qddot / dz = M^{-1} (d rhs / dz - dM/dz qddot); only q2 enters M.
    for (int z = 0; z < 4; ++z) {
      Eigen::Vector2d drhs = forcing_partial_state(x, z);
      if (z == 1) {
        Eigen::Matrix2d dmass;
        const double k = p_.m2 * p_.l1 * p_.lc2;
        dmass(0, 0) = -2.0 * k * s2;
        dmass(0, 1) = -k * s2;
        dmass(1, 0) = -k * s2;
        dmass(1, 1) = 0.0;
        drhs -= dmass * accel;
      }
      const Eigen::Vector2d col = mass_inv * drhs;
      jac(2, z) = col[0];
      jac(3, z) = col[1];
    }
    return jac;
  }

  Matrix deriv_jac_u(const Vector& x, const Vector&) const override {
    const double c2 = std::cos(x[1]);
    const Eigen::Matrix2d mass_inv = mass_matrix(c2).inverse();
    Matrix jac = Matrix::Zero(4, 1);
    jac(2, 0) = mass_inv(0, 1);
    jac(3, 0) = mass_inv(1, 1);
    return jac;
  }

  /// Kinetic plus potential energy (zero at the hanging rest state).
  double mechanical_energy(const Vector& x) const {
    const double q1 = x[0], q2 = x[1], w1 = x[2], w2 = x[3];
    const Eigen::Matrix2d mass = mass_matrix(std::cos(q2));
    const Eigen::Vector2d w(w1, w2);
    const double kinetic = 0.5 * w.dot(mass * w);
    const double h1 = -p_.lc1 * std::cos(q1);
    const double h2 = -p_.l1 * std::cos(q1) - p_.lc2 * std::cos(q1 + q2);
    const double potential =
        p_.gravity * (p_.m1 * (h1 + p_.lc1) + p_.m2 * (h2 + p_.l1 + p_.lc2));
    return kinetic + potential;
  }

 private:
  Eigen::Matrix2d mass_matrix(double c2) const {
    Eigen::Matrix2d mass;
    mass(0, 0) = p_.m1 * p_.lc1 * p_.lc1 +
                 p_.m2 * (p_.l1 * p_.l1 + p_.lc2 * p_.lc2 + 2.0 * p_.l1 * p_.lc2 * c2) +
                 p_.inertia1 + p_.inertia2;
    mass(0, 1) = p_.m2 * (p_.lc2 * p_.lc2 + p_.l1 * p_.lc2 * c2) + p_.inertia2;
    mass(1, 0) = mass(0, 1);
    mass(1, 1) = p_.m2 * p_.lc2 * p_.lc2 + p_.inertia2;
    return mass;
  }

  // rhs of M qddot = rhs: torque minus Coriolis/centrifugal minus gravity.
  Eigen::Vector2d forcing(const Vector& x, double torque, double s2) const {
    const double q1 = x[0], q2 = x[1], w1 = x[2], w2 = x[3];
    const double k = p_.m2 * p_.l1 * p_.lc2;
    const double h1 = -k * s2 * (w2 * w2 + 2.0 * w1 * w2);
    const double h2 = k * s2 * w1 * w1;
    const double g1 = (p_.m1 * p_.lc1 + p_.m2 * p_.l1) * p_.gravity * std::sin(q1) +
                      p_.m2 * p_.lc2 * p_.gravity * std::sin(q1 + q2);
    const double g2 = p_.m2 * p_.lc2 * p_.gravity * std::sin(q1 + q2);
    return {-h1 - g1 - p_.damping1 * w1, torque - h2 - g2 - p_.damping2 * w2};
  }

  Eigen::Vector2d forcing_partial_state(const Vector& x, int z) const {
    const double q1 = x[0], q2 = x[1], w1 = x[2], w2 = x[3];
    const double c2 = std::cos(q2), s2 = std::sin(q2);
    const double k = p_.m2 * p_.l1 * p_.lc2;
    const double g12 = p_.m2 * p_.lc2 * p_.gravity;  // shared q1+q2 gravity term

    switch (z) {
      case 0: {
        const double dg1 = (p_.m1 * p_.lc1 + p_.m2 * p_.l1) * p_.gravity * std::cos(q1) +
                           g12 * std::cos(q1 + q2);
        const double dg2 = g12 * std::cos(q1 + q2);
        return {-dg1, -dg2};
      }
      case 1: {
        const double dh1 = -k * c2 * (w2 * w2 + 2.0 * w1 * w2);
        const double dh2 = k * c2 * w1 * w1;
        const double dg = g12 * std::cos(q1 + q2);
        return {-dh1 - dg, -dh2 - dg};
      }
      case 2: {
        const double dh1 = -2.0 * k * s2 * w2;
        const double dh2 = 2.0 * k * s2 * w1;
        return {-dh1 - p_.damping1, -dh2};
      }
      case 3: {
        const double dh1 = -k * s2 * (2.0 * w2 + 2.0 * w1);
        return {-dh1, -p_.damping2};
      }
      default: return {0.0, 0.0};
    }
  }

  AcrobotParams p_;
};

}  // namespace tsmc::envs
