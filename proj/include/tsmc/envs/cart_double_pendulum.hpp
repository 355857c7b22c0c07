#pragma once

#include <cmath>

#include "tsmc/envs/rk4.hpp"

namespace tsmc::envs {

/// Double pendulum on a cart, force-actuated at the cart. Generalized
/// coordinates q = (cart position, link angles from hanging); state is
/// (q, qdot) in R^6. Link 2 hangs from the tip of link 1; both angles are
/// absolute (world frame).
struct CartDoublePendulumParams {
  double cart_mass = 1.0;
  double m1 = 0.5;
  double m2 = 0.5;
  double l1 = 0.5;
  double l2 = 0.5;
  double inertia1 = 0.5 * 0.5 * 0.5 / 12.0;  // uniform rod about its com
  double inertia2 = 0.5 * 0.5 * 0.5 / 12.0;
  double gravity = 9.81;
  double damping_cart = 0.1;
  double damping1 = 0.05;
  double damping2 = 0.05;
  double u_max = 10.0;
  double dt = 0.06;
  int horizon = 100;
};

class CartDoublePendulumContinuous final : public ContinuousDynamics {
 public:
  explicit CartDoublePendulumContinuous(CartDoublePendulumParams params = {}) : p_(params) {}

  int state_dim() const override { return 6; }
  int control_dim() const override { return 1; }
  const CartDoublePendulumParams& params() const { return p_; }

  Vector deriv(const Vector& x, const Vector& u) const override {
    const Eigen::Vector3d qd(x[3], x[4], x[5]);
    const Eigen::Matrix3d mass = mass_matrix(x);
    const Eigen::Vector3d rhs = forcing(x, u[0]);
    const Eigen::Vector3d accel = mass.llt().solve(rhs);
    Vector out(6);
    out << qd[0], qd[1], qd[2], accel[0], accel[1], accel[2];
    return out;
  }

  Matrix deriv_jac_x(const Vector& x, const Vector& u) const override {
    Matrix jac = Matrix::Zero(6, 6);
    jac.block(0, 3, 3, 3).setIdentity();

    const Eigen::Matrix3d mass = mass_matrix(x);
    const Eigen::Matrix3d mass_inv = mass.inverse();
    const Eigen::Vector3d accel = mass_inv * forcing(x, u[0]);

    for (int z = 0; z < 6; ++z) {
      Eigen::Vector3d drhs = forcing_partial(x, z);
      if (z == 1 || z == 2) drhs -= mass_partial(x, z) * accel;
      const Eigen::Vector3d col = mass_inv * drhs;
      jac(3, z) = col[0];
      jac(4, z) = col[1];
      jac(5, z) = col[2];
    }
    return jac;
  }

  Matrix deriv_jac_u(const Vector& x, const Vector&) const override {
    const Eigen::Matrix3d mass_inv = mass_matrix(x).inverse();
    Matrix jac = Matrix::Zero(6, 1);
    jac(3, 0) = mass_inv(0, 0);
    jac(4, 0) = mass_inv(1, 0);
    jac(5, 0) = mass_inv(2, 0);
    return jac;
  }

  double mechanical_energy(const Vector& x) const {
    const Eigen::Vector3d qd(x[3], x[4], x[5]);
    const double kinetic = 0.5 * qd.dot(mass_matrix(x) * qd);
    const double potential = p_.gravity * (k1() * (1.0 - std::cos(x[1])) +
                                           k2() * (1.0 - std::cos(x[2])));
    return kinetic + potential;
  }

 private:
  double a1() const { return 0.5 * p_.l1; }  // com offset of link 1
  double a2() const { return 0.5 * p_.l2; }
  double k1() const { return p_.m1 * a1() + p_.m2 * p_.l1; }
  double k2() const { return p_.m2 * a2(); }
  double k3() const { return p_.m2 * p_.l1 * a2(); }

  Eigen::Matrix3d mass_matrix(const Vector& x) const {
    const double c1 = std::cos(x[1]), c2 = std::cos(x[2]);
    Eigen::Matrix3d mass;
    mass(0, 0) = p_.cart_mass + p_.m1 + p_.m2;
    mass(0, 1) = k1() * c1;
    mass(0, 2) = k2() * c2;
    mass(1, 1) = p_.m1 * a1() * a1() + p_.m2 * p_.l1 * p_.l1 + p_.inertia1;
    mass(1, 2) = k3() * std::cos(x[1] - x[2]);
    mass(2, 2) = p_.m2 * a2() * a2() + p_.inertia2;
    mass(1, 0) = mass(0, 1);
    mass(2, 0) = mass(0, 2);
    mass(2, 1) = mass(1, 2);
    return mass;
  }

  // dM/dq for q index 1 or 2 (the cart coordinate never enters M).
  Eigen::Matrix3d mass_partial(const Vector& x, int z) const {
    Eigen::Matrix3d dm = Eigen::Matrix3d::Zero();
    const double s12 = std::sin(x[1] - x[2]);
    if (z == 1) {
      dm(0, 1) = dm(1, 0) = -k1() * std::sin(x[1]);
      dm(1, 2) = dm(2, 1) = -k3() * s12;
    } else if (z == 2) {
      dm(0, 2) = dm(2, 0) = -k2() * std::sin(x[2]);
      dm(1, 2) = dm(2, 1) = k3() * s12;
    }
    return dm;
  }

  // rhs of M qddot = rhs = B u - coriolis(q, qd) - gravity(q).
  Eigen::Vector3d forcing(const Vector& x, double force) const {
    const double s1 = std::sin(x[1]), s2 = std::sin(x[2]);
    const double s12 = std::sin(x[1] - x[2]);
    const double w1 = x[4], w2 = x[5];
    Eigen::Vector3d c;
    c[0] = -k1() * s1 * w1 * w1 - k2() * s2 * w2 * w2;
    c[1] = k3() * s12 * w2 * w2;
    c[2] = -k3() * s12 * w1 * w1;
    Eigen::Vector3d grav(0.0, p_.gravity * k1() * s1, p_.gravity * k2() * s2);
    const Eigen::Vector3d friction(p_.damping_cart * x[3], p_.damping1 * w1, p_.damping2 * w2);
    return Eigen::Vector3d(force, 0.0, 0.0) - c - grav - friction;
  }

  Eigen::Vector3d forcing_partial(const Vector& x, int z) const {
    const double c1 = std::cos(x[1]), c2 = std::cos(x[2]);
    const double s12 = std::sin(x[1] - x[2]);
    const double c12 = std::cos(x[1] - x[2]);
    const double w1 = x[4], w2 = x[5];
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    switch (z) {
      case 1:
        out[0] = k1() * c1 * w1 * w1;  // -(dc1/dq1)
        out[1] = -k3() * c12 * w2 * w2 - p_.gravity * k1() * c1;
        out[2] = k3() * c12 * w1 * w1;
        break;
      case 2:
        out[0] = k2() * c2 * w2 * w2;
        out[1] = k3() * c12 * w2 * w2;
        out[2] = -k3() * c12 * w1 * w1 - p_.gravity * k2() * c2;
        break;
      case 3:
        out[0] = -p_.damping_cart;
        break;
      case 4:
        out[0] = 2.0 * k1() * std::sin(x[1]) * w1;
        out[1] = -p_.damping1;
        out[2] = 2.0 * k3() * s12 * w1;
        break;
      case 5:
        out[0] = 2.0 * k2() * std::sin(x[2]) * w2;
        out[1] = -2.0 * k3() * s12 * w2;
        out[2] = -p_.damping2;
        break;
      default: break;
    }
    return out;
  }

  CartDoublePendulumParams p_;
};

}  // namespace tsmc::envs
