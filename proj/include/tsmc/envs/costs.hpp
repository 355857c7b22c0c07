#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "tsmc/common.hpp"
#include "tsmc/rollout.hpp"

namespace tsmc::envs {

/// Weighted quadratic state-error plus control-effort cost:
///   l_t(x, u) = sum_j q_j (x_j - goal_j)^2 + sum_k r_k u_k^2
///   l_T(x)   = sum_j qT_j (x_j - goal_j)^2
/// All weights nonnegative, so the costs are nonnegative everywhere.
class QuadraticGoalCost final : public CostModel {
 public:
  QuadraticGoalCost(Vector goal, Vector stage_weights, Vector control_weights,
                    Vector terminal_weights)
      : goal_(std::move(goal)),
        q_(std::move(stage_weights)),
        r_(std::move(control_weights)),
        q_terminal_(std::move(terminal_weights)) {
    if (q_.size() != goal_.size() || q_terminal_.size() != goal_.size())
      throw std::invalid_argument("QuadraticGoalCost: weight dimension mismatch");
    if ((q_.array() < 0).any() || (r_.array() < 0).any() || (q_terminal_.array() < 0).any())
      throw std::invalid_argument("QuadraticGoalCost: weights must be nonnegative");
  }

  double stage(int, const Vector& x, const Vector& u) const override {
    const Vector err = x - goal_;
    return err.cwiseProduct(q_).dot(err) + u.cwiseProduct(r_).dot(u);
  }
  Vector stage_grad_x(int, const Vector& x, const Vector&) const override {
    return 2.0 * q_.cwiseProduct(x - goal_);
  }
  Vector stage_grad_u(int, const Vector&, const Vector& u) const override {
    return 2.0 * r_.cwiseProduct(u);
  }
  double terminal(const Vector& x) const override {
    const Vector err = x - goal_;
    return err.cwiseProduct(q_terminal_).dot(err);
  }
  Vector terminal_grad_x(const Vector& x) const override {
    return 2.0 * q_terminal_.cwiseProduct(x - goal_);
  }

 private:
  Vector goal_;
  Vector q_;
  Vector r_;
  Vector q_terminal_;
};

/// Environment-defined split of a state into position-like and velocity-like
/// blocks, with Jacobians, for goal-distance costs.
class StateSplit {
 public:
  virtual ~StateSplit() = default;
  virtual int state_dim() const = 0;
  virtual int pos_dim() const = 0;
  virtual int vel_dim() const = 0;
  virtual Vector position(const Vector& x) const = 0;
  virtual Vector velocity(const Vector& x) const = 0;
  virtual Matrix position_jac(const Vector& x) const = 0;  // pos_dim x n
  virtual Matrix velocity_jac(const Vector& x) const = 0;  // vel_dim x n
};

/// Identity split: the first pos_dim entries are positions, the rest
/// velocities.
class BlockStateSplit final : public StateSplit {
 public:
  BlockStateSplit(int pos_dim, int vel_dim) : pos_dim_(pos_dim), vel_dim_(vel_dim) {}
  int state_dim() const override { return pos_dim_ + vel_dim_; }
  int pos_dim() const override { return pos_dim_; }
  int vel_dim() const override { return vel_dim_; }
  Vector position(const Vector& x) const override { return x.head(pos_dim_); }
  Vector velocity(const Vector& x) const override { return x.tail(vel_dim_); }
  Matrix position_jac(const Vector&) const override {
    Matrix jac = Matrix::Zero(pos_dim_, state_dim());
    jac.leftCols(pos_dim_).setIdentity();
    return jac;
  }
  Matrix velocity_jac(const Vector&) const override {
    Matrix jac = Matrix::Zero(vel_dim_, state_dim());
    jac.rightCols(vel_dim_).setIdentity();
    return jac;
  }

 private:
  int pos_dim_;
  int vel_dim_;
};

/// Pendulum state (angle, angular velocity) mapped to the Cartesian tip
/// position and tip velocity, both in R^2. This is the 4-dimensional goal
/// encoding used by the sparse swing-up task.
class PendulumTipSplit final : public StateSplit {
 public:
  explicit PendulumTipSplit(double length = 1.0) : length_(length) {}
  int state_dim() const override { return 2; }
  int pos_dim() const override { return 2; }
  int vel_dim() const override { return 2; }

  Vector position(const Vector& x) const override {
    Vector p(2);
    p << length_ * std::sin(x[0]), -length_ * std::cos(x[0]);
    return p;
  }
  Vector velocity(const Vector& x) const override {
    Vector v(2);
    v << length_ * x[1] * std::cos(x[0]), length_ * x[1] * std::sin(x[0]);
    return v;
  }
  Matrix position_jac(const Vector& x) const override {
    Matrix jac(2, 2);
    jac << length_ * std::cos(x[0]), 0.0, length_ * std::sin(x[0]), 0.0;
    return jac;
  }
  Matrix velocity_jac(const Vector& x) const override {
    Matrix jac(2, 2);
    jac << -length_ * x[1] * std::sin(x[0]), length_ * std::cos(x[0]),
        length_ * x[1] * std::cos(x[0]), length_ * std::sin(x[0]);
    return jac;
  }

  /// Upright tip at rest, the swing-up goal in this encoding.
  Vector goal_position() const { return (Vector(2) << 0.0, length_).finished(); }
  Vector goal_velocity() const { return Vector::Zero(2); }

 private:
  double length_;
};

/// Smoothed indicator of reaching a goal ball:
///   dist = ||pos - goal_pos|| + 0.5 ||vel - goal_vel||
///   cost = 1 - sigmoid((margin - dist) / sharpness),   in (0, 1).
/// margin = 0.1 and sharpness = 0.02 make the reward effectively sparse.
inline double sparse_goal_cost(double dist, double margin = 0.1, double sharpness = 0.02) {
  return 1.0 - sigmoid((margin - dist) / sharpness);
}

inline double sparse_goal_cost_ddist(double dist, double margin = 0.1, double sharpness = 0.02) {
  const double s = sigmoid((margin - dist) / sharpness);
  return s * (1.0 - s) / sharpness;
}

/// Terminal-only sparse cost; every stage cost is zero.
class SparseTerminalCost final : public CostModel {
 public:
  SparseTerminalCost(std::shared_ptr<const StateSplit> split, Vector goal_pos, Vector goal_vel,
                     double margin = 0.1, double sharpness = 0.02)
      : split_(std::move(split)),
        goal_pos_(std::move(goal_pos)),
        goal_vel_(std::move(goal_vel)),
        margin_(margin),
        sharpness_(sharpness) {}

  double stage(int, const Vector&, const Vector&) const override { return 0.0; }
  Vector stage_grad_x(int, const Vector& x, const Vector&) const override {
    return Vector::Zero(x.size());
  }
  Vector stage_grad_u(int, const Vector&, const Vector& u) const override {
    return Vector::Zero(u.size());
  }

  double distance(const Vector& x) const {
    return (split_->position(x) - goal_pos_).norm() +
           0.5 * (split_->velocity(x) - goal_vel_).norm();
  }

  double terminal(const Vector& x) const override {
    return sparse_goal_cost(distance(x), margin_, sharpness_);
  }

  Vector terminal_grad_x(const Vector& x) const override {
    const Vector pos_err = split_->position(x) - goal_pos_;
    const Vector vel_err = split_->velocity(x) - goal_vel_;
    const double pos_norm = pos_err.norm();
    const double vel_norm = vel_err.norm();
    Vector ddist_dx = Vector::Zero(x.size());
    if (pos_norm > 1e-12)
      ddist_dx += split_->position_jac(x).transpose() * (pos_err / pos_norm);
    if (vel_norm > 1e-12)
      ddist_dx += 0.5 * split_->velocity_jac(x).transpose() * (vel_err / vel_norm);
    const double dist = pos_norm + 0.5 * vel_norm;
    return sparse_goal_cost_ddist(dist, margin_, sharpness_) * ddist_dx;
  }

 private:
  std::shared_ptr<const StateSplit> split_;
  Vector goal_pos_;
  Vector goal_vel_;
  double margin_;
  double sharpness_;
};

}  // namespace tsmc::envs
