#pragma once

#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tsmc/common.hpp"
#include "tsmc/energy.hpp"

namespace tsmc {

/// Discrete-time dynamics x_{t+1} = f(x_t, u_t) with exact Jacobians
/// A = df/dx and B = df/du.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual Vector step(const Vector& x, const Vector& u) const = 0;
  virtual Matrix jac_x(const Vector& x, const Vector& u) const = 0;  // n x n
  virtual Matrix jac_u(const Vector& x, const Vector& u) const = 0;  // n x m
  virtual void jacobians(const Vector& x, const Vector& u, Matrix& jac_x_out,
                         Matrix& jac_u_out) const {
    jac_x_out = jac_x(x, u);
    jac_u_out = jac_u(x, u);
  }
};

/// Stage costs l_t(x, u) and terminal cost l_T(x), all nonnegative, with
/// exact gradients.
class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual double stage(int t, const Vector& x, const Vector& u) const = 0;
  virtual Vector stage_grad_x(int t, const Vector& x, const Vector& u) const = 0;
  virtual Vector stage_grad_u(int t, const Vector& x, const Vector& u) const = 0;
  virtual double terminal(const Vector& x) const = 0;
  virtual Vector terminal_grad_x(const Vector& x) const = 0;
};

/// Parameterized controller u_t = pi(theta, t, x_t) with the two Jacobians
/// the adjoint recursion needs: L = dpi/dx (m x n) and G = dpi/dtheta (m x d).
class Controller {
 public:
  virtual ~Controller() = default;
  virtual int param_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual Vector act(const Vector& theta, int t, const Vector& x) const = 0;
  virtual Matrix jac_state(const Vector& theta, int t, const Vector& x) const = 0;
  virtual Matrix jac_params(const Vector& theta, int t, const Vector& x) const = 0;
  /// Both Jacobians at once; overridden where a shared forward pass makes
  /// that cheaper.
  virtual void jacobians(const Vector& theta, int t, const Vector& x, Matrix& jac_state_out,
                         Matrix& jac_params_out) const {
    jac_state_out = jac_state(theta, t, x);
    jac_params_out = jac_params(theta, t, x);
  }
};

struct Trajectory {
  Matrix states;       // (T+1) x n
  Matrix controls;     // T x m
  Vector stage_costs;  // T
  double terminal_cost = 0.0;
  double total_cost = 0.0;
  int horizon() const { return static_cast<int>(controls.rows()); }
};

/// Deterministic forward pass. Throws RolloutDivergence (with the failing
/// step index) as soon as a state or control stops being finite.
inline Trajectory rollout(const Vector& x0, const Vector& theta, const Controller& controller,
                          const DynamicsModel& dynamics, const CostModel& cost, int horizon) {
  if (horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
  const int n = dynamics.state_dim();
  const int m = dynamics.control_dim();
  if (x0.size() != n) throw std::invalid_argument("rollout: x0 dimension mismatch");

  Trajectory traj;
  traj.states.resize(horizon + 1, n);
  traj.controls.resize(horizon, m);
  traj.stage_costs.resize(horizon);

  Vector x = x0;
  traj.states.row(0) = x;
  double total = 0.0;
  for (int t = 0; t < horizon; ++t) {
    const Vector u = controller.act(theta, t, x);
    if (!all_finite(u)) throw RolloutDivergence(t);
    const double l = cost.stage(t, x, u);
    x = dynamics.step(x, u);
    if (!all_finite(x) || !std::isfinite(l)) throw RolloutDivergence(t);
    traj.controls.row(t) = u;
    traj.stage_costs[t] = l;
    traj.states.row(t + 1) = x;
    total += l;
  }
  traj.terminal_cost = cost.terminal(x);
  if (!std::isfinite(traj.terminal_cost)) throw RolloutDivergence(horizon);
  traj.total_cost = total + traj.terminal_cost;
  return traj;
}

/// Exact gradient of the trajectory cost via the backward costate recursion:
///   phi_T = l_{x,T}
///   g_t   = l_{u,t} + B_t' phi_{t+1}
///   phi_t = l_{x,t} + L_t' g_t + A_t' phi_{t+1}
/// and grad_theta J = sum_t G_t' g_t. The trajectory must have been produced
/// by rollout() with the same theta.
inline Vector adjoint_gradient(const Trajectory& traj, const Vector& theta,
                               const Controller& controller, const DynamicsModel& dynamics,
                               const CostModel& cost) {
  const int horizon = traj.horizon();
  const int d = controller.param_dim();

  Vector grad = Vector::Zero(d);
  Vector costate = cost.terminal_grad_x(traj.states.row(horizon));
  Matrix a, b, state_jac, param_jac;
  for (int t = horizon - 1; t >= 0; --t) {
    const Vector x = traj.states.row(t);
    const Vector u = traj.controls.row(t);
    dynamics.jacobians(x, u, a, b);
    const Vector g = cost.stage_grad_u(t, x, u) + b.transpose() * costate;
    controller.jacobians(theta, t, x, state_jac, param_jac);
    grad.noalias() += param_jac.transpose() * g;
    costate = cost.stage_grad_x(t, x, u) + state_jac.transpose() * g + a.transpose() * costate;
  }
  return grad;
}

/// Bundles one control problem; the energy factory and the extended-space
/// sampler both consume it.
struct ControlProblem {
  std::shared_ptr<const DynamicsModel> dynamics;
  std::shared_ptr<const CostModel> cost;
  std::shared_ptr<const Controller> controller;
  int horizon = 1;

  double trajectory_cost(const Vector& x0, const Vector& theta) const {
    return rollout(x0, theta, *controller, *dynamics, *cost, horizon).total_cost;
  }

  std::pair<double, Vector> cost_and_gradient(const Vector& x0, const Vector& theta) const {
    const Trajectory traj = rollout(x0, theta, *controller, *dynamics, *cost, horizon);
    return {traj.total_cost, adjoint_gradient(traj, theta, *controller, *dynamics, *cost)};
  }
};

/// E(theta) = mean trajectory cost over a fixed set of initial states
/// (a single state for trajectory optimization, a frozen batch for the
/// deterministic policy-optimization surrogate). The gradient is the mean of
/// the per-state adjoint gradients.
class RolloutEnergy final : public EnergyModel {
 public:
  RolloutEnergy(ControlProblem problem, std::vector<Vector> initial_states)
      : problem_(std::move(problem)), initial_states_(std::move(initial_states)) {
    if (initial_states_.empty())
      throw std::invalid_argument("RolloutEnergy: initial_states must be nonempty");
  }

  int dim() const override { return problem_.controller->param_dim(); }
  const ControlProblem& problem() const { return problem_; }
  const std::vector<Vector>& initial_states() const { return initial_states_; }

  double value(const Vector& theta) const override {
    double total = 0.0;
    for (std::size_t b = 0; b < initial_states_.size(); ++b) {
      try {
        total += problem_.trajectory_cost(initial_states_[b], theta);
      } catch (const RolloutDivergence& err) {
        throw RolloutDivergence(err.step(), static_cast<int>(b));
      }
    }
    return total / static_cast<double>(initial_states_.size());
  }

  Vector gradient(const Vector& theta) const override {
    Vector grad = Vector::Zero(dim());
    for (std::size_t b = 0; b < initial_states_.size(); ++b) {
      try {
        grad += problem_.cost_and_gradient(initial_states_[b], theta).second;
      } catch (const RolloutDivergence& err) {
        throw RolloutDivergence(err.step(), static_cast<int>(b));
      }
    }
    return grad / static_cast<double>(initial_states_.size());
  }

 private:
  ControlProblem problem_;
  std::vector<Vector> initial_states_;
};

inline std::unique_ptr<EnergyModel> make_energy(ControlProblem problem,
                                                std::vector<Vector> initial_states) {
  return std::make_unique<RolloutEnergy>(std::move(problem), std::move(initial_states));
}

}  // namespace tsmc
