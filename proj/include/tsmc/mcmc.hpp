#pragma once

#include <cmath>
#include <stdexcept>

#include "tsmc/common.hpp"
#include "tsmc/energy.hpp"
#include "tsmc/rng.hpp"

namespace tsmc {

enum class LeapfrogLength { fixed, jittered };

struct HmcConfig {
  double step_size = 0.1;
  Vector mass_diag;  // empty = identity
  int max_leapfrog_steps = 16;
  LeapfrogLength length_strategy = LeapfrogLength::jittered;
  // |dH| beyond this marks the trajectory divergent (certain rejection).
  double divergence_threshold = 1000.0;
};

struct LeapfrogResult {
  Vector theta;
  Vector momentum;
  bool divergent = false;
};

struct StepResult {
  Vector theta;
  bool accepted = false;
  bool divergent = false;
};

namespace detail {
inline Vector mass_or_identity(const Vector& mass_diag, Eigen::Index d) {
  if (mass_diag.size() == 0) return Vector::Ones(d);
  if (mass_diag.size() != d) throw std::invalid_argument("HMC: mass_diag dimension mismatch");
  if ((mass_diag.array() <= 0.0).any())
    throw std::invalid_argument("HMC: mass entries must be > 0");
  return mass_diag;
}
}  // namespace detail

/// L steps of the half-kick / drift / half-kick recursion with diagonal mass
/// matrix. Flags divergence as soon as the state stops being finite.
inline LeapfrogResult leapfrog(const Vector& theta0, const Vector& momentum0, double step_size,
                               int n_steps, const PotentialEvaluator& potential,
                               const Vector& mass_diag = Vector()) {
  if (n_steps < 1) throw std::invalid_argument("leapfrog: n_steps must be >= 1");
  const Vector mass = detail::mass_or_identity(mass_diag, theta0.size());

  LeapfrogResult out{theta0, momentum0, false};
  Vector grad = potential.gradient(out.theta);
  if (!all_finite(grad)) return {theta0, momentum0, true};

  for (int s = 0; s < n_steps; ++s) {
    out.momentum -= 0.5 * step_size * grad;
    out.theta += step_size * out.momentum.cwiseQuotient(mass);
    if (!all_finite(out.theta)) return {theta0, momentum0, true};
    grad = potential.gradient(out.theta);
    if (!all_finite(grad)) return {theta0, momentum0, true};
    out.momentum -= 0.5 * step_size * grad;
  }
  return out;
}

/// One HMC transition: momentum refresh, leapfrog integration, Metropolis
/// correction. Rejections (including divergent trajectories) return the
/// input position bit-exactly.
inline StepResult hmc_step(const Vector& theta, const PotentialEvaluator& potential,
                           const HmcConfig& config, RngStream& rng) {
  if (config.step_size <= 0.0) throw std::invalid_argument("hmc_step: step_size must be > 0");
  if (config.max_leapfrog_steps < 1)
    throw std::invalid_argument("hmc_step: max_leapfrog_steps must be >= 1");
  const Vector mass = detail::mass_or_identity(config.mass_diag, theta.size());

  Vector momentum(theta.size());
  for (Eigen::Index i = 0; i < momentum.size(); ++i)
    momentum[i] = std::sqrt(mass[i]) * rng.normal();

  const int n_steps = config.length_strategy == LeapfrogLength::jittered
                          ? rng.uniform_int(1, config.max_leapfrog_steps)
                          : config.max_leapfrog_steps;

  const double v0 = potential.value(theta);
  const double h0 = v0 + 0.5 * momentum.cwiseQuotient(mass).dot(momentum);

  const LeapfrogResult traj = leapfrog(theta, momentum, config.step_size, n_steps, potential, mass);
  // Draw the acceptance uniform unconditionally so the stream advances the
  // same way whether or not the trajectory diverged.
  const double u = rng.uniform();
  if (traj.divergent) return {theta, false, true};

  const double v1 = potential.value(traj.theta);
  const double h1 = v1 + 0.5 * traj.momentum.cwiseQuotient(mass).dot(traj.momentum);
  const double delta_h = h1 - h0;
  if (!std::isfinite(delta_h) || std::abs(delta_h) > config.divergence_threshold)
    return {theta, false, true};

  if (std::log(u) < -delta_h) return {traj.theta, true, false};
  return {theta, false, false};
}

/// Metropolis-adjusted Langevin step:
///   theta' = theta - step * grad V(theta) + sqrt(2 step) xi,
/// accepted with the Metropolis-Hastings ratio including both asymmetric
/// Gaussian proposal densities.
inline StepResult mala_step(const Vector& theta, const PotentialEvaluator& potential,
                            double step_size, RngStream& rng) {
  if (step_size <= 0.0) throw std::invalid_argument("mala_step: step_size must be > 0");

  const Vector grad = potential.gradient(theta);
  Vector noise(theta.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
  const double u = rng.uniform();
  if (!all_finite(grad)) return {theta, false, true};

  const Vector proposal = theta - step_size * grad + std::sqrt(2.0 * step_size) * noise;
  if (!all_finite(proposal)) return {theta, false, true};

  const Vector grad_prop = potential.gradient(proposal);
  if (!all_finite(grad_prop)) return {theta, false, true};

  const double v0 = potential.value(theta);
  const double v1 = potential.value(proposal);
  // log q(x | y) with q(y | x) = N(y; x - step * grad V(x), 2 step I).
  const double log_q_forward = -(proposal - theta + step_size * grad).squaredNorm() / (4.0 * step_size);
  const double log_q_reverse = -(theta - proposal + step_size * grad_prop).squaredNorm() / (4.0 * step_size);
  const double log_alpha = -v1 + v0 + log_q_reverse - log_q_forward;
  if (!std::isfinite(log_alpha)) return {theta, false, true};

  if (std::log(u) < log_alpha) return {proposal, true, false};
  return {theta, false, false};
}

/// Kernel selector shared by the tempered sampler and the parallel-chain
/// baselines.
struct McmcKernel {
  enum class Type { hmc, mala };
  Type type = Type::hmc;
  HmcConfig hmc;
  double mala_step_size = 0.01;

  StepResult apply(const Vector& theta, const PotentialEvaluator& potential,
                   RngStream& rng) const {
    return type == Type::hmc ? hmc_step(theta, potential, hmc, rng)
                             : mala_step(theta, potential, mala_step_size, rng);
  }
};

}  // namespace tsmc
