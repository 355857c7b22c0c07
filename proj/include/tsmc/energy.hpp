#pragma once

#include <functional>
#include <stdexcept>

#include "tsmc/common.hpp"
#include "tsmc/prior.hpp"

namespace tsmc {

/// E(theta) and its gradient: the only coupling between the sampler and the
/// underlying problem. Implementations throw RolloutDivergence when a rollout
/// leaves the finite range; the sampler treats that as infinite energy.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;
  virtual int dim() const = 0;
  virtual double value(const Vector& theta) const = 0;
  virtual Vector gradient(const Vector& theta) const = 0;
};

/// E(theta) = 0.5 theta' Q theta for diagonal Q. The Boltzmann tilt of a
/// Gaussian prior by this energy is again Gaussian, which gives closed-form
/// moments and partition functions for tests.
class QuadraticEnergy final : public EnergyModel {
 public:
  explicit QuadraticEnergy(Vector q_diag) : q_diag_(std::move(q_diag)) {}

  int dim() const override { return static_cast<int>(q_diag_.size()); }
  double value(const Vector& theta) const override {
    return 0.5 * theta.cwiseProduct(q_diag_).dot(theta);
  }
  Vector gradient(const Vector& theta) const override { return q_diag_.cwiseProduct(theta); }

 private:
  Vector q_diag_;
};

/// Pair of callables the MCMC kernels consume: V(theta) and grad V(theta).
struct PotentialEvaluator {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// Tempered potential of Boltzmann-tilting a prior by an energy:
///   V(theta) = (beta / lambda) E(theta) - log p0(theta).
struct TemperedTarget {
  const Prior* prior = nullptr;
  const EnergyModel* energy = nullptr;
  double beta = 0.0;
  double lambda = 1.0;
};

/// Builds the evaluator for a tempered target. A divergent energy evaluation
/// maps to V = +inf (and a non-finite gradient), which the kernels treat as a
/// certain rejection.
inline PotentialEvaluator tempered_potential(const TemperedTarget& target) {
  if (target.lambda <= 0.0) throw std::invalid_argument("tempered_potential: lambda must be > 0");
  if (target.beta < 0.0 || target.beta > 1.0)
    throw std::invalid_argument("tempered_potential: beta must lie in [0, 1]");
  const Prior* prior = target.prior;
  const EnergyModel* energy = target.energy;
  const double scale = target.beta / target.lambda;

  PotentialEvaluator out;
  out.value = [prior, energy, scale](const Vector& theta) -> double {
    double e = 0.0;
    if (scale != 0.0) {
      try {
        e = energy->value(theta);
      } catch (const RolloutDivergence&) {
        return kInf;
      }
    }
    return scale * e - prior->log_density(theta);
  };
  out.gradient = [prior, energy, scale](const Vector& theta) -> Vector {
    Vector g = -prior->grad_log_density(theta);
    if (scale != 0.0) {
      try {
        g += scale * energy->gradient(theta);
      } catch (const RolloutDivergence&) {
        return Vector::Constant(theta.size(), kNaN);
      }
    }
    return g;
  };
  return out;
}

}  // namespace tsmc
