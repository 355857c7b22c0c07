#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "tsmc/rollout.hpp"
#include "tsmc/smc.hpp"

namespace tsmc {

/// Distribution over initial states (the mu of the policy-optimization
/// objective).
class InitialStateDistribution {
 public:
  virtual ~InitialStateDistribution() = default;
  virtual int dim() const = 0;
  virtual Vector sample(RngStream& rng) const = 0;
  virtual std::string description() const = 0;
};

class UniformBoxDistribution final : public InitialStateDistribution {
 public:
  UniformBoxDistribution(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || (lo_.array() > hi_.array()).any())
      throw std::invalid_argument("UniformBoxDistribution: invalid bounds");
  }
  int dim() const override { return static_cast<int>(lo_.size()); }
  Vector sample(RngStream& rng) const override {
    Vector x(lo_.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x[i] = lo_[i] + (hi_[i] - lo_[i]) * rng.uniform();
    return x;
  }
  std::string description() const override { return "uniform box"; }
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }

 private:
  Vector lo_;
  Vector hi_;
};

class DiracDistribution final : public InitialStateDistribution {
 public:
  explicit DiracDistribution(Vector x0) : x0_(std::move(x0)) {}
  int dim() const override { return static_cast<int>(x0_.size()); }
  Vector sample(RngStream&) const override { return x0_; }
  std::string description() const override { return "dirac"; }

 private:
  Vector x0_;
};

/// One extended-space particle: controller parameters plus its auxiliary
/// batch of initial states, with the per-member rollout costs cached (a
/// diverged member carries +inf).
struct ExtendedParticle {
  Vector theta;
  std::vector<Vector> x0_batch;
  Vector costs;

  double mean_cost() const { return costs.mean(); }
};

/// Batch-averaged rollout cost and its gradient (the mean of per-member
/// adjoint gradients). Rollout divergence propagates with the member index.
inline std::pair<double, Vector> batch_energy(const Vector& theta,
                                              const std::vector<Vector>& x0_batch,
                                              const ControlProblem& problem) {
  if (x0_batch.empty()) throw std::invalid_argument("batch_energy: batch must be nonempty");
  double total = 0.0;
  Vector grad = Vector::Zero(problem.controller->param_dim());
  for (std::size_t b = 0; b < x0_batch.size(); ++b) {
    try {
      const auto [cost, g] = problem.cost_and_gradient(x0_batch[b], theta);
      total += cost;
      grad += g;
    } catch (const RolloutDivergence& err) {
      throw RolloutDivergence(err.step(), static_cast<int>(b));
    }
  }
  const double scale = 1.0 / static_cast<double>(x0_batch.size());
  return {total * scale, grad * scale};
}

/// Log acceptance probability of the initial-state refresh: the proposal is a
/// fresh draw from mu, accepted with min{1, exp(-(J' - J) beta / (lambda B))}.
inline double x0_refresh_log_accept(double cost_new, double cost_old, double beta, double lambda,
                                    int batch_size) {
  if (cost_new == kInf) return -kInf;
  if (cost_old == kInf) return 0.0;
  const double exponent = -(cost_new - cost_old) * beta / (lambda * static_cast<double>(batch_size));
  return std::min(0.0, exponent);
}

/// Metropolis-Hastings refresh of the auxiliary batch, one independent
/// proposal per member, theta held fixed. Returns the number of accepted
/// members. stream_for_member(b) must hand each member its own RNG substream.
inline int x0_refresh(ExtendedParticle& particle, const ControlProblem& problem,
                      const InitialStateDistribution& mu, double beta, double lambda,
                      const std::function<RngStream(int)>& stream_for_member) {
  const int batch_size = static_cast<int>(particle.x0_batch.size());
  int accepted = 0;
  for (int b = 0; b < batch_size; ++b) {
    RngStream rng = stream_for_member(b);
    const Vector proposal = mu.sample(rng);
    double cost_new;
    try {
      cost_new = problem.trajectory_cost(proposal, particle.theta);
    } catch (const RolloutDivergence&) {
      cost_new = kInf;
    }
    const double log_alpha =
        x0_refresh_log_accept(cost_new, particle.costs[b], beta, lambda, batch_size);
    const double u = rng.uniform();
    if (std::log(u) < log_alpha) {
      particle.x0_batch[static_cast<std::size_t>(b)] = proposal;
      particle.costs[b] = cost_new;
      ++accepted;
    }
  }
  return accepted;
}

namespace detail {

inline void refresh_costs(ExtendedParticle& particle, const ControlProblem& problem) {
  const int batch_size = static_cast<int>(particle.x0_batch.size());
  particle.costs.resize(batch_size);
  for (int b = 0; b < batch_size; ++b) {
    try {
      particle.costs[b] =
          problem.trajectory_cost(particle.x0_batch[static_cast<std::size_t>(b)], particle.theta);
    } catch (const RolloutDivergence&) {
      particle.costs[b] = kInf;
    }
  }
}

/// Potential of the conditional target p_k(theta | x0 batch):
///   V(theta) = (beta / lambda) Jbar_B(theta, x0) - log p0(theta).
inline PotentialEvaluator conditional_potential(const ControlProblem& problem,
                                                const std::vector<Vector>& x0_batch,
                                                const Prior& prior, double beta, double lambda) {
  // Operation order mirrors tempered_potential over a RolloutEnergy so that
  // a Dirac initial distribution reproduces the plain sampler bit-for-bit.
  PotentialEvaluator out;
  const double scale = beta / lambda;
  out.value = [&problem, &x0_batch, &prior, scale](const Vector& theta) -> double {
    double total = 0.0;
    for (const Vector& x0 : x0_batch) {
      try {
        total += problem.trajectory_cost(x0, theta);
      } catch (const RolloutDivergence&) {
        return kInf;
      }
    }
    const double mean = total / static_cast<double>(x0_batch.size());
    return scale * mean - prior.log_density(theta);
  };
  out.gradient = [&problem, &x0_batch, &prior, scale](const Vector& theta) -> Vector {
    Vector grad = Vector::Zero(theta.size());
    for (const Vector& x0 : x0_batch) {
      try {
        grad += problem.cost_and_gradient(x0, theta).second;
      } catch (const RolloutDivergence&) {
        return Vector::Constant(theta.size(), kNaN);
      }
    }
    Vector out_grad = -prior.grad_log_density(theta);
    out_grad += scale * (grad / static_cast<double>(x0_batch.size())).eval();
    return out_grad;
  };
  return out;
}

}  // namespace detail

/// Extended-space tempered SMC for policy optimization: each particle carries
/// (theta, x0 batch); levels reweight by the batch-averaged cost, resample
/// jointly (a theta travels with the batch it was weighted with), move theta
/// by HMC on the conditional potential, then refresh the batch by per-member
/// Metropolis-Hastings. Record semantics match run_tsmc, with energies being
/// the per-particle batch means.
inline RunRecord run_extended_tsmc(const ControlProblem& problem,
                                   const InitialStateDistribution& mu, const Prior& prior,
                                   const McmcKernel& kernel, const TsmcConfig& config,
                                   int batch_size, std::uint64_t seed) {
  config.validate();
  if (batch_size < 1) throw std::invalid_argument("run_extended_tsmc: batch_size must be >= 1");
  const int n = config.n_particles;
  const int d = prior.dim();

  std::vector<ExtendedParticle> particles(static_cast<std::size_t>(n));
  parallel_for(n, config.n_threads, [&](int i) {
    auto& particle = particles[static_cast<std::size_t>(i)];
    RngStream theta_rng = substream(seed, stream_tag::kInit, static_cast<std::uint64_t>(i));
    particle.theta = prior.sample(theta_rng);
    particle.x0_batch.resize(static_cast<std::size_t>(batch_size));
    for (int b = 0; b < batch_size; ++b) {
      RngStream x0_rng = substream(seed, stream_tag::kInitState, static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(b));
      particle.x0_batch[static_cast<std::size_t>(b)] = mu.sample(x0_rng);
    }
    detail::refresh_costs(particle, problem);
  });

  Vector log_weights = Vector::Constant(n, -std::log(static_cast<double>(n)));
  double beta = 0.0;

  auto batch_means = [&]() {
    Vector means(n);
    for (int i = 0; i < n; ++i) means[i] = particles[static_cast<std::size_t>(i)].mean_cost();
    return means;
  };

  RunRecord record;
  Vector energies = batch_means();
  record.energy_table.push_back(energies);
  record.quantiles.push_back(energy_quantiles(energies));

  record.status = RunStatus::partial_max_steps;
  for (int level = 1; level <= config.max_steps; ++level) {
    ParticlePopulation view;  // weight-level state shared with the plain sampler
    view.thetas = Matrix::Zero(n, 1);
    view.log_weights = log_weights;
    view.beta = beta;
    const NextBeta next = find_next_beta(view, energies, config);
    const double log_inc =
        reweight_log_weights(log_weights, energies, beta, next.beta, config.temperature);
    beta = next.beta;
    const double ess_post = ess(log_weights);

    RngStream resample_rng = substream(seed, stream_tag::kResample, static_cast<std::uint64_t>(level));
    const auto ancestors = resample_indices(log_weights, config.resampling, resample_rng);
    std::vector<ExtendedParticle> resampled(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      resampled[static_cast<std::size_t>(i)] = particles[static_cast<std::size_t>(ancestors[static_cast<std::size_t>(i)])];
    particles = std::move(resampled);
    log_weights.setConstant(-std::log(static_cast<double>(n)));

    std::vector<int> accepted(static_cast<std::size_t>(n), 0);
    std::vector<int> divergent(static_cast<std::size_t>(n), 0);
    parallel_for(n, config.n_threads, [&](int i) {
      auto& particle = particles[static_cast<std::size_t>(i)];
      const PotentialEvaluator potential = detail::conditional_potential(
          problem, particle.x0_batch, prior, beta, config.temperature);

      RngStream rng = substream(seed, stream_tag::kKernel, static_cast<std::uint64_t>(level),
                                static_cast<std::uint64_t>(i));
      bool moved = false;
      Vector theta = particle.theta;
      for (int move = 0; move < config.moves_per_level; ++move) {
        const StepResult result = kernel.apply(theta, potential, rng);
        theta = result.theta;
        moved = moved || result.accepted;
        accepted[static_cast<std::size_t>(i)] += result.accepted ? 1 : 0;
        divergent[static_cast<std::size_t>(i)] += result.divergent ? 1 : 0;
      }
      particle.theta = theta;
      if (moved) detail::refresh_costs(particle, problem);

      x0_refresh(particle, problem, mu, beta, config.temperature, [&](int b) {
        return substream(seed, stream_tag::kRefresh, static_cast<std::uint64_t>(level),
                         static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(b));
      });
    });

    energies = batch_means();
    const double n_moves = static_cast<double>(n) * config.moves_per_level;
    record.beta_schedule.push_back(beta);
    record.ess_trace.push_back(ess_post);
    record.acceptance_rates.push_back(std::accumulate(accepted.begin(), accepted.end(), 0) / n_moves);
    record.log_z_increments.push_back(log_inc);
    record.stall_flags.push_back(next.stalled);
    record.divergences += std::accumulate(divergent.begin(), divergent.end(), 0);
    record.energy_table.push_back(energies);
    record.quantiles.push_back(energy_quantiles(energies));

    if (beta >= 1.0) {
      record.status = RunStatus::success;
      break;
    }
  }

  record.log_z_estimate = std::accumulate(record.log_z_increments.begin(),
                                          record.log_z_increments.end(), 0.0);
  record.final_population.thetas.resize(n, d);
  for (int i = 0; i < n; ++i)
    record.final_population.thetas.row(i) = particles[static_cast<std::size_t>(i)].theta;
  record.final_population.log_weights = log_weights;
  record.final_population.beta = beta;
  return record;
}

/// Freezes a batch of initial states drawn from mu with the master seed: the
/// deterministic policy-optimization surrogate. The batch never changes
/// afterwards, so the resulting energy is an ordinary deterministic target.
inline std::vector<Vector> frozen_initial_batch(const InitialStateDistribution& mu, int batch_size,
                                                std::uint64_t seed) {
  std::vector<Vector> batch(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) {
    RngStream rng = substream(seed, stream_tag::kBatch, static_cast<std::uint64_t>(b));
    batch[static_cast<std::size_t>(b)] = mu.sample(rng);
  }
  return batch;
}

}  // namespace tsmc
