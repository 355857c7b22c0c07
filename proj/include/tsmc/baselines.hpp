#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tsmc/smc.hpp"

namespace tsmc {

struct MppiConfig {
  int n_rollouts = 64;      // perturbations per update
  double noise_sigma = 0.3;
  double temperature = 0.1;  // exponential weighting of costs
  int n_updates = 64;

  void validate() const {
    if (n_rollouts < 1) throw std::invalid_argument("MppiConfig: n_rollouts must be >= 1");
    if (noise_sigma <= 0.0) throw std::invalid_argument("MppiConfig: noise_sigma must be > 0");
    if (temperature <= 0.0) throw std::invalid_argument("MppiConfig: temperature must be > 0");
    if (n_updates < 1) throw std::invalid_argument("MppiConfig: n_updates must be >= 1");
  }
};

struct MppiUpdateResult {
  Vector theta;
  bool all_divergent = false;
};

/// One path-integral update: sample K perturbations of the nominal, weight
/// them by exp(-cost / temperature) (costs shifted by their minimum before
/// exponentiation), and return the weighted average of the perturbed
/// parameters. Gradient-free. If every perturbation diverges the nominal is
/// returned unchanged with a flag.
inline MppiUpdateResult mppi_update(const Vector& nominal_theta, const EnergyModel& energy,
                                    const MppiConfig& config, RngStream& rng) {
  config.validate();
  const int k = config.n_rollouts;
  const Eigen::Index d = nominal_theta.size();

  Matrix samples(k, d);
  Vector costs(k);
  for (int s = 0; s < k; ++s) {
    Vector perturbed(d);
    for (Eigen::Index j = 0; j < d; ++j)
      perturbed[j] = nominal_theta[j] + config.noise_sigma * rng.normal();
    samples.row(s) = perturbed;
    try {
      const double c = energy.value(perturbed);
      costs[s] = std::isfinite(c) ? c : kInf;
    } catch (const RolloutDivergence&) {
      costs[s] = kInf;
    }
  }

  const double min_cost = costs.minCoeff();
  if (min_cost == kInf) return {nominal_theta, true};

  Vector weights(k);
  for (int s = 0; s < k; ++s)
    weights[s] = costs[s] == kInf ? 0.0 : std::exp(-(costs[s] - min_cost) / config.temperature);
  weights /= weights.sum();

  Vector updated = Vector::Zero(d);
  for (int s = 0; s < k; ++s) updated += weights[s] * samples.row(s).transpose();
  return {updated, false};
}

/// N independent MPPI optimizers, one per initial particle (shared with the
/// sampler's initialization). The record carries initial and final energies;
/// tempering fields hold the single degenerate level.
inline RunRecord run_parallel_mppi(const EnergyModel& energy, const Prior& prior,
                                   const MppiConfig& config, int n_particles, int n_threads,
                                   std::uint64_t seed) {
  config.validate();
  ParticlePopulation population;
  population.thetas = detail::init_thetas(prior, n_particles, seed);
  population.log_weights = Vector::Constant(n_particles, -std::log(static_cast<double>(n_particles)));

  RunRecord record;
  Vector energies;
  detail::evaluate_energies(energy, population.thetas, n_threads, energies);
  record.energy_table.push_back(energies);
  record.quantiles.push_back(energy_quantiles(energies));

  parallel_for(n_particles, n_threads, [&](int i) {
    Vector theta = population.thetas.row(i);
    for (int update = 0; update < config.n_updates; ++update) {
      RngStream rng = substream(seed, stream_tag::kMppi, static_cast<std::uint64_t>(i),
                                static_cast<std::uint64_t>(update));
      theta = mppi_update(theta, energy, config, rng).theta;
    }
    population.thetas.row(i) = theta;
  });

  detail::evaluate_energies(energy, population.thetas, n_threads, energies);
  record.energy_table.push_back(energies);
  record.quantiles.push_back(energy_quantiles(energies));
  record.beta_schedule = {1.0};
  record.ess_trace = {static_cast<double>(n_particles)};
  record.acceptance_rates = {1.0};
  record.log_z_increments = {0.0};
  record.stall_flags = {false};
  record.has_log_z = false;
  record.log_z_estimate = kNaN;
  population.beta = 1.0;
  record.final_population = std::move(population);
  record.status = RunStatus::success;
  return record;
}

struct ParallelChainConfig {
  int n_particles = 100;
  int n_steps = 1000;  // kernel applications per chain
  double temperature = 0.1;
  int n_threads = 0;

  void validate() const {
    if (n_particles < 2) throw std::invalid_argument("ParallelChainConfig: n_particles must be >= 2");
    if (n_steps < 0) throw std::invalid_argument("ParallelChainConfig: n_steps must be >= 0");
    if (temperature <= 0.0)
      throw std::invalid_argument("ParallelChainConfig: temperature must be > 0");
  }
};

/// N independent MCMC chains targeting the full Boltzmann tilt directly
/// (beta fixed at 1), starting from the same prior draws the tempered
/// sampler would use. A zero budget returns the prior particles untouched.
inline RunRecord run_parallel_chains(const EnergyModel& energy, const Prior& prior,
                                     const McmcKernel& kernel, const ParallelChainConfig& config,
                                     std::uint64_t seed) {
  config.validate();
  const int n = config.n_particles;

  ParticlePopulation population;
  population.thetas = detail::init_thetas(prior, n, seed);
  population.log_weights = Vector::Constant(n, -std::log(static_cast<double>(n)));
  population.beta = 1.0;

  RunRecord record;
  Vector energies;
  detail::evaluate_energies(energy, population.thetas, config.n_threads, energies);
  record.energy_table.push_back(energies);
  record.quantiles.push_back(energy_quantiles(energies));

  const TemperedTarget target{&prior, &energy, 1.0, config.temperature};
  const PotentialEvaluator potential = tempered_potential(target);

  std::vector<int> accepted(static_cast<std::size_t>(n), 0);
  std::vector<int> divergent(static_cast<std::size_t>(n), 0);
  parallel_for(n, config.n_threads, [&](int i) {
    RngStream rng = substream(seed, stream_tag::kKernel, 1, static_cast<std::uint64_t>(i));
    Vector theta = population.thetas.row(i);
    for (int step = 0; step < config.n_steps; ++step) {
      const StepResult result = kernel.apply(theta, potential, rng);
      theta = result.theta;
      accepted[static_cast<std::size_t>(i)] += result.accepted ? 1 : 0;
      divergent[static_cast<std::size_t>(i)] += result.divergent ? 1 : 0;
    }
    population.thetas.row(i) = theta;
  });

  detail::evaluate_energies(energy, population.thetas, config.n_threads, energies);
  record.energy_table.push_back(energies);
  record.quantiles.push_back(energy_quantiles(energies));
  record.beta_schedule = {1.0};
  record.ess_trace = {static_cast<double>(n)};
  const double total_moves = std::max(1.0, static_cast<double>(n) * config.n_steps);
  record.acceptance_rates = {std::accumulate(accepted.begin(), accepted.end(), 0) / total_moves};
  record.log_z_increments = {0.0};
  record.stall_flags = {false};
  record.divergences = std::accumulate(divergent.begin(), divergent.end(), 0);
  record.has_log_z = false;
  record.log_z_estimate = kNaN;
  record.final_population = std::move(population);
  record.status = RunStatus::success;
  return record;
}

}  // namespace tsmc
