#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tsmc/common.hpp"
#include "tsmc/energy.hpp"
#include "tsmc/mcmc.hpp"
#include "tsmc/parallel.hpp"
#include "tsmc/prior.hpp"
#include "tsmc/rng.hpp"

namespace tsmc {

enum class ResamplingScheme { systematic, multinomial };

struct TsmcConfig {
  int n_particles = 100;
  double ess_ratio = 0.8;      // target ESS fraction rho for adaptive tempering
  double temperature = 0.1;    // lambda of the Boltzmann tilt
  int max_steps = 1000;        // cap on tempering levels
  int moves_per_level = 1;     // rejuvenation sweeps per level
  ResamplingScheme resampling = ResamplingScheme::systematic;
  int n_threads = 0;           // 0 = hardware concurrency

  void validate() const {
    if (n_particles < 2) throw std::invalid_argument("TsmcConfig: n_particles must be >= 2");
    if (!(ess_ratio > 0.0 && ess_ratio < 1.0))
      throw std::invalid_argument("TsmcConfig: ess_ratio must lie in (0, 1)");
    if (temperature <= 0.0) throw std::invalid_argument("TsmcConfig: temperature must be > 0");
    if (max_steps < 1) throw std::invalid_argument("TsmcConfig: max_steps must be >= 1");
    if (moves_per_level < 1) throw std::invalid_argument("TsmcConfig: moves_per_level must be >= 1");
  }
};

struct ParticlePopulation {
  Matrix thetas;       // N x d
  Vector log_weights;  // normalized: log_sum_exp == 0
  double beta = 0.0;
  int step = 0;

  int size() const { return static_cast<int>(thetas.rows()); }
  int dim() const { return static_cast<int>(thetas.cols()); }
};

/// Effective sample size 1 / sum w_i^2 of a (log-)weight vector. The formula
/// exp(2 lse(w) - lse(2w)) is invariant to the normalization constant.
/// -inf entries (zero weight) are legal; NaN or +inf raise WeightError.
inline double ess(const Vector& log_weights) {
  for (Eigen::Index i = 0; i < log_weights.size(); ++i) {
    const double lw = log_weights[i];
    if (std::isnan(lw) || lw == kInf)
      throw WeightError("ess: non-finite weight signals degeneracy upstream");
  }
  const double lse1 = log_sum_exp(log_weights);
  if (lse1 == -kInf) throw WeightError("ess: all weights are zero");
  const double lse2 = log_sum_exp(2.0 * log_weights);
  return std::exp(2.0 * lse1 - lse2);
}

/// In-place weight update for moving from inverse temperature `beta_old` to
/// `beta_new`:  log w_i += -(beta_new - beta_old) / lambda * E_i, then
/// renormalize. Returns the log of the weighted mean incremental weight,
/// i.e. this level's contribution to the log partition-function estimate.
inline double reweight_log_weights(Vector& log_weights, const Vector& energies, double beta_old,
                                   double beta_new, double lambda) {
  if (beta_new < beta_old) throw std::invalid_argument("reweight: beta_new < beta");
  if (lambda <= 0.0) throw std::invalid_argument("reweight: lambda must be > 0");
  if (energies.size() != log_weights.size())
    throw std::invalid_argument("reweight: size mismatch");
  for (Eigen::Index i = 0; i < energies.size(); ++i)
    if (std::isnan(energies[i]) || energies[i] == -kInf)
      throw std::invalid_argument("reweight: energies must not be NaN or -inf");

  const double scale = (beta_new - beta_old) / lambda;
  Vector updated = log_weights;
  for (Eigen::Index i = 0; i < updated.size(); ++i) {
    // exp(-scale * inf) = 0 even when scale == 0: a diverged particle never
    // regains weight.
    if (energies[i] == kInf)
      updated[i] = -kInf;
    else
      updated[i] -= scale * energies[i];
  }
  const double log_mean_increment = log_sum_exp(updated);  // previous weights normalized
  if (log_mean_increment == -kInf)
    throw WeightError("reweight: all incremental weights are zero");
  log_weights = updated.array() - log_mean_increment;
  return log_mean_increment;
}

/// Reweights a population to beta_new; thetas are untouched. Returns this
/// level's log mean incremental weight.
inline double reweight(ParticlePopulation& population, const Vector& energies, double beta_new,
                       double lambda) {
  const double inc =
      reweight_log_weights(population.log_weights, energies, population.beta, beta_new, lambda);
  population.beta = beta_new;
  return inc;
}

struct NextBeta {
  double beta = 1.0;
  bool stalled = false;
};

namespace detail {
inline double ess_after_reweight(const Vector& log_weights, const Vector& energies,
                                 double beta_old, double beta_candidate, double lambda) {
  const double scale = (beta_candidate - beta_old) / lambda;
  Vector updated = log_weights;
  for (Eigen::Index i = 0; i < updated.size(); ++i) {
    if (energies[i] == kInf)
      updated[i] = -kInf;
    else
      updated[i] -= scale * energies[i];
  }
  try {
    return ess(updated);
  } catch (const WeightError&) {
    return 0.0;
  }
}
}  // namespace detail

/// Largest beta' in (beta, 1] whose post-reweight ESS stays >= rho N, located
/// by bisection to 1e-6 absolute tolerance; returns 1 when the endpoint
/// already satisfies the constraint. When not even an infinitesimal move
/// keeps the ESS above target, the schedule is forced forward by 1e-6 and the
/// step is flagged so the loop cannot stall.
inline NextBeta find_next_beta(const ParticlePopulation& population, const Vector& energies,
                               const TsmcConfig& config) {
  constexpr double kTol = 1e-6;
  const double beta = population.beta;
  if (beta >= 1.0) throw std::invalid_argument("find_next_beta: beta already at 1");
  const double target = config.ess_ratio * static_cast<double>(population.size());

  auto ess_at = [&](double b) {
    return detail::ess_after_reweight(population.log_weights, energies, beta, b, config.temperature);
  };

  if (ess_at(1.0) >= target) return {1.0, false};
  if (ess_at(beta) < target) return {std::min(1.0, beta + kTol), true};

  double lo = beta;
  double hi = 1.0;
  while (hi - lo > kTol) {
    const double mid = 0.5 * (lo + hi);
    if (ess_at(mid) >= target)
      lo = mid;
    else
      hi = mid;
  }
  if (lo <= beta) return {std::min(1.0, beta + kTol), true};
  if (1.0 - lo <= kTol) return {1.0, false};
  return {lo, false};
}

/// Ancestor indices for one resampling pass. Both schemes are unbiased:
/// the expected offspring count of particle i is N w_i.
inline std::vector<int> resample_indices(const Vector& log_weights, ResamplingScheme scheme,
                                         RngStream& rng) {
  const int n = static_cast<int>(log_weights.size());
  Vector weights(n);
  const double lse = log_sum_exp(log_weights);
  for (int i = 0; i < n; ++i) weights[i] = std::exp(log_weights[i] - lse);

  std::vector<double> cumulative(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += weights[i];
    cumulative[static_cast<std::size_t>(i)] = acc;
  }
  cumulative.back() = 1.0;

  std::vector<int> ancestors(static_cast<std::size_t>(n));
  if (scheme == ResamplingScheme::systematic) {
    const double offset = rng.uniform();
    int j = 0;
    for (int i = 0; i < n; ++i) {
      const double position = (static_cast<double>(i) + offset) / static_cast<double>(n);
      while (cumulative[static_cast<std::size_t>(j)] < position && j < n - 1) ++j;
      ancestors[static_cast<std::size_t>(i)] = j;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
      ancestors[static_cast<std::size_t>(i)] =
          static_cast<int>(std::distance(cumulative.begin(), it));
    }
  }
  return ancestors;
}

/// Replaces thetas by ancestor copies and resets weights to uniform.
inline std::vector<int> resample(ParticlePopulation& population, ResamplingScheme scheme,
                                 RngStream& rng) {
  const auto ancestors = resample_indices(population.log_weights, scheme, rng);
  Matrix copied(population.thetas.rows(), population.thetas.cols());
  for (int i = 0; i < population.size(); ++i)
    copied.row(i) = population.thetas.row(ancestors[static_cast<std::size_t>(i)]);
  population.thetas = std::move(copied);
  population.log_weights.setConstant(-std::log(static_cast<double>(population.size())));
  return ancestors;
}

enum class RunStatus { success, partial_max_steps };

using EnergyQuantiles = std::array<double, 5>;  // min, q25, median, q75, max

inline EnergyQuantiles energy_quantiles(Vector energies) {
  std::sort(energies.begin(), energies.end());
  const auto n = energies.size();
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return (1.0 - frac) * energies[lo] + frac * energies[hi];
  };
  return {energies[0], quantile(0.25), quantile(0.5), quantile(0.75), energies[n - 1]};
}

/// Full trace of one tempering run. energy_table[k] holds the N particle
/// energies at tempering index k: row 0 is the initial (prior) population,
/// row k the population after level k's rejuvenation.
struct RunRecord {
  std::vector<double> beta_schedule;
  std::vector<double> ess_trace;           // post-reweight ESS per level
  std::vector<double> acceptance_rates;    // rejuvenation acceptance per level
  std::vector<double> log_z_increments;
  std::vector<bool> stall_flags;
  std::vector<Vector> energy_table;
  std::vector<EnergyQuantiles> quantiles;  // one entry per energy_table row
  double log_z_estimate = 0.0;
  bool has_log_z = true;
  int divergences = 0;
  RunStatus status = RunStatus::success;
  ParticlePopulation final_population;
};

namespace detail {

inline Matrix init_thetas(const Prior& prior, int n_particles, std::uint64_t seed) {
  Matrix thetas(n_particles, prior.dim());
  for (int i = 0; i < n_particles; ++i) {
    RngStream rng = substream(seed, stream_tag::kInit, static_cast<std::uint64_t>(i));
    thetas.row(i) = prior.sample(rng);
  }
  return thetas;
}

inline void evaluate_energies(const EnergyModel& energy, const Matrix& thetas, int n_threads,
                              Vector& out) {
  out.resize(thetas.rows());
  parallel_for(static_cast<int>(thetas.rows()), n_threads, [&](int i) {
    try {
      out[i] = energy.value(thetas.row(i));
    } catch (const RolloutDivergence&) {
      out[i] = kInf;
    }
  });
}

}  // namespace detail

/// The tempered SMC loop: adaptively pick the next inverse temperature, apply
/// the incremental importance weights, resample, then rejuvenate each
/// particle with an MCMC kernel that leaves the current tempered target
/// invariant. Terminates when beta reaches exactly 1 (or max_steps is hit, in
/// which case the record is returned with partial status).
inline RunRecord run_tsmc(const EnergyModel& energy, const Prior& prior, const McmcKernel& kernel,
                          const TsmcConfig& config, std::uint64_t seed) {
  config.validate();
  const int n = config.n_particles;

  ParticlePopulation population;
  population.thetas = detail::init_thetas(prior, n, seed);
  population.log_weights = Vector::Constant(n, -std::log(static_cast<double>(n)));
  population.beta = 0.0;
  population.step = 0;

  RunRecord record;
  Vector energies;
  detail::evaluate_energies(energy, population.thetas, config.n_threads, energies);
  record.energy_table.push_back(energies);
  record.quantiles.push_back(energy_quantiles(energies));

  record.status = RunStatus::partial_max_steps;
  for (int level = 1; level <= config.max_steps; ++level) {
    const NextBeta next = find_next_beta(population, energies, config);
    const double log_inc = reweight(population, energies, next.beta, config.temperature);
    const double ess_post = ess(population.log_weights);

    RngStream resample_rng = substream(seed, stream_tag::kResample, static_cast<std::uint64_t>(level));
    resample(population, config.resampling, resample_rng);

    const TemperedTarget target{&prior, &energy, next.beta, config.temperature};
    const PotentialEvaluator potential = tempered_potential(target);

    std::vector<int> accepted(static_cast<std::size_t>(n), 0);
    std::vector<int> divergent(static_cast<std::size_t>(n), 0);
    parallel_for(n, config.n_threads, [&](int i) {
      RngStream rng = substream(seed, stream_tag::kKernel, static_cast<std::uint64_t>(level),
                                static_cast<std::uint64_t>(i));
      Vector theta = population.thetas.row(i);
      for (int move = 0; move < config.moves_per_level; ++move) {
        const StepResult result = kernel.apply(theta, potential, rng);
        theta = result.theta;
        accepted[static_cast<std::size_t>(i)] += result.accepted ? 1 : 0;
        divergent[static_cast<std::size_t>(i)] += result.divergent ? 1 : 0;
      }
      population.thetas.row(i) = theta;
    });

    population.step = level;
    detail::evaluate_energies(energy, population.thetas, config.n_threads, energies);

    const double n_moves = static_cast<double>(n) * config.moves_per_level;
    record.beta_schedule.push_back(next.beta);
    record.ess_trace.push_back(ess_post);
    record.acceptance_rates.push_back(std::accumulate(accepted.begin(), accepted.end(), 0) / n_moves);
    record.log_z_increments.push_back(log_inc);
    record.stall_flags.push_back(next.stalled);
    record.divergences += std::accumulate(divergent.begin(), divergent.end(), 0);
    record.energy_table.push_back(energies);
    record.quantiles.push_back(energy_quantiles(energies));

    if (next.beta >= 1.0) {
      record.status = RunStatus::success;
      break;
    }
  }

  record.log_z_estimate = std::accumulate(record.log_z_increments.begin(),
                                          record.log_z_increments.end(), 0.0);
  record.final_population = std::move(population);
  return record;
}

}  // namespace tsmc
