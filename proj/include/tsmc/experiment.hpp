#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsmc/baselines.hpp"
#include "tsmc/config.hpp"
#include "tsmc/controllers.hpp"
#include "tsmc/envs/acrobot.hpp"
#include "tsmc/envs/cart_double_pendulum.hpp"
#include "tsmc/envs/costs.hpp"
#include "tsmc/envs/lti.hpp"
#include "tsmc/envs/pendulum.hpp"
#include "tsmc/envs/shekel.hpp"
#include "tsmc/extended.hpp"
#include "tsmc/fd_check.hpp"
#include "tsmc/io.hpp"
#include "tsmc/policy/mlp.hpp"
#include "tsmc/smc.hpp"

namespace tsmc {

struct BuiltEnvironment {
  std::shared_ptr<Prior> prior;
  std::shared_ptr<EnergyModel> energy;
  ControlProblem problem;  // valid iff control_based
  std::shared_ptr<InitialStateDistribution> mu;  // set for policy-optimization tasks
  bool control_based = false;
  ParamsLayout layout = ParamsLayout::raw;
};

namespace detail {

inline Squash squash_from(const std::string& name) {
  if (name == "tanh") return Squash::tanh_scaled;
  if (name == "clip") return Squash::clip;
  return Squash::none;
}

inline std::shared_ptr<Prior> control_prior(const ExperimentConfig& c, int horizon,
                                            int control_dim, const std::string& default_kind,
                                            double default_gauss_sigma) {
  const std::string kind = c.prior_kind.empty() ? default_kind : c.prior_kind;
  const bool gauss_sigma_explicit = c.explicit_keys.count("prior.gauss_sigma") > 0;
  const double gauss_sigma = gauss_sigma_explicit ? c.prior_gauss_sigma : default_gauss_sigma;
  if (kind == "ar1")
    return std::make_shared<Ar1ControlPrior>(c.prior_gamma, c.prior_sigma, horizon, control_dim);
  return std::make_shared<GaussianIidPrior>(horizon * control_dim, gauss_sigma);
}

inline std::shared_ptr<Prior> mlp_prior(const ExperimentConfig& c, int param_dim,
                                        double default_sigma = 0.5) {
  const bool gauss_sigma_explicit = c.explicit_keys.count("prior.gauss_sigma") > 0;
  return std::make_shared<GaussianIidPrior>(param_dim,
                                            gauss_sigma_explicit ? c.prior_gauss_sigma : default_sigma);
}

inline MlpSpec mlp_spec(const ExperimentConfig& c, int input_dim, int output_dim, double u_max) {
  MlpSpec spec;
  spec.layer_sizes = {input_dim, c.mlp_hidden, c.mlp_hidden, output_dim};
  spec.with_bias = c.mlp_bias;
  spec.output_squash = Squash::tanh_scaled;
  spec.u_max = u_max;
  return spec;
}

}  // namespace detail

/// Assembles the prior, energy, and (for control tasks) the rollout problem
/// for one configured experiment. Energies of policy-optimization tasks with
/// random initial states use a batch frozen from the master seed, the
/// deterministic surrogate; the extended sampler bypasses the frozen energy.
inline BuiltEnvironment build_environment(const ExperimentConfig& c) {
  BuiltEnvironment built;
  const auto squash = detail::squash_from(c.squash);

  if (c.environment == "shekel") {
    built.energy = std::make_shared<envs::ShekelEnergy>();
    const bool sigma_explicit = c.explicit_keys.count("prior.gauss_sigma") > 0;
    built.prior = std::make_shared<GaussianIidPrior>(2, sigma_explicit ? c.prior_gauss_sigma : 1.0);
    built.layout = ParamsLayout::raw;
    return built;
  }

  built.control_based = true;
  if (c.environment == "pendulum") {
    envs::PendulumParams params;
    if (c.horizon > 0) params.horizon = c.horizon;
    if (c.u_max > 0) params.u_max = c.u_max;
    built.problem.dynamics = std::make_shared<envs::PendulumDynamics>(params);
    built.problem.horizon = params.horizon;
    built.problem.cost = std::make_shared<envs::QuadraticGoalCost>(
        (Vector(2) << M_PI, 0.0).finished(), (Vector(2) << 1.0, 0.1).finished(),
        Vector::Constant(1, 0.1), (Vector(2) << 10.0, 1.0).finished());
    built.problem.controller =
        std::make_shared<OpenLoopController>(params.horizon, 1, squash, params.u_max);
    built.prior = detail::control_prior(c, params.horizon, 1, "ar1", 0.5);
    built.mu.reset();
    built.energy = make_energy(built.problem, {Vector::Zero(2)});
    built.layout = ParamsLayout::open_loop_controls;
    return built;
  }
  if (c.environment == "acrobot" || c.environment == "acrobot_po") {
    envs::AcrobotParams params;
    const bool po = c.environment == "acrobot_po";
    params.dt = po ? 0.04 : 0.025;
    int horizon = po ? 100 : 200;
    if (c.horizon > 0) horizon = c.horizon;
    if (c.u_max > 0) params.u_max = c.u_max;
    built.problem.dynamics =
        std::make_shared<envs::Rk4Dynamics>(std::make_shared<envs::AcrobotContinuous>(params), params.dt);
    built.problem.horizon = horizon;
    built.problem.cost = std::make_shared<envs::QuadraticGoalCost>(
        (Vector(4) << M_PI, 0.0, 0.0, 0.0).finished(),
        (Vector(4) << 1.0, 1.0, 0.1, 0.1).finished(), Vector::Constant(1, 0.01),
        (Vector(4) << 50.0, 50.0, 5.0, 5.0).finished());
    if (po) {
      auto policy = MlpPolicy(detail::mlp_spec(c, 4, 1, params.u_max));
      built.prior = detail::mlp_prior(c, policy.param_dim());
      built.problem.controller = std::make_shared<MlpController>(
          std::move(policy), std::make_shared<IdentityEncoder>(4));
      built.layout = ParamsLayout::mlp_row_major_v1;
    } else {
      built.problem.controller =
          std::make_shared<OpenLoopController>(horizon, 1, squash, params.u_max);
      built.prior = detail::control_prior(c, horizon, 1, "ar1", 0.5);
      built.layout = ParamsLayout::open_loop_controls;
    }
    built.energy = make_energy(built.problem, {Vector::Zero(4)});
    return built;
  }
  if (c.environment == "cart_double_pendulum" || c.environment == "cart_double_pendulum_po") {
    envs::CartDoublePendulumParams params;
    const bool po = c.environment == "cart_double_pendulum_po";
    int horizon = params.horizon;
    if (c.horizon > 0) horizon = c.horizon;
    if (c.u_max > 0) params.u_max = c.u_max;
    built.problem.dynamics = std::make_shared<envs::Rk4Dynamics>(
        std::make_shared<envs::CartDoublePendulumContinuous>(params), params.dt);
    built.problem.horizon = horizon;
    built.problem.cost = std::make_shared<envs::QuadraticGoalCost>(
        (Vector(6) << 0.0, M_PI, M_PI, 0.0, 0.0, 0.0).finished(),
        (Vector(6) << 0.5, 1.0, 1.0, 0.05, 0.05, 0.05).finished(), Vector::Constant(1, 0.01),
        (Vector(6) << 10.0, 50.0, 50.0, 5.0, 5.0, 5.0).finished());
    if (po) {
      auto policy = MlpPolicy(detail::mlp_spec(c, 6, 1, params.u_max));
      built.prior = detail::mlp_prior(c, policy.param_dim());
      built.problem.controller = std::make_shared<MlpController>(
          std::move(policy), std::make_shared<IdentityEncoder>(6));
      built.layout = ParamsLayout::mlp_row_major_v1;
    } else {
      built.problem.controller =
          std::make_shared<OpenLoopController>(horizon, 1, squash, params.u_max);
      built.prior = detail::control_prior(c, horizon, 1, "ar1", 0.5);
      built.layout = ParamsLayout::open_loop_controls;
    }
    built.energy = make_energy(built.problem, {Vector::Zero(6)});
    return built;
  }
  if (c.environment == "pendulum_sparse") {
    envs::PendulumParams params;
    params.horizon = 32;
    if (c.horizon > 0) params.horizon = c.horizon;
    if (c.u_max > 0) params.u_max = c.u_max;
    auto split = std::make_shared<envs::PendulumTipSplit>(params.length);
    built.problem.dynamics = std::make_shared<envs::PendulumDynamics>(params);
    built.problem.horizon = params.horizon;
    built.problem.cost = std::make_shared<envs::SparseTerminalCost>(
        split, split->goal_position(), split->goal_velocity());

    const bool raw = c.encoding == "raw";
    std::shared_ptr<StateEncoder> encoder;
    if (raw)
      encoder = std::make_shared<IdentityEncoder>(2);
    else
      encoder = std::make_shared<SplitEncoder>(split);
    auto policy = MlpPolicy(detail::mlp_spec(c, encoder->feature_dim(), 1, params.u_max));
    built.prior = detail::mlp_prior(c, policy.param_dim());
    built.problem.controller = std::make_shared<MlpController>(std::move(policy), encoder);
    built.layout = ParamsLayout::mlp_row_major_v1;

    built.mu = std::make_shared<UniformBoxDistribution>((Vector(2) << -M_PI, -M_PI).finished(),
                                                        (Vector(2) << M_PI, M_PI).finished());
    built.energy =
        make_energy(built.problem, frozen_initial_batch(*built.mu, c.batch_size, c.seed));
    return built;
  }
  if (c.environment == "lti" || c.environment == "lti_po") {
    const bool po = c.environment == "lti_po";
    const int horizon = c.horizon > 0 ? c.horizon : 5;
    built.problem.dynamics = std::make_shared<envs::ScalarLtiDynamics>(0.9, 1.0);
    built.problem.horizon = horizon;
    built.problem.cost = std::make_shared<envs::QuadraticGoalCost>(
        Vector::Zero(1), Vector::Constant(1, 1.0), Vector::Constant(1, 0.5),
        Vector::Constant(1, 2.0));
    const Squash lti_squash =
        c.explicit_keys.count("env.squash") ? squash : Squash::none;
    built.problem.controller = std::make_shared<OpenLoopController>(
        horizon, 1, lti_squash, c.u_max > 0 ? c.u_max : 2.0);
    built.prior = detail::control_prior(c, horizon, 1, "gaussian", 0.5);
    built.layout = ParamsLayout::open_loop_controls;
    if (po) {
      built.mu = std::make_shared<UniformBoxDistribution>(Vector::Constant(1, -1.0),
                                                          Vector::Constant(1, 1.0));
      built.energy =
          make_energy(built.problem, frozen_initial_batch(*built.mu, c.batch_size, c.seed));
    } else {
      built.energy = make_energy(built.problem, {Vector::Constant(1, 1.0)});
    }
    return built;
  }
  throw ConfigError("config error: unknown environment '" + c.environment + "'");
}

inline McmcKernel kernel_from(const ExperimentConfig& c) {
  McmcKernel kernel;
  if (c.method == "parallel_mala") {
    kernel.type = McmcKernel::Type::mala;
    kernel.mala_step_size = c.mala_step_size;
  } else {
    kernel.type = McmcKernel::Type::hmc;
    kernel.hmc.step_size = c.hmc_step_size;
    kernel.hmc.max_leapfrog_steps = c.hmc_max_leapfrog;
    kernel.hmc.length_strategy =
        c.hmc_length == "fixed" ? LeapfrogLength::fixed : LeapfrogLength::jittered;
  }
  return kernel;
}

inline TsmcConfig tsmc_config_from(const ExperimentConfig& c) {
  TsmcConfig config;
  config.n_particles = c.n_particles;
  config.ess_ratio = c.ess_ratio;
  config.temperature = c.temperature;
  config.max_steps = c.max_steps;
  config.moves_per_level = c.moves_per_level;
  config.resampling =
      c.resampling == "multinomial" ? ResamplingScheme::multinomial : ResamplingScheme::systematic;
  config.n_threads = c.threads;
  return config;
}

/// Runs the configured method and returns its record. Validation must have
/// happened already (run_experiment validates before any compute).
inline RunRecord dispatch_method(const ExperimentConfig& c, const BuiltEnvironment& built) {
  const McmcKernel kernel = kernel_from(c);
  if (c.method == "tsmc") {
    return run_tsmc(*built.energy, *built.prior, kernel, tsmc_config_from(c), c.seed);
  }
  if (c.method == "tsmc_extended") {
    return run_extended_tsmc(built.problem, *built.mu, *built.prior, kernel, tsmc_config_from(c),
                             c.batch_size, c.seed);
  }
  if (c.method == "parallel_hmc" || c.method == "parallel_mala") {
    ParallelChainConfig config;
    config.n_particles = c.n_particles;
    config.n_steps = c.chain_steps;
    config.temperature = c.temperature;
    config.n_threads = c.threads;
    return run_parallel_chains(*built.energy, *built.prior, kernel, config, c.seed);
  }
  if (c.method == "mppi") {
    MppiConfig config;
    config.n_rollouts = c.mppi_rollouts;
    config.noise_sigma = c.mppi_noise;
    config.temperature = c.mppi_temperature > 0 ? c.mppi_temperature : c.temperature;
    config.n_updates = c.mppi_updates;
    return run_parallel_mppi(*built.energy, *built.prior, config, c.n_particles, c.threads, c.seed);
  }
  throw ConfigError("config error: unknown method '" + c.method + "'");
}

struct RunArtifact {
  std::string run_dir;
  RunStatus status = RunStatus::success;
  double best_final_energy = kNaN;
  double median_final_energy = kNaN;
  double log_z = kNaN;
  int n_levels = 0;
};

inline std::string output_root() {
  const char* env = std::getenv("TSMC_OUTPUT_ROOT");
  return env && *env ? env : ".";
}

/// Executes one experiment and persists the artifact set:
/// config.snapshot, schedule.csv, energies.csv, params.bin, trace.svg and
/// summary.json inside <output root>/<output_dir>/seed<seed>/.
inline RunArtifact run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const BuiltEnvironment built = build_environment(config);

  const auto start = std::chrono::steady_clock::now();
  const RunRecord record = dispatch_method(config, built);
  const double wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  namespace fs = std::filesystem;
  const fs::path dir = fs::path(output_root()) /
                       (config.output_dir.empty() ? config.name : config.output_dir) /
                       ("seed" + std::to_string(config.seed));
  fs::create_directories(dir);

  write_text_file((dir / "config.snapshot").string(), serialize_config(config));

  CsvTable schedule;
  schedule.columns = {"level", "beta", "ess", "acceptance_rate", "log_z_increment", "stalled"};
  for (std::size_t k = 0; k < record.beta_schedule.size(); ++k) {
    schedule.rows.push_back({std::to_string(k + 1), format_double(record.beta_schedule[k]),
                             format_double(record.ess_trace[k]),
                             format_double(record.acceptance_rates[k]),
                             format_double(record.log_z_increments[k]),
                             record.stall_flags[k] ? "1" : "0"});
  }
  write_csv((dir / "schedule.csv").string(), schedule);

  CsvTable energies;
  energies.columns = {"level", "particle", "energy"};
  for (std::size_t level = 0; level < record.energy_table.size(); ++level) {
    const Vector& row = record.energy_table[level];
    for (Eigen::Index i = 0; i < row.size(); ++i)
      energies.rows.push_back(
          {std::to_string(level), std::to_string(i), format_double(row[i])});
  }
  write_csv((dir / "energies.csv").string(), energies);

  write_params((dir / "params.bin").string(), record.final_population.thetas, built.layout);

  std::vector<std::pair<std::string, std::vector<double>>> traces;
  traces.emplace_back("beta", record.beta_schedule);
  std::vector<double> ess_fraction;
  for (double e : record.ess_trace) ess_fraction.push_back(e / config.n_particles);
  traces.emplace_back("ess / N", ess_fraction);
  std::vector<double> medians;
  for (const auto& q : record.quantiles) medians.push_back(q[2]);
  traces.emplace_back("median energy", medians);
  write_text_file((dir / "trace.svg").string(), svg_traces(traces, config.name));

  const Vector& final_energies = record.energy_table.back();
  double best = kInf;
  for (Eigen::Index i = 0; i < final_energies.size(); ++i)
    best = std::min(best, final_energies[i]);
  const double median = record.quantiles.back()[2];

  nlohmann::json summary;
  summary["name"] = config.name;
  summary["method"] = config.method;
  summary["environment"] = config.environment;
  summary["seed"] = config.seed;
  summary["status"] = record.status == RunStatus::success ? "success" : "partial";
  summary["n_levels"] = record.beta_schedule.size();
  summary["n_particles"] = config.n_particles;
  summary["theta_dim"] = record.final_population.dim();
  if (record.has_log_z)
    summary["log_z_estimate"] = record.log_z_estimate;
  else
    summary["log_z_estimate"] = nullptr;
  summary["best_final_energy"] = best;
  summary["median_final_energy"] = median;
  summary["initial_median_energy"] = record.quantiles.front()[2];
  summary["divergences"] = record.divergences;
  int stalls = 0;
  for (bool s : record.stall_flags) stalls += s ? 1 : 0;
  summary["stall_steps"] = stalls;
  summary["wall_time_seconds"] = wall_seconds;
  write_text_file((dir / "summary.json").string(), summary.dump(2) + "\n");

  RunArtifact artifact;
  artifact.run_dir = dir.string();
  artifact.status = record.status;
  artifact.best_final_energy = best;
  artifact.median_final_energy = median;
  artifact.log_z = record.has_log_z ? record.log_z_estimate : kNaN;
  artifact.n_levels = static_cast<int>(record.beta_schedule.size());
  return artifact;
}

// --- Cross-run summaries. ---

struct MethodSummary {
  std::string method;
  int n_runs = 0;
  double pooled_q25 = 0, pooled_median = 0, pooled_q75 = 0;
  double pooled_min = 0, pooled_max = 0;
  double median_best = 0;  // median over runs of each run's best final energy
  double min_best = 0;
};

struct ComparisonTable {
  std::string environment;
  std::vector<MethodSummary> methods;
};

inline ComparisonTable summarize_runs(const std::vector<std::string>& run_dirs) {
  if (run_dirs.empty()) throw std::runtime_error("summarize: no run directories given");
  namespace fs = std::filesystem;

  struct PerMethod {
    std::vector<double> pooled;
    std::vector<double> bests;
  };
  std::map<std::string, PerMethod> by_method;
  std::string environment;

  for (const auto& dir : run_dirs) {
    std::ifstream in(fs::path(dir) / "summary.json");
    if (!in) throw std::runtime_error("summarize: missing summary.json in " + dir);
    nlohmann::json summary = nlohmann::json::parse(in);
    const std::string env = summary.at("environment");
    if (environment.empty()) {
      environment = env;
    } else if (environment != env) {
      throw std::runtime_error("summarize: runs mix environments '" + environment + "' and '" +
                               env + "'; refusing to compare their energies");
    }
    const std::string method = summary.at("method");

    const CsvTable energies = read_csv((fs::path(dir) / "energies.csv").string());
    int final_level = 0;
    for (const auto& row : energies.rows) final_level = std::max(final_level, std::stoi(row[0]));
    double best = kInf;
    auto& bucket = by_method[method];
    for (const auto& row : energies.rows) {
      if (std::stoi(row[0]) != final_level) continue;
      const double e = std::stod(row[2]);
      bucket.pooled.push_back(e);
      best = std::min(best, e);
    }
    bucket.bests.push_back(best);
  }

  auto quantile_of = [](std::vector<double>& values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return (1.0 - frac) * values[lo] + frac * values[hi];
  };

  ComparisonTable table;
  table.environment = environment;
  for (auto& [method, bucket] : by_method) {
    MethodSummary row;
    row.method = method;
    row.n_runs = static_cast<int>(bucket.bests.size());
    row.pooled_q25 = quantile_of(bucket.pooled, 0.25);
    row.pooled_median = quantile_of(bucket.pooled, 0.5);
    row.pooled_q75 = quantile_of(bucket.pooled, 0.75);
    row.pooled_min = bucket.pooled.front();
    row.pooled_max = bucket.pooled.back();
    row.median_best = quantile_of(bucket.bests, 0.5);
    row.min_best = bucket.bests.front();
    table.methods.push_back(row);
  }
  return table;
}

inline std::string render_comparison(const ComparisonTable& table) {
  std::ostringstream out;
  out << "environment: " << table.environment << "\n";
  out << "method            runs  best(min)     best(median)  q25           median        q75\n";
  for (const auto& m : table.methods) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-17s %4d  %-13.6g %-13.6g %-13.6g %-13.6g %-13.6g\n",
                  m.method.c_str(), m.n_runs, m.min_best, m.median_best, m.pooled_q25,
                  m.pooled_median, m.pooled_q75);
    out << line;
  }
  return out.str();
}

inline std::string comparison_boxplot_svg(const ComparisonTable& table) {
  std::vector<BoxStats> boxes;
  for (const auto& m : table.methods) {
    BoxStats box;
    box.label = m.method;
    box.min = m.pooled_min;
    box.q25 = m.pooled_q25;
    box.median = m.pooled_median;
    box.q75 = m.pooled_q75;
    box.max = m.pooled_max;
    boxes.push_back(box);
  }
  return svg_boxplot(boxes, "final particle energies: " + table.environment);
}

// --- Gradient validation for the check-gradients command. ---

struct GradientCheck {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 1e-5;
  bool pass() const { return max_rel_error < tolerance; }
};

inline std::vector<GradientCheck> check_gradients(const std::string& environment, int trials = 20,
                                                  std::uint64_t seed = 12345) {
  ExperimentConfig config;
  config.environment = environment;
  config.method = config_detail::is_po_environment(environment) &&
                          config_detail::has_random_initial_state(environment)
                      ? "tsmc_extended"
                      : "tsmc";
  config.batch_size = 4;
  validate_config(config);
  const BuiltEnvironment built = build_environment(config);
  RngStream rng = substream(seed, 0xFD);

  std::vector<GradientCheck> checks;

  if (!built.control_based) {
    GradientCheck check;
    check.name = environment + ".energy_gradient";
    for (int t = 0; t < trials; ++t) {
      Vector theta(built.energy->dim());
      for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = 2.0 * rng.normal();
      const Vector fd = fd_gradient([&](const Vector& p) { return built.energy->value(p); }, theta);
      check.max_rel_error =
          std::max(check.max_rel_error, fd_relative_error(built.energy->gradient(theta), fd));
    }
    checks.push_back(check);
    return checks;
  }

  const auto& problem = built.problem;
  const int n = problem.dynamics->state_dim();
  const int m = problem.dynamics->control_dim();

  GradientCheck dyn_x{environment + ".dynamics_jac_x", 0.0, 1e-5};
  GradientCheck dyn_u{environment + ".dynamics_jac_u", 0.0, 1e-5};
  for (int t = 0; t < trials; ++t) {
    Vector x(n), u(m);
    for (int i = 0; i < n; ++i) x[i] = rng.normal();
    for (int i = 0; i < m; ++i) u[i] = 2.0 * rng.normal();
    const Matrix fd_a =
        fd_jacobian([&](const Vector& p) { return problem.dynamics->step(p, u); }, x);
    const Matrix fd_b =
        fd_jacobian([&](const Vector& p) { return problem.dynamics->step(x, p); }, u);
    dyn_x.max_rel_error =
        std::max(dyn_x.max_rel_error, fd_relative_error(problem.dynamics->jac_x(x, u), fd_a));
    dyn_u.max_rel_error =
        std::max(dyn_u.max_rel_error, fd_relative_error(problem.dynamics->jac_u(x, u), fd_b));
  }
  checks.push_back(dyn_x);
  checks.push_back(dyn_u);

  GradientCheck adjoint{environment + ".adjoint_gradient", 0.0, 1e-5};
  const int d = problem.controller->param_dim();
  // Feedback policies with large random gains can destabilize the closed
  // loop until the rollout overflows; probe inside the finite region.
  const double theta_scale = built.layout == ParamsLayout::mlp_row_major_v1 ? 0.1 : 0.3;
  for (int t = 0; t < trials; ++t) {
    Vector theta(d);
    RngStream theta_rng = substream(seed, 0xFD + 1, static_cast<std::uint64_t>(t));
    for (int i = 0; i < d; ++i) theta[i] = theta_scale * theta_rng.normal();
    Vector x0(n);
    for (int i = 0; i < n; ++i) x0[i] = 0.3 * theta_rng.normal();
    const auto [cost, grad] = problem.cost_and_gradient(x0, theta);
    const Vector fd =
        fd_gradient([&](const Vector& p) { return problem.trajectory_cost(x0, p); }, theta);
    adjoint.max_rel_error = std::max(adjoint.max_rel_error, fd_relative_error(grad, fd));
  }
  checks.push_back(adjoint);

  GradientCheck prior_check{environment + ".prior_grad_log_density", 0.0, 1e-5};
  for (int t = 0; t < 5; ++t) {
    Vector theta(built.prior->dim());
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = 0.5 * rng.normal();
    const Vector fd =
        fd_gradient([&](const Vector& p) { return built.prior->log_density(p); }, theta);
    prior_check.max_rel_error =
        std::max(prior_check.max_rel_error, fd_relative_error(built.prior->grad_log_density(theta), fd));
  }
  checks.push_back(prior_check);

  return checks;
}

}  // namespace tsmc
