#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tsmc/common.hpp"
#include "tsmc/io.hpp"

namespace tsmc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One experiment: which method on which environment, with every
/// hyperparameter the engine consumes. Mirrors the line-oriented config file
/// (sections in brackets, key = value pairs).
struct ExperimentConfig {
  // [experiment]
  std::string name = "run";
  std::string method = "tsmc";  // tsmc | tsmc_extended | parallel_hmc | parallel_mala | mppi
  std::string environment = "shekel";
  std::uint64_t seed = 0;
  std::string output_dir;  // defaults to name
  int threads = 0;
  double temperature = 0.1;  // lambda of the Boltzmann tilt
  int n_particles = 100;

  // [tsmc]
  double ess_ratio = 0.8;
  int max_steps = 1000;
  int moves_per_level = 1;
  std::string resampling = "systematic";  // systematic | multinomial

  // [hmc]
  double hmc_step_size = 0.1;
  int hmc_max_leapfrog = 16;
  std::string hmc_length = "jittered";  // jittered | fixed

  // [mala]
  double mala_step_size = 0.01;

  // [chains]
  int chain_steps = 1000;

  // [mppi]
  int mppi_rollouts = 64;
  double mppi_noise = 0.3;
  int mppi_updates = 64;
  double mppi_temperature = -1.0;  // < 0: inherit the experiment temperature

  // [po]
  int batch_size = 32;

  // [env] overrides
  int horizon = -1;    // < 0: environment default
  double u_max = -1.0; // < 0: environment default
  std::string squash = "tanh";  // tanh | clip | none
  std::string encoding = "";    // pendulum_sparse only: tip4 (default) | raw
  bool mlp_bias = false;
  int mlp_hidden = 32;

  // [prior]
  std::string prior_kind = "";  // default per environment: ar1 | gaussian
  double prior_gamma = 0.9;
  double prior_sigma = 0.3;       // AR(1) innovation scale
  double prior_gauss_sigma = 0.5; // iid Gaussian scale

  std::set<std::string> explicit_keys;  // "section.key" seen in the file

  bool operator==(const ExperimentConfig& other) const {
    return name == other.name && method == other.method && environment == other.environment &&
           seed == other.seed && output_dir == other.output_dir && threads == other.threads &&
           temperature == other.temperature && n_particles == other.n_particles &&
           ess_ratio == other.ess_ratio && max_steps == other.max_steps &&
           moves_per_level == other.moves_per_level && resampling == other.resampling &&
           hmc_step_size == other.hmc_step_size && hmc_max_leapfrog == other.hmc_max_leapfrog &&
           hmc_length == other.hmc_length && mala_step_size == other.mala_step_size &&
           chain_steps == other.chain_steps && mppi_rollouts == other.mppi_rollouts &&
           mppi_noise == other.mppi_noise && mppi_updates == other.mppi_updates &&
           mppi_temperature == other.mppi_temperature && batch_size == other.batch_size &&
           horizon == other.horizon && u_max == other.u_max && squash == other.squash &&
           encoding == other.encoding && mlp_bias == other.mlp_bias &&
           mlp_hidden == other.mlp_hidden && prior_kind == other.prior_kind &&
           prior_gamma == other.prior_gamma && prior_sigma == other.prior_sigma &&
           prior_gauss_sigma == other.prior_gauss_sigma;
  }
};

namespace config_detail {

inline const std::set<std::string>& known_methods() {
  static const std::set<std::string> methods{"tsmc", "tsmc_extended", "parallel_hmc",
                                             "parallel_mala", "mppi"};
  return methods;
}

inline const std::set<std::string>& known_environments() {
  static const std::set<std::string> envs{
      "shekel",          "pendulum",   "acrobot",    "cart_double_pendulum", "lti",
      "pendulum_sparse", "acrobot_po", "cart_double_pendulum_po", "lti_po"};
  return envs;
}

inline bool is_po_environment(const std::string& env) {
  return env == "pendulum_sparse" || env == "acrobot_po" || env == "cart_double_pendulum_po" ||
         env == "lti_po";
}

inline bool has_random_initial_state(const std::string& env) {
  return env == "pendulum_sparse" || env == "lti_po";
}

inline bool is_control_environment(const std::string& env) { return env != "shekel"; }

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("config error: field '" + key + "' expects a number, got '" + value + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("config error: field '" + key + "' expects an integer, got '" + value + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t out = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError("config error: field '" + key + "' expects an unsigned integer, got '" +
                      value + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config error: field '" + key + "' expects true/false, got '" + value + "'");
}

inline std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

inline void assign(ExperimentConfig& config, const std::string& section, const std::string& key,
                   const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "experiment") {
    if (key == "name") config.name = value;
    else if (key == "method") config.method = value;
    else if (key == "environment") config.environment = value;
    else if (key == "seed") config.seed = parse_u64(full, value);
    else if (key == "output_dir") config.output_dir = value;
    else if (key == "threads") config.threads = parse_int(full, value);
    else if (key == "temperature") config.temperature = parse_double(full, value);
    else if (key == "n_particles") config.n_particles = parse_int(full, value);
    else throw ConfigError("config error: unknown field '" + full + "'");
  } else if (section == "tsmc") {
    if (key == "ess_ratio") config.ess_ratio = parse_double(full, value);
    else if (key == "max_steps") config.max_steps = parse_int(full, value);
    else if (key == "moves_per_level") config.moves_per_level = parse_int(full, value);
    else if (key == "resampling") config.resampling = value;
    else throw ConfigError("config error: unknown field '" + full + "'");
  } else if (section == "hmc") {
    if (key == "step_size") config.hmc_step_size = parse_double(full, value);
    else if (key == "max_leapfrog_steps") config.hmc_max_leapfrog = parse_int(full, value);
    else if (key == "length_strategy") config.hmc_length = value;
    else throw ConfigError("config error: unknown field '" + full + "'");
  } else if (section == "mala") {
    if (key == "step_size") config.mala_step_size = parse_double(full, value);
    else throw ConfigError("config error: unknown field '" + full + "'");
  } else if (section == "chains") {
    if (key == "n_steps") config.chain_steps = parse_int(full, value);
    else throw ConfigError("config error: unknown field '" + full + "'");
  } else if (section == "mppi") {
    if (key == "n_rollouts") config.mppi_rollouts = parse_int(full, value);
    else if (key == "noise_sigma") config.mppi_noise = parse_double(full, value);
    else if (key == "n_updates") config.mppi_updates = parse_int(full, value);
    else if (key == "temperature") config.mppi_temperature = parse_double(full, value);
    else throw ConfigError("config error: unknown field '" + full + "'");
  } else if (section == "po") {
    if (key == "batch_size") config.batch_size = parse_int(full, value);
    else throw ConfigError("config error: unknown field '" + full + "'");
  } else if (section == "env") {
    if (key == "horizon") config.horizon = parse_int(full, value);
    else if (key == "u_max") config.u_max = parse_double(full, value);
    else if (key == "squash") config.squash = value;
    else if (key == "encoding") config.encoding = value;
    else if (key == "mlp_bias") config.mlp_bias = parse_bool(full, value);
    else if (key == "mlp_hidden") config.mlp_hidden = parse_int(full, value);
    else throw ConfigError("config error: unknown field '" + full + "'");
  } else if (section == "prior") {
    if (key == "kind") config.prior_kind = value;
    else if (key == "gamma") config.prior_gamma = parse_double(full, value);
    else if (key == "sigma") config.prior_sigma = parse_double(full, value);
    else if (key == "gauss_sigma") config.prior_gauss_sigma = parse_double(full, value);
    else throw ConfigError("config error: unknown field '" + full + "'");
  } else {
    throw ConfigError("config error: unknown section '[" + section + "]'");
  }
  config.explicit_keys.insert(full);
}

}  // namespace config_detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream stream(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string trimmed = config_detail::trim(line);
    if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
    if (trimmed.front() == '[') {
      if (trimmed.back() != ']')
        throw ConfigError("config error: malformed section header at line " +
                          std::to_string(line_no));
      section = config_detail::trim(trimmed.substr(1, trimmed.size() - 2));
      continue;
    }
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config error: expected 'key = value' at line " + std::to_string(line_no));
    const std::string key = config_detail::trim(trimmed.substr(0, eq));
    const std::string value = config_detail::trim(trimmed.substr(eq + 1));
    if (section.empty())
      throw ConfigError("config error: field '" + key + "' appears before any section");
    config_detail::assign(config, section, key, value);
  }
  return config;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

/// Writes every effective field, so parse(serialize(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "name = " << c.name << "\n";
  out << "method = " << c.method << "\n";
  out << "environment = " << c.environment << "\n";
  out << "seed = " << c.seed << "\n";
  if (!c.output_dir.empty()) out << "output_dir = " << c.output_dir << "\n";
  out << "threads = " << c.threads << "\n";
  out << "temperature = " << format_double(c.temperature) << "\n";
  out << "n_particles = " << c.n_particles << "\n";
  out << "\n[tsmc]\n";
  out << "ess_ratio = " << format_double(c.ess_ratio) << "\n";
  out << "max_steps = " << c.max_steps << "\n";
  out << "moves_per_level = " << c.moves_per_level << "\n";
  out << "resampling = " << c.resampling << "\n";
  out << "\n[hmc]\n";
  out << "step_size = " << format_double(c.hmc_step_size) << "\n";
  out << "max_leapfrog_steps = " << c.hmc_max_leapfrog << "\n";
  out << "length_strategy = " << c.hmc_length << "\n";
  out << "\n[mala]\n";
  out << "step_size = " << format_double(c.mala_step_size) << "\n";
  out << "\n[chains]\n";
  out << "n_steps = " << c.chain_steps << "\n";
  out << "\n[mppi]\n";
  out << "n_rollouts = " << c.mppi_rollouts << "\n";
  out << "noise_sigma = " << format_double(c.mppi_noise) << "\n";
  out << "n_updates = " << c.mppi_updates << "\n";
  out << "temperature = " << format_double(c.mppi_temperature) << "\n";
  out << "\n[po]\n";
  out << "batch_size = " << c.batch_size << "\n";
  out << "\n[env]\n";
  out << "horizon = " << c.horizon << "\n";
  out << "u_max = " << format_double(c.u_max) << "\n";
  out << "squash = " << c.squash << "\n";
  if (!c.encoding.empty()) out << "encoding = " << c.encoding << "\n";
  out << "mlp_bias = " << (c.mlp_bias ? "true" : "false") << "\n";
  out << "mlp_hidden = " << c.mlp_hidden << "\n";
  out << "\n[prior]\n";
  if (!c.prior_kind.empty()) out << "kind = " << c.prior_kind << "\n";
  out << "gamma = " << format_double(c.prior_gamma) << "\n";
  out << "sigma = " << format_double(c.prior_sigma) << "\n";
  out << "gauss_sigma = " << format_double(c.prior_gauss_sigma) << "\n";
  return out.str();
}

/// Full validation: known method/environment, numeric ranges, and no
/// explicitly-set field that the chosen method/environment never reads.
inline void validate_config(const ExperimentConfig& c) {
  using namespace config_detail;
  if (!known_methods().count(c.method))
    throw ConfigError("config error: unknown method '" + c.method + "'");
  if (!known_environments().count(c.environment))
    throw ConfigError("config error: unknown environment '" + c.environment + "'");

  if (c.n_particles < 2) throw ConfigError("config error: field 'experiment.n_particles' must be >= 2");
  if (c.temperature <= 0.0)
    throw ConfigError("config error: field 'experiment.temperature' must be > 0");
  if (c.threads < 0) throw ConfigError("config error: field 'experiment.threads' must be >= 0");
  if (!(c.ess_ratio > 0.0 && c.ess_ratio < 1.0))
    throw ConfigError("config error: field 'tsmc.ess_ratio' must lie in (0, 1)");
  if (c.max_steps < 1) throw ConfigError("config error: field 'tsmc.max_steps' must be >= 1");
  if (c.moves_per_level < 1)
    throw ConfigError("config error: field 'tsmc.moves_per_level' must be >= 1");
  if (c.resampling != "systematic" && c.resampling != "multinomial")
    throw ConfigError("config error: field 'tsmc.resampling' must be systematic or multinomial");
  if (c.hmc_step_size <= 0.0)
    throw ConfigError("config error: field 'hmc.step_size' must be > 0");
  if (c.hmc_max_leapfrog < 1)
    throw ConfigError("config error: field 'hmc.max_leapfrog_steps' must be >= 1");
  if (c.hmc_length != "jittered" && c.hmc_length != "fixed")
    throw ConfigError("config error: field 'hmc.length_strategy' must be jittered or fixed");
  if (c.mala_step_size <= 0.0)
    throw ConfigError("config error: field 'mala.step_size' must be > 0");
  if (c.chain_steps < 0) throw ConfigError("config error: field 'chains.n_steps' must be >= 0");
  if (c.mppi_rollouts < 1)
    throw ConfigError("config error: field 'mppi.n_rollouts' must be >= 1");
  if (c.mppi_noise <= 0.0) throw ConfigError("config error: field 'mppi.noise_sigma' must be > 0");
  if (c.mppi_updates < 1) throw ConfigError("config error: field 'mppi.n_updates' must be >= 1");
  if (c.batch_size < 1) throw ConfigError("config error: field 'po.batch_size' must be >= 1");
  if (c.squash != "tanh" && c.squash != "clip" && c.squash != "none")
    throw ConfigError("config error: field 'env.squash' must be tanh, clip or none");
  if (c.mlp_hidden < 1) throw ConfigError("config error: field 'env.mlp_hidden' must be >= 1");

  if (c.method == "tsmc_extended" && !has_random_initial_state(c.environment))
    throw ConfigError("config error: method 'tsmc_extended' requires an environment with a "
                      "non-degenerate initial-state distribution; '" +
                      c.environment + "' fixes the initial state");

  // Explicitly-set fields that the chosen method never consumes.
  auto reject_if_set = [&](const std::string& prefix, const std::string& reason) {
    for (const auto& key : c.explicit_keys)
      if (key.rfind(prefix, 0) == 0)
        throw ConfigError("config error: field '" + key + "' is not used " + reason);
  };
  const bool uses_tsmc = c.method == "tsmc" || c.method == "tsmc_extended";
  const bool uses_hmc = uses_tsmc || c.method == "parallel_hmc";
  if (!uses_tsmc) reject_if_set("tsmc.", "by method '" + c.method + "'");
  if (!uses_hmc) reject_if_set("hmc.", "by method '" + c.method + "'");
  if (c.method != "parallel_mala") reject_if_set("mala.", "by method '" + c.method + "'");
  if (c.method != "parallel_hmc" && c.method != "parallel_mala")
    reject_if_set("chains.", "by method '" + c.method + "'");
  if (c.method != "mppi") reject_if_set("mppi.", "by method '" + c.method + "'");
  if (!is_po_environment(c.environment))
    reject_if_set("po.", "by environment '" + c.environment + "'");

  if (c.environment == "shekel") {
    reject_if_set("env.", "by environment 'shekel'");
    reject_if_set("prior.gamma", "by environment 'shekel'");
    reject_if_set("prior.sigma", "by environment 'shekel'");
  }
  if (!c.encoding.empty() && c.environment != "pendulum_sparse")
    throw ConfigError("config error: field 'env.encoding' only applies to 'pendulum_sparse'");
  if (!c.encoding.empty() && c.encoding != "tip4" && c.encoding != "raw")
    throw ConfigError("config error: field 'env.encoding' must be tip4 or raw");
  if (!is_po_environment(c.environment)) {
    reject_if_set("env.mlp_bias", "by environment '" + c.environment + "' (no policy network)");
    reject_if_set("env.mlp_hidden", "by environment '" + c.environment + "' (no policy network)");
  }
  if (!c.prior_kind.empty() && c.prior_kind != "ar1" && c.prior_kind != "gaussian")
    throw ConfigError("config error: field 'prior.kind' must be ar1 or gaussian");
  if (c.prior_kind == "ar1" && is_po_environment(c.environment))
    throw ConfigError("config error: field 'prior.kind' = ar1 needs an open-loop environment");
  if (std::abs(c.prior_gamma) >= 1.0)
    throw ConfigError("config error: field 'prior.gamma' must lie in (-1, 1)");
  if (c.prior_sigma <= 0.0) throw ConfigError("config error: field 'prior.sigma' must be > 0");
  if (c.prior_gauss_sigma <= 0.0)
    throw ConfigError("config error: field 'prior.gauss_sigma' must be > 0");
}

/// Named presets with the published hyperparameter table plus desk-scale
/// variants used by the test suites.
inline std::vector<std::pair<std::string, ExperimentConfig>> preset_configs() {
  std::vector<std::pair<std::string, ExperimentConfig>> presets;

  {
    ExperimentConfig c;
    c.name = "shekel_fig1";
    c.method = "tsmc";
    c.environment = "shekel";
    c.temperature = 0.1;
    c.n_particles = 100;
    c.ess_ratio = 0.9;
    c.hmc_step_size = 0.2;
    c.hmc_max_leapfrog = 16;
    presets.emplace_back(c.name, c);
  }
  {
    ExperimentConfig c;
    c.name = "shekel_ref";
    c.method = "tsmc";
    c.environment = "shekel";
    c.temperature = 0.1;
    c.n_particles = 1000;
    c.ess_ratio = 0.8;
    c.hmc_step_size = 0.2;
    c.hmc_max_leapfrog = 16;
    presets.emplace_back(c.name, c);
  }
  {
    // Temperature and particle count follow the published table; the step
    // size is recalibrated for the jittered-HMC kernel (the published value
    // presumes NUTS, which tolerates oversized steps by u-turning early).
    ExperimentConfig c;
    c.name = "to_pendulum";
    c.method = "tsmc";
    c.environment = "pendulum";
    c.temperature = 0.1;
    c.n_particles = 100;
    c.ess_ratio = 0.8;
    c.hmc_step_size = 0.02;
    c.hmc_max_leapfrog = 48;
    c.moves_per_level = 6;
    c.prior_kind = "ar1";
    presets.emplace_back(c.name, c);
  }
  {
    ExperimentConfig c;
    c.name = "to_acrobot";
    c.method = "tsmc";
    c.environment = "acrobot";
    c.temperature = 0.1;
    c.n_particles = 100;
    c.ess_ratio = 0.8;
    c.hmc_step_size = 0.02;
    c.hmc_max_leapfrog = 16;
    c.prior_kind = "ar1";
    presets.emplace_back(c.name, c);
  }
  {
    ExperimentConfig c;
    c.name = "to_cart_double_pendulum";
    c.method = "tsmc";
    c.environment = "cart_double_pendulum";
    c.temperature = 0.1;
    c.n_particles = 100;
    c.ess_ratio = 0.8;
    c.hmc_step_size = 0.02;
    c.hmc_max_leapfrog = 16;
    c.prior_kind = "ar1";
    presets.emplace_back(c.name, c);
  }
  {
    ExperimentConfig c;
    c.name = "po_pendulum_sparse";
    c.method = "tsmc_extended";
    c.environment = "pendulum_sparse";
    c.temperature = 0.0005;
    c.n_particles = 3000;
    c.batch_size = 3000;
    c.ess_ratio = 0.8;
    c.hmc_step_size = 0.001;
    c.hmc_max_leapfrog = 8;
    presets.emplace_back(c.name, c);
  }
  {
    // Desk-scale smoke variant: the paper-scale batch and particle counts
    // exceed a workstation budget, so the qualitative check runs here. The
    // temperature is raised to match the wider batch-mean spread at B=32.
    ExperimentConfig c;
    c.name = "po_pendulum_sparse_smoke";
    c.method = "tsmc_extended";
    c.environment = "pendulum_sparse";
    c.temperature = 0.002;
    c.n_particles = 64;
    c.batch_size = 32;
    c.ess_ratio = 0.8;
    c.max_steps = 60;
    c.hmc_step_size = 0.001;
    c.hmc_max_leapfrog = 4;
    presets.emplace_back(c.name, c);
  }
  {
    ExperimentConfig c;
    c.name = "po_acrobot";
    c.method = "tsmc";
    c.environment = "acrobot_po";
    c.temperature = 100.0;
    c.n_particles = 16000;
    c.batch_size = 1;
    c.ess_ratio = 0.8;
    c.hmc_step_size = 0.001;
    c.hmc_max_leapfrog = 8;
    presets.emplace_back(c.name, c);
  }
  {
    ExperimentConfig c;
    c.name = "po_cart_double_pendulum";
    c.method = "tsmc";
    c.environment = "cart_double_pendulum_po";
    c.temperature = 200.0;
    c.n_particles = 14000;
    c.batch_size = 1;
    c.ess_ratio = 0.8;
    c.hmc_step_size = 0.001;
    c.hmc_max_leapfrog = 8;
    presets.emplace_back(c.name, c);
  }
  {
    ExperimentConfig c;
    c.name = "mppi_pendulum";
    c.method = "mppi";
    c.environment = "pendulum";
    c.temperature = 0.1;
    c.n_particles = 100;
    c.mppi_rollouts = 64;
    c.mppi_updates = 64;
    c.mppi_noise = 0.3;
    c.prior_kind = "ar1";
    presets.emplace_back(c.name, c);
  }
  return presets;
}

}  // namespace tsmc
