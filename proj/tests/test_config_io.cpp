#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "tsmc/experiment.hpp"

using namespace tsmc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tsmc_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ExperimentConfig quick_shekel_config(const TempDir& dir) {
  ExperimentConfig config;
  config.name = "shekel-quick";
  config.method = "tsmc";
  config.environment = "shekel";
  config.seed = 11;
  config.n_particles = 64;
  config.temperature = 0.1;
  config.hmc_step_size = 0.2;
  config.output_dir = (dir.path / "shekel-quick").string();
  return config;
}

}  // namespace

TEST_CASE("config text round-trips through serialize and parse", "[config-io]") {
  ExperimentConfig config;
  config.name = "demo";
  config.method = "mppi";
  config.environment = "pendulum";
  config.seed = 99;
  config.temperature = 0.25;
  config.n_particles = 50;
  config.mppi_rollouts = 32;
  config.mppi_noise = 0.15;
  config.prior_kind = "ar1";
  const ExperimentConfig reparsed = parse_config_text(serialize_config(config));
  CHECK(reparsed == config);
}

TEST_CASE("config parser reports malformed input precisely", "[config-io]") {
  CHECK_THROWS_MATCHES(parse_config_text("x = 1\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("before any section")));
  CHECK_THROWS_MATCHES(parse_config_text("[experiment]\nbogus = 1\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("experiment.bogus")));
  CHECK_THROWS_MATCHES(parse_config_text("[experiment]\nseed = abc\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("experiment.seed")));
  CHECK_THROWS_MATCHES(parse_config_text("[nosuch]\nx = 1\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("[nosuch]")));
}

TEST_CASE("validation names the offending field", "[config-io]") {
  // A tsmc-only field set under method mppi must be named in the error.
  ExperimentConfig config = parse_config_text(
      "[experiment]\nmethod = mppi\nenvironment = pendulum\n[tsmc]\ness_ratio = 0.9\n");
  CHECK_THROWS_MATCHES(validate_config(config), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("tsmc.ess_ratio")));

  ExperimentConfig mala_field = parse_config_text(
      "[experiment]\nmethod = tsmc\nenvironment = shekel\n[mala]\nstep_size = 0.1\n");
  CHECK_THROWS_MATCHES(validate_config(mala_field), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("mala.step_size")));

  ExperimentConfig bad_env = parse_config_text(
      "[experiment]\nmethod = tsmc\nenvironment = shekel\n[env]\nhorizon = 30\n");
  CHECK_THROWS_MATCHES(validate_config(bad_env), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("env.horizon")));

  ExperimentConfig extended_on_to = parse_config_text(
      "[experiment]\nmethod = tsmc_extended\nenvironment = pendulum\n");
  CHECK_THROWS_AS(validate_config(extended_on_to), ConfigError);
}

TEST_CASE("every preset validates", "[config-io]") {
  const auto presets = preset_configs();
  REQUIRE(!presets.empty());
  for (const auto& [name, config] : presets) {
    INFO("preset " << name);
    CHECK_NOTHROW(validate_config(config));
    // Round-trip each preset through the file format too.
    CHECK(parse_config_text(serialize_config(config)) == config);
  }
}

TEST_CASE("params file round-trips matrices bit-exactly", "[config-io]") {
  TempDir dir;
  RngStream rng(5);
  Matrix thetas(7, 3);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 3; ++j) thetas(i, j) = rng.normal();
  const std::string path = (dir.path / "params.bin").string();
  write_params(path, thetas, ParamsLayout::open_loop_controls);
  const ParamsFile file = read_params(path);
  CHECK(file.layout == ParamsLayout::open_loop_controls);
  CHECK((file.thetas - thetas).cwiseAbs().maxCoeff() == 0.0);

  // Corrupted magic is rejected.
  std::ofstream bad(dir.path / "bad.bin", std::ios::binary);
  bad << "NOTAPARAMFILE";
  bad.close();
  CHECK_THROWS_AS(read_params((dir.path / "bad.bin").string()), std::runtime_error);
}

TEST_CASE("run_experiment writes the full artifact set", "[config-io]") {
  TempDir dir;
  const ExperimentConfig config = quick_shekel_config(dir);
  const RunArtifact artifact = run_experiment(config);

  const fs::path run_dir(artifact.run_dir);
  CHECK(fs::exists(run_dir / "config.snapshot"));
  CHECK(fs::exists(run_dir / "schedule.csv"));
  CHECK(fs::exists(run_dir / "energies.csv"));
  CHECK(fs::exists(run_dir / "params.bin"));
  CHECK(fs::exists(run_dir / "summary.json"));
  CHECK(fs::exists(run_dir / "trace.svg"));
  CHECK(artifact.status == RunStatus::success);

  // The schedule is strictly increasing and ends at 1.
  const CsvTable schedule = read_csv((run_dir / "schedule.csv").string());
  REQUIRE(!schedule.rows.empty());
  double prev = 0.0;
  for (const auto& row : schedule.rows) {
    const double beta = std::stod(row[1]);
    CHECK(beta > prev);
    prev = beta;
  }
  CHECK(prev == 1.0);

  // Summary stats recompute from the raw CSV.
  const CsvTable energies = read_csv((run_dir / "energies.csv").string());
  int final_level = 0;
  for (const auto& row : energies.rows) final_level = std::max(final_level, std::stoi(row[0]));
  double best = kInf;
  for (const auto& row : energies.rows)
    if (std::stoi(row[0]) == final_level) best = std::min(best, std::stod(row[2]));
  CHECK_THAT(best, Catch::Matchers::WithinAbs(artifact.best_final_energy, 1e-12));
}

TEST_CASE("identical configs give byte-identical csv artifacts", "[config-io]") {
  TempDir dir;
  ExperimentConfig config = quick_shekel_config(dir);

  config.output_dir = (dir.path / "a").string();
  config.threads = 1;
  const RunArtifact first = run_experiment(config);
  config.output_dir = (dir.path / "b").string();
  config.threads = 0;  // max hardware parallelism
  const RunArtifact second = run_experiment(config);

  for (const char* file : {"schedule.csv", "energies.csv", "params.bin", "trace.svg"}) {
    INFO("artifact " << file);
    CHECK(file_bytes(fs::path(first.run_dir) / file) ==
          file_bytes(fs::path(second.run_dir) / file));
  }
}

TEST_CASE("summarize groups runs by method and refuses mixed environments", "[config-io]") {
  TempDir dir;
  ExperimentConfig config = quick_shekel_config(dir);
  config.output_dir = (dir.path / "runs").string();
  config.seed = 1;
  const RunArtifact a = run_experiment(config);
  config.seed = 2;
  const RunArtifact b = run_experiment(config);

  SECTION("single run: one row") {
    const ComparisonTable table = summarize_runs({a.run_dir});
    REQUIRE(table.methods.size() == 1);
    CHECK(table.methods[0].method == "tsmc");
    CHECK(table.methods[0].n_runs == 1);
    const std::string rendered = render_comparison(table);
    CHECK(rendered.find("tsmc") != std::string::npos);
  }

  SECTION("two identical runs produce identical quantile rows") {
    const ComparisonTable one = summarize_runs({a.run_dir});
    const ComparisonTable two = summarize_runs({a.run_dir, a.run_dir});
    CHECK(one.methods[0].pooled_median == two.methods[0].pooled_median);
    CHECK(one.methods[0].pooled_q25 == two.methods[0].pooled_q25);
  }

  SECTION("boxplot svg is emitted") {
    const ComparisonTable table = summarize_runs({a.run_dir, b.run_dir});
    const std::string svg = comparison_boxplot_svg(table);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("rect") != std::string::npos);
  }

  SECTION("mixed environments are refused") {
    ExperimentConfig other = quick_shekel_config(dir);
    other.environment = "lti";
    other.name = "lti-quick";
    other.output_dir = (dir.path / "lti").string();
    other.n_particles = 16;
    other.hmc_step_size = 0.1;
    const RunArtifact c = run_experiment(other);
    CHECK_THROWS_WITH(summarize_runs({a.run_dir, c.run_dir}),
                      Catch::Matchers::ContainsSubstring("mix environments"));
  }
}

TEST_CASE("check_gradients validates the analytic derivatives per environment", "[config-io]") {
  for (const std::string env : {"shekel", "lti"}) {
    const auto checks = check_gradients(env, 5);
    REQUIRE(!checks.empty());
    for (const auto& check : checks) {
      INFO(check.name << " err " << check.max_rel_error);
      CHECK(check.pass());
    }
  }
}

TEST_CASE("environment defaults expose the reference parameter counts", "[config-io]") {
  ExperimentConfig config;
  config.environment = "pendulum_sparse";
  config.method = "tsmc_extended";
  const BuiltEnvironment pend = build_environment(config);
  CHECK(pend.problem.controller->param_dim() == 1184);

  config.environment = "acrobot_po";
  config.method = "tsmc";
  const BuiltEnvironment acro = build_environment(config);
  CHECK(acro.problem.controller->param_dim() == 1184);

  config.environment = "cart_double_pendulum_po";
  const BuiltEnvironment cart = build_environment(config);
  CHECK(cart.problem.controller->param_dim() == 1248);

  config.environment = "pendulum";
  const BuiltEnvironment to = build_environment(config);
  CHECK(to.problem.controller->param_dim() == 30);
  CHECK(to.problem.horizon == 30);
}
