#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsmc/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path) {
  tsmc::ExperimentConfig config = tsmc::load_config(config_path);
  tsmc::validate_config(config);
  const tsmc::RunArtifact artifact = tsmc::run_experiment(config);
  std::cout << "run dir: " << artifact.run_dir << "\n";
  std::cout << "levels: " << artifact.n_levels << "\n";
  std::cout << "best final energy: " << tsmc::format_double(artifact.best_final_energy) << "\n";
  std::cout << "median final energy: " << tsmc::format_double(artifact.median_final_energy)
            << "\n";
  if (std::isfinite(artifact.log_z))
    std::cout << "log Z estimate: " << tsmc::format_double(artifact.log_z) << "\n";
  if (artifact.status != tsmc::RunStatus::success) {
    std::cout << "status: partial (max_steps reached before beta hit 1)\n";
    return 2;
  }
  std::cout << "status: success\n";
  return 0;
}

int cmd_summarize(const std::vector<std::string>& dirs, const std::string& svg_path) {
  const tsmc::ComparisonTable table = tsmc::summarize_runs(dirs);
  std::cout << tsmc::render_comparison(table);
  if (!svg_path.empty()) {
    tsmc::write_text_file(svg_path, tsmc::comparison_boxplot_svg(table));
    std::cout << "boxplot written to " << svg_path << "\n";
  }
  return 0;
}

int cmd_check_gradients(const std::string& environment) {
  const auto checks = tsmc::check_gradients(environment);
  bool all_pass = true;
  for (const auto& check : checks) {
    std::printf("%-45s max rel err %.3e  (tol %.0e)  %s\n", check.name.c_str(),
                check.max_rel_error, check.tolerance, check.pass() ? "PASS" : "FAIL");
    all_pass = all_pass && check.pass();
  }
  return all_pass ? 0 : 1;
}

int cmd_presets() {
  for (const auto& [name, config] : tsmc::preset_configs()) {
    std::cout << "# ---- preset: " << name << " ----\n";
    std::cout << tsmc::serialize_config(config) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tempered SMC experiments over differentiable control problems"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "execute an experiment config and write its artifacts");
  run->add_option("config", config_path, "path to a config file")->required();

  std::vector<std::string> dirs;
  std::string svg_path;
  auto* summarize = app.add_subcommand("summarize", "compare finished runs of one environment");
  summarize->add_option("dirs", dirs, "run directories (each containing summary.json)")
      ->required();
  summarize->add_option("--svg", svg_path, "write a boxplot of final energies to this path");

  std::string environment;
  auto* check = app.add_subcommand("check-gradients",
                                   "finite-difference validation of an environment's gradients");
  check->add_option("env", environment, "environment id")->required();

  auto* presets = app.add_subcommand("presets", "named experiment presets");
  presets->add_subcommand("list", "print each preset as a ready-to-save config block");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (summarize->parsed()) return cmd_summarize(dirs, svg_path);
    if (check->parsed()) return cmd_check_gradients(environment);
    if (presets->parsed()) return cmd_presets();
    return 0;
  } catch (const tsmc::ConfigError& err) {
    std::cerr << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
