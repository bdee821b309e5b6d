#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfgs/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity gradient sampling for fixed-order H-infinity synthesis"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  long seed_override = -1;
  int threads_override = -1;
  std::vector<std::string> run_dirs;
  std::string validate_path;

  CLI::App* run = app.add_subcommand("run", "Run a configured experiment");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed_override, "Override the config seed");
  run->add_option("--threads", threads_override, "Override the thread count (0 = all cores)");
  run->add_option("--out", out_override, "Override the output directory");

  CLI::App* compare = app.add_subcommand("compare", "Merge completed run directories");
  compare->add_option("dirs", run_dirs, "Run directories")->required()->expected(-1);
  compare->add_option("--out", out_override, "Output directory for the comparison files");

  CLI::App* validate = app.add_subcommand("validate", "Check a manifest or config model source");
  validate->add_option("path", validate_path, "Manifest or experiment config (JSON)")->required();

  CLI::App* generate = app.add_subcommand("generate", "Write a heat hierarchy to disk");
  generate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  generate->add_option("--out", out_override, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      mfgs::cli::ExperimentConfig cfg = mfgs::cli::ExperimentConfig::from_json_file(config_path);
      if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
      if (threads_override >= 0) cfg.threads = threads_override;
      if (!out_override.empty()) cfg.out_dir = out_override;
      return mfgs::cli::cmd_run(cfg);
    }
    if (compare->parsed()) {
      const std::string out = out_override.empty() ? "compare_out" : out_override;
      return mfgs::cli::cmd_compare(run_dirs, out);
    }
    if (validate->parsed()) return mfgs::cli::cmd_validate(validate_path);
    if (generate->parsed()) {
      mfgs::cli::ExperimentConfig cfg = mfgs::cli::ExperimentConfig::from_json_file(config_path);
      return mfgs::cli::cmd_generate(cfg, out_override);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
