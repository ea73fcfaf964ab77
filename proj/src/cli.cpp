#include "stno/cli.hpp"

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "stno/config.hpp"
#include "stno/errors.hpp"
#include "stno/experiment.hpp"

namespace stno {

namespace {

constexpr const char* kVersion = "stno 1.0.0";

int do_run(const std::string& config_path, bool seed_given, std::uint64_t seed,
           const std::string& out_dir, bool quiet) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  if (seed_given) config.seed = seed;
  if (!out_dir.empty()) config.output = out_dir;
  try {
    const RunRecord record = run_experiment(config);
    if (!quiet) {
      std::cout << record.run_id << " -> " << record.directory << " ("
                << record.files.size() + 1 << " files)\n";
    }
    if (!record.success) {
      std::cerr << "experiment finished with " << record.failed_points
                << " failed point(s); see " << record.directory << "/summary.json\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int do_validate(const std::string& config_path, bool quiet) {
  try {
    const ExperimentConfig config = load_config(config_path);
    if (!quiet) {
      std::cout << "OK: kind=" << to_string(config.kind) << " seed=" << config.seed
                << " output=" << config.resolved_output() << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Injection-locked spin-torque oscillator biosensor array simulator"};
  app.require_subcommand(1);

  std::string run_config;
  std::string run_out;
  std::uint64_t run_seed = 0;
  bool run_quiet = false;
  CLI::App* run = app.add_subcommand("run", "Execute the experiment described by a config file");
  run->add_option("--config", run_config, "Path to the experiment config")->required();
  CLI::Option* seed_opt =
      run->add_option("--seed", run_seed, "Override the seed from the config");
  run->add_option("--out", run_out, "Override the output directory");
  run->add_flag("--quiet", run_quiet, "Suppress the normal progress line");

  std::string validate_config;
  bool validate_quiet = false;
  CLI::App* validate =
      app.add_subcommand("validate", "Parse and check a config file without running");
  validate->add_option("--config", validate_config, "Path to the experiment config")->required();
  validate->add_flag("--quiet", validate_quiet, "Print nothing on success");

  CLI::App* list =
      app.add_subcommand("list-experiments", "Print the available experiment kinds");
  CLI::App* version = app.add_subcommand("version", "Print the program version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits 0; genuine usage errors exit 2
  }

  if (run->parsed()) {
    return do_run(run_config, seed_opt->count() > 0, run_seed, run_out, run_quiet);
  }
  if (validate->parsed()) {
    return do_validate(validate_config, validate_quiet);
  }
  if (list->parsed()) {
    for (ExperimentKind kind :
         {ExperimentKind::single_run, ExperimentKind::freq_vs_bias, ExperimentKind::amp_vs_rf,
          ExperimentKind::bias_vs_area, ExperimentKind::montecarlo,
          ExperimentKind::sensitivity_sweep, ExperimentKind::drift_calibration,
          ExperimentKind::array_demo, ExperimentKind::locking_range}) {
      std::cout << to_string(kind) << '\n';
    }
    return 0;
  }
  if (version->parsed()) {
    std::cout << kVersion << '\n';
    return 0;
  }
  return 2;
}

}  // namespace stno
