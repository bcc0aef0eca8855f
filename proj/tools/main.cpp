#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "threshova/errors.hpp"

// Exit codes: 0 success, 2 configuration/parse errors, 3 numerical errors.
int main(int argc, char** argv) {
  CLI::App app{"threshova - thresholding-based ANOVA tests"};
  app.require_subcommand(1);
  app.fallthrough();

  threshova::cli::CommonOptions common;
  std::uint64_t seed_value = 0;
  bool seed_set = false;
  app.add_option("--threads", common.threads,
                 "worker threads (default: THRESHOVA_THREADS or 1)");
  auto* seed_opt = app.add_option("--seed", seed_value, "override the RNG seed");
  app.add_option("--out", common.out_path, "write the JSON report to a file instead of stdout");

  std::string spec_path;
  auto* test_cmd = app.add_subcommand("test", "run the general thresholding test from a model spec");
  test_cmd->add_option("--spec", spec_path, "model specification JSON")->required();

  threshova::cli::CalibrateOptions cal_opts;
  int K_value = 0;
  auto* cal_cmd = app.add_subcommand("calibrate", "Monte Carlo threshold calibration");
  cal_cmd->add_option("--spec", spec_path, "model specification JSON")->required();
  cal_cmd->add_flag("--qut", cal_opts.qut, "use the quantile universal threshold level");
  cal_cmd->add_flag("--closed-form-check", cal_opts.closed_form_check,
                    "report the matching closed-form threshold and the relative gap");
  auto* k_opt = cal_cmd->add_option("--K", K_value, "number of calibration draws");

  std::string data_path;
  threshova::cli::TukeyOptions tukey_opts;
  auto* tukey_cmd = app.add_subcommand("tukey", "pairwise multiple comparisons test");
  tukey_cmd->add_option("--data", data_path, "CSV with response and group columns")->required();
  tukey_cmd->add_option("--response", tukey_opts.response, "response column name");
  tukey_cmd->add_option("--group", tukey_opts.group, "group column name");
  tukey_cmd->add_option("--alpha", tukey_opts.alpha, "test level");
  tukey_cmd->add_option("--reps", tukey_opts.reps, "Monte Carlo calibration draws");
  tukey_cmd->add_option("--csv", tukey_opts.csv_out, "also write a per-pair CSV table");

  std::string study_name;
  threshova::cli::StudyOptions study_opts;
  auto* study_cmd = app.add_subcommand("study", "reproduce a study (power|tukey|yuanlin|ergostool)");
  study_cmd->add_option("name", study_name, "study name")->required();
  study_cmd->add_option("--out-dir", study_opts.out_dir, "output directory");
  study_cmd->add_option("--reps", study_opts.reps, "Monte Carlo replicates per grid point");
  study_cmd->add_option("--runs", study_opts.runs, "simulation runs (yuanlin)");
  study_cmd->add_option("--model", study_opts.model, "yuanlin model: III or IV");
  study_cmd->add_option("--alpha", study_opts.alpha, "test level");
  study_cmd->add_option("--data", study_opts.data_path, "fixture path (ergostool)");
  study_cmd->add_option("--mc-reps", study_opts.mc_reps, "calibration draws (ergostool)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  if (seed_opt->count() > 0) {
    seed_set = true;
    common.seed_override = seed_value;
  }
  (void)seed_set;
  if (k_opt->count() > 0) cal_opts.K_override = K_value;

  try {
    if (test_cmd->parsed()) return threshova::cli::cmd_test(spec_path, common);
    if (cal_cmd->parsed()) return threshova::cli::cmd_calibrate(spec_path, cal_opts, common);
    if (tukey_cmd->parsed()) return threshova::cli::cmd_tukey(data_path, tukey_opts, common);
    if (study_cmd->parsed()) return threshova::cli::cmd_study(study_name, study_opts, common);
  } catch (const threshova::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const threshova::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
