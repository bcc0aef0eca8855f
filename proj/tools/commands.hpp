#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace threshova::cli {

struct CommonOptions {
  int threads = 0;  // 0 = THRESHOVA_THREADS env or 1
  std::optional<std::uint64_t> seed_override;
  std::string out_path;  // empty = stdout
};

int cmd_test(const std::string& spec_path, const CommonOptions& common);

struct CalibrateOptions {
  bool qut = false;
  bool closed_form_check = false;
  std::optional<int> K_override;
};
int cmd_calibrate(const std::string& spec_path, const CalibrateOptions& opts,
                  const CommonOptions& common);

struct TukeyOptions {
  std::string response = "y";
  std::string group = "group";
  double alpha = 0.05;
  int reps = 10000;
  std::string csv_out;  // optional per-pair table
};
int cmd_tukey(const std::string& data_path, const TukeyOptions& opts,
              const CommonOptions& common);

struct StudyOptions {
  std::string out_dir = "study_out";
  int reps = 2000;
  int runs = 200;
  std::string model = "III";
  double alpha = 0.05;
  std::string data_path = "data/ergostool.csv";
  int mc_reps = 100000;
};
int cmd_study(const std::string& name, const StudyOptions& opts, const CommonOptions& common);

}  // namespace threshova::cli
