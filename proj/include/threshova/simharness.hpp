#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "threshova/anova_tests.hpp"
#include "threshova/power.hpp"
#include "threshova/rng.hpp"

namespace threshova {

// ---------------------------------------------------------------------------
// Shared Monte Carlo oracle

// (1-p)-quantile-free MC estimate of the studentized range quantile
// T_{T,nu}(p): max-min of T iid standard normals over sqrt(chi2_nu / nu).
double studentized_range_quantile_mc(int T, int nu, double p, int draws, std::uint64_t seed,
                                     int threads = 1);

// ---------------------------------------------------------------------------
// Power figure

struct PowerFigureRow {
  double theta = 0.0;
  TestKind test = TestKind::Block;
  Alternative::Kind alt = Alternative::Kind::Dense;
  bool monte_carlo = false;
  double power = 0.0;
  double se = 0.0;
};

struct PowerFigureResult {
  std::vector<PowerFigureRow> rows;
  int T = 5, R = 10;
  double alpha = 0.05;
  int reps = 0;
  std::uint64_t seed = 0;
};

PowerFigureResult run_power_figure(int T, int R, double alpha,
                                   const std::vector<double>& theta_grid, int reps,
                                   std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Multiple-comparisons study on the unbalanced design

struct TukeyStudyRow {
  double theta = 0.0;
  double power_threshold = 0.0, se_threshold = 0.0;
  double power_interval = 0.0, se_interval = 0.0;
  double percent_increase = 0.0;          // 100 (thr - int) / int, 0 when both null
  double detections_threshold = 0.0;      // mean correct detections (max T-1)
  double detections_interval = 0.0;
};

struct TukeyStudyResult {
  std::vector<TukeyStudyRow> rows;
  std::vector<int> counts;
  double alpha = 0.05;
  int reps = 0;
  std::uint64_t seed = 0;
  double lambda_threshold = 0.0;   // MC threshold of the exact test
  double range_critical = 0.0;     // studentized range critical value (oracle)
};

TukeyStudyResult run_tukey_study(const std::vector<double>& theta_grid,
                                 const std::vector<int>& counts, int reps, double alpha,
                                 std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Grouped-selection study

struct YuanLinModel {
  enum class Kind { III, IV };
  Kind kind = Kind::III;
  int n = 100;
  double noise_sd = 2.0;

  int groups() const { return kind == Kind::III ? 16 : 20; }
};

struct YuanLinData {
  std::vector<Eigen::MatrixXd> group_cols;  // per group, n x P_q
  Eigen::VectorXd y;
  Eigen::VectorXd theta_true;               // stacked over groups
  std::vector<int> true_groups;             // 0-based indices of nonzero groups
};

YuanLinData generate_yuanlin(const YuanLinModel& model, Substream& rng);

struct EstimatorAggregate {
  std::string name;
  double mean_selected = 0.0;
  double model_error_theta = 0.0;   // mean ||theta_hat - theta||_2^2
  double model_error_xtheta = 0.0;  // mean ||X(theta_hat - theta)||_2^2 / n
  int completed = 0;
  int failed = 0;
};

struct StudyReport {
  EstimatorAggregate least_squares;
  EstimatorAggregate sbite_qut;
  int runs = 0;
  std::uint64_t seed = 0;
};

struct YuanLinOptions {
  int K1 = 1000;   // stage-1 rescaling draws per run
  int K = 10000;   // QUT calibration draws per run
  int threads = 1;
};

StudyReport run_yuanlin_study(const YuanLinModel& model, int runs, std::uint64_t seed,
                              const YuanLinOptions& opts = {});

// ---------------------------------------------------------------------------
// Seated-effort application (mixed-effects fixture)

struct ErgoStoolResult {
  TestOutcome outcome;
  double intercept = 0.0;
  Eigen::VectorXd type_effects;     // thresholded, original indicator basis
  Eigen::VectorXd subject_effects;
  std::vector<std::string> type_levels;
  std::vector<std::string> subject_levels;
};

ErgoStoolResult run_ergostool(const std::string& csv_path, double alpha, int K,
                              std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// File output: every study writes one or more CSV tables plus a JSON metadata
// record (seed, parameters, runtime) into out_dir.

void write_power_figure(const PowerFigureResult& result, const std::string& out_dir,
                        double runtime_seconds);
void write_tukey_study(const TukeyStudyResult& result, const std::string& out_dir,
                       double runtime_seconds);
void write_yuanlin_study(const StudyReport& report, const YuanLinModel& model,
                         const std::string& out_dir, double runtime_seconds);
void write_ergostool(const ErgoStoolResult& result, const std::string& out_dir,
                     double runtime_seconds);

}  // namespace threshova
