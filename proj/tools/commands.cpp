#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "model_spec.hpp"
#include "threshova/anova_tests.hpp"
#include "threshova/calibration.hpp"
#include "threshova/errors.hpp"
#include "threshova/io.hpp"
#include "threshova/parallel.hpp"
#include "threshova/simharness.hpp"

namespace threshova::cli {

namespace {

using nlohmann::json;

json json_vector(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json outcome_to_json(const TestOutcome& out) {
  json j;
  j["reject"] = out.reject;
  j["statistic"] = out.statistic;
  j["threshold"] = out.threshold;
  j["p_value"] = std::isnan(out.p_value) ? json(nullptr) : json(out.p_value);
  j["alpha"] = out.alpha;
  j["seed"] = out.seed;
  j["sigma_hat"] = out.sigma_hat;

  json det = json::object();
  for (const auto& [name, d] : out.detections) {
    json jd;
    jd["nonzero"] = d.nonzero;
    if (!d.coords.empty()) {
      json coords = json::array();
      for (bool b : d.coords) coords.push_back(b);
      jd["coords"] = coords;
    }
    det[name] = jd;
  }
  j["detections"] = det;

  json est;
  est["lambda"] = out.estimate.lambda;
  est["s"] = out.estimate.s;
  est["converged"] = out.estimate.converged;
  est["sweeps_used"] = out.estimate.sweeps_used;
  est["max_residual"] = out.estimate.max_residual;
  json blocks = json::object();
  for (std::size_t q = 0; q < out.block_names.size(); ++q) {
    json b;
    b["gamma"] = json_vector(out.estimate.gamma[q]);
    b["theta"] = json_vector(out.theta[q]);
    auto it = out.coord_names.find(out.block_names[q]);
    if (it != out.coord_names.end()) b["labels"] = it->second;
    blocks[out.block_names[q]] = b;
  }
  est["blocks"] = blocks;
  j["estimate"] = est;

  if (out.nuisance_coef.size() > 0) j["nuisance"] = json_vector(out.nuisance_coef);
  return j;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot open output file: " + out_path);
    out << j.dump(2) << "\n";
  }
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int cmd_test(const std::string& spec_path, const CommonOptions& common) {
  LoadedModel model = load_model_spec(spec_path);
  if (common.seed_override) model.seed = *common.seed_override;

  GeneralTestOptions opts;
  opts.threads = resolve_threads(common.threads);
  opts.solver.s = model.s;
  opts.rescale = model.rescale;
  TestOutcome out = general_anova_test(model.design, model.y, model.alpha, model.sigma,
                                       model.mc_reps, model.seed, opts);
  out.coord_names = model.coord_names;
  emit(outcome_to_json(out), common.out_path);
  return 0;
}

int cmd_calibrate(const std::string& spec_path, const CalibrateOptions& opts,
                  const CommonOptions& common) {
  LoadedModel model = load_model_spec(spec_path);
  if (common.seed_override) model.seed = *common.seed_override;
  int K = opts.K_override.value_or(model.mc_reps);
  int threads = resolve_threads(common.threads);

  // With no rescaling the blocks keep their natural scale, which is the scale
  // the one-way closed forms are written on.
  PreparedDesign prep = prepare_design(
      model.design,
      model.rescale == RescalePolicy::None ? InitialScale::Natural : InitialScale::Unit);
  if (model.rescale != RescalePolicy::None)
    prep = quantile_rescale(prep, model.alpha, model.seed, 1000, model.rescale);

  Eigen::Index xcols = 0;
  for (const auto& b : model.design.blocks) xcols += b.X.cols();
  Eigen::MatrixXd X(model.y.size(), xcols);
  Eigen::Index at = 0;
  for (const auto& b : model.design.blocks) {
    X.middleCols(at, b.X.cols()) = b.X;
    at += b.X.cols();
  }
  SigmaEvaluator eval(model.sigma, model.design.A, X);
  NullSampler sampler{&prep, eval, model.seed, streams::kCalibrate};

  Calibration cal;
  double alpha_used = model.alpha;
  if (opts.qut) {
    int Q = static_cast<int>(model.design.blocks.size());
    alpha_used = qut_alpha(Q);
    cal = quantile_universal_threshold(sampler, Q, K, threads);
  } else {
    cal = monte_carlo_threshold(sampler, model.alpha, K, threads);
  }

  json j;
  j["lambda"] = cal.lambda_alpha;
  j["alpha"] = alpha_used;
  j["K"] = cal.K;
  j["seed"] = cal.seed;
  j["source"] = "monte_carlo";

  if (opts.closed_form_check) {
    // Applies to single-block designs with X^T X = c^2 I left at natural
    // scale: known sigma and no nuisance matches the explicit one-way
    // thresholds, unbiased sigma with an intercept matches the F-quantile
    // relation for the block test.
    json check = nullptr;
    if (model.design.blocks.size() == 1 && model.rescale == RescalePolicy::None) {
      const auto& bs = model.design.blocks[0];
      Eigen::MatrixXd gram = bs.X.transpose() * bs.X;
      double c2 = gram(0, 0);
      bool scalar = (gram - c2 * Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).norm() <
                    1e-8 * std::abs(c2) * gram.rows();
      int T = static_cast<int>(bs.X.cols());
      int R = static_cast<int>(std::lround(c2));
      if (scalar && std::abs(c2 - R) < 1e-8) {
        double value = std::numeric_limits<double>::quiet_NaN();
        std::string kind;
        bool known = model.sigma.kind == SigmaEstimator::Kind::KnownSigma;
        bool intercept_only = model.design.A.cols() == 1 &&
                              (model.design.A.col(0).array() == 1.0).all();
        if (known && model.design.A.cols() == 0) {
          value = closed_form_threshold_oneway(T, R, alpha_used,
                                               bs.mode == ThresholdMode::Block
                                                   ? ThresholdMode::Block
                                                   : ThresholdMode::Coordinate);
          kind = "oneway";
        } else if (!known && intercept_only && bs.mode == ThresholdMode::Block &&
                   model.sigma.kind == SigmaEstimator::Kind::UnbiasedFullModel) {
          value = fisher_equivalent_threshold(T, static_cast<int>(model.y.size()), R,
                                              alpha_used);
          kind = "fisher";
        }
        if (!std::isnan(value)) {
          check = json::object();
          check["kind"] = kind;
          check["value"] = value;
          check["relative_gap"] = std::abs(cal.lambda_alpha - value) / value;
        }
      }
    }
    j["closed_form"] = check;
  }
  emit(j, common.out_path);
  return 0;
}

int cmd_tukey(const std::string& data_path, const TukeyOptions& opts,
              const CommonOptions& common) {
  CsvTable table = read_csv(data_path);
  int cy = table.col(opts.response);
  int cg = table.col(opts.group);
  Eigen::VectorXd y(static_cast<Eigen::Index>(table.rows.size()));
  std::vector<std::string> labels(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = parse_double(table.rows[i][static_cast<std::size_t>(cy)],
                                                   static_cast<long>(i) + 2, opts.response);
    labels[i] = table.rows[i][static_cast<std::size_t>(cg)];
  }
  std::uint64_t seed = common.seed_override.value_or(1);
  TestOutcome out = tukey_threshold_test(y, labels, opts.alpha, opts.reps, seed,
                                         resolve_threads(common.threads));

  json j = outcome_to_json(out);
  json pairs = json::array();
  const auto& names = out.coord_names.at("pairs");
  const auto& det = out.detections.at("pairs");
  for (std::size_t p = 0; p < names.size(); ++p) {
    json jp;
    jp["pair"] = names[p];
    jp["estimate"] = out.estimate.gamma[0][static_cast<Eigen::Index>(p)];
    jp["detected"] = static_cast<bool>(det.coords[p]);
    pairs.push_back(jp);
  }
  j["pairs"] = pairs;
  emit(j, common.out_path);

  if (!opts.csv_out.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t p = 0; p < names.size(); ++p)
      rows.push_back({names[p],
                      format_double(out.estimate.gamma[0][static_cast<Eigen::Index>(p)]),
                      det.coords[p] ? "1" : "0"});
    write_csv(opts.csv_out, {"pair", "estimate", "detected"}, rows);
  }
  return 0;
}

int cmd_study(const std::string& name, const StudyOptions& opts, const CommonOptions& common) {
  int threads = resolve_threads(common.threads);
  std::uint64_t seed = common.seed_override.value_or(1);
  auto t0 = std::chrono::steady_clock::now();

  if (name == "power") {
    std::vector<double> grid;
    for (double th = 0.0; th <= 2.0 + 1e-9; th += 0.25) grid.push_back(th);
    PowerFigureResult res = run_power_figure(5, 10, opts.alpha, grid, opts.reps, seed, threads);
    write_power_figure(res, opts.out_dir, seconds_since(t0));
    std::cout << "power study written to " << opts.out_dir
              << " (power_analytic.csv, power_mc.csv, meta.json)\n";
    return 0;
  }
  if (name == "tukey") {
    std::vector<double> grid;
    for (double th = 0.0; th <= 6.0 + 1e-9; th += 0.5) grid.push_back(th);
    TukeyStudyResult res =
        run_tukey_study(grid, {1, 5, 9, 10, 10}, opts.reps, opts.alpha, seed, threads);
    write_tukey_study(res, opts.out_dir, seconds_since(t0));
    std::cout << "tukey study written to " << opts.out_dir
              << " (tukey_study.csv, meta.json)\n";
    return 0;
  }
  if (name == "yuanlin") {
    YuanLinModel model;
    if (opts.model == "III")
      model.kind = YuanLinModel::Kind::III;
    else if (opts.model == "IV")
      model.kind = YuanLinModel::Kind::IV;
    else
      throw ConfigError("yuanlin model must be 'III' or 'IV'");
    YuanLinOptions yopts;
    yopts.threads = threads;
    StudyReport report = run_yuanlin_study(model, opts.runs, seed, yopts);
    write_yuanlin_study(report, model, opts.out_dir, seconds_since(t0));
    std::cout << "yuanlin study written to " << opts.out_dir
              << " (yuanlin_study.csv, meta.json)\n";
    std::cout << "least_squares mean_selected=" << format_double(report.least_squares.mean_selected)
              << " me_theta=" << format_double(report.least_squares.model_error_theta) << "\n";
    std::cout << "sbite_qut mean_selected=" << format_double(report.sbite_qut.mean_selected)
              << " me_theta=" << format_double(report.sbite_qut.model_error_theta) << "\n";
    return 0;
  }
  if (name == "ergostool") {
    ErgoStoolResult res = run_ergostool(opts.data_path, opts.alpha, opts.mc_reps, seed, threads);
    write_ergostool(res, opts.out_dir, seconds_since(t0));
    std::cout << "ergostool study written to " << opts.out_dir
              << " (ergostool_coefficients.csv, meta.json)\n";
    std::cout << outcome_to_json(res.outcome).dump(2) << "\n";
    return 0;
  }
  throw ConfigError("unknown study '" + name + "'; valid names: power, tukey, yuanlin, ergostool");
}

}  // namespace threshova::cli
