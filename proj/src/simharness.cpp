#include "threshova/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "threshova/distributions.hpp"
#include "threshova/errors.hpp"
#include "threshova/io.hpp"
#include "threshova/parallel.hpp"

namespace threshova {

namespace {

constexpr std::uint64_t kOracleStream = 7;

double order_statistic(std::vector<double>& v, double p) {
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size()) - 1e-9));
  rank = std::max<std::size_t>(1, std::min(rank, v.size()));
  return v[rank - 1];
}

nlohmann::json meta_base(std::uint64_t seed, double runtime_seconds) {
  nlohmann::json j;
  j["seed"] = seed;
  j["runtime_seconds"] = runtime_seconds;
  return j;
}

void write_meta(const nlohmann::json& j, const std::string& out_dir) {
  std::ofstream out(std::filesystem::path(out_dir) / "meta.json");
  out << j.dump(2) << "\n";
}

}  // namespace

double studentized_range_quantile_mc(int T, int nu, double p, int draws, std::uint64_t seed,
                                     int threads) {
  if (T < 2 || nu < 1) throw DomainError("studentized range: T >= 2 and nu >= 1 required");
  std::vector<double> q(static_cast<std::size_t>(draws));
  parallel_for(draws, resolve_threads(threads), [&](long i) {
    Substream rng(seed, kOracleStream, static_cast<std::uint64_t>(i));
    double mx = -1e300, mn = 1e300;
    for (int t = 0; t < T; ++t) {
      double z = rng.normal();
      mx = std::max(mx, z);
      mn = std::min(mn, z);
    }
    double chi2 = 0.0;
    for (int k = 0; k < nu; ++k) {
      double z = rng.normal();
      chi2 += z * z;
    }
    q[static_cast<std::size_t>(i)] = (mx - mn) / std::sqrt(chi2 / nu);
  });
  return order_statistic(q, p);
}

PowerFigureResult run_power_figure(int T, int R, double alpha,
                                   const std::vector<double>& theta_grid, int reps,
                                   std::uint64_t seed, int threads) {
  PowerFigureResult res;
  res.T = T;
  res.R = R;
  res.alpha = alpha;
  res.reps = reps;
  res.seed = seed;

  const TestKind kinds[] = {TestKind::Block, TestKind::Coordinate, TestKind::Oplus};
  const Alternative::Kind alts[] = {Alternative::Kind::Dense, Alternative::Kind::Sparse};

  double lambda2 = closed_form_threshold_oneway(T, R, alpha, ThresholdMode::Block);
  double lambdaInf = closed_form_threshold_oneway(T, R, alpha, ThresholdMode::Coordinate);

  for (auto altk : alts) {
    for (std::size_t gi = 0; gi < theta_grid.size(); ++gi) {
      Alternative alt{altk, theta_grid[gi]};
      for (auto test : kinds) {
        if (test != TestKind::Oplus) {
          PowerFigureRow row;
          row.theta = alt.theta;
          row.test = test;
          row.alt = altk;
          row.monte_carlo = false;
          row.power = analytic_power(test, alt, T, R,
                                     test == TestKind::Block ? lambda2 : lambdaInf);
          row.se = 0.0;
          res.rows.push_back(row);
        }
        McPowerOptions opts;
        opts.threads = threads;
        // Same substream per (alternative, grid point) for every test, so the
        // three Monte Carlo estimates are paired on common data.
        opts.stream = streams::kSimulate + 2 * gi + (altk == Alternative::Kind::Dense ? 0 : 1);
        PowerEstimate pe = mc_power(test, alt, T, R, alpha, reps, seed, opts);
        PowerFigureRow row;
        row.theta = alt.theta;
        row.test = test;
        row.alt = altk;
        row.monte_carlo = true;
        row.power = pe.power;
        row.se = pe.se;
        res.rows.push_back(row);
      }
    }
  }
  return res;
}

TukeyStudyResult run_tukey_study(const std::vector<double>& theta_grid,
                                 const std::vector<int>& counts, int reps, double alpha,
                                 std::uint64_t seed, int threads) {
  TukeyStudyResult res;
  res.counts = counts;
  res.alpha = alpha;
  res.reps = reps;
  res.seed = seed;

  const int T = static_cast<int>(counts.size());
  const int N = std::accumulate(counts.begin(), counts.end(), 0);
  const int nu = N - T;
  if (nu < 1) throw DegreesOfFreedomError("tukey study: no residual degrees of freedom");

  // Exact threshold by Monte Carlo over this (possibly unbalanced) design.
  const int K = 50000;
  std::vector<double> pivots(K);
  parallel_for(K, resolve_threads(threads), [&](long i) {
    Substream rng(seed, streams::kCalibrate, static_cast<std::uint64_t>(i));
    Eigen::VectorXd z = rng.normal_vector(N);
    double rss = z.squaredNorm();
    long pos = 0;
    for (int t = 0; t < T; ++t) {
      double m = z.segment(pos, counts[t]).mean();
      rss -= counts[t] * m * m;
      pos += counts[t];
    }
    double sig = std::sqrt(std::max(rss, 0.0) / nu);
    PairwiseDifferences pd = pairwise_difference_transform(z, counts);
    double stat = 0.0;
    for (Eigen::Index p = 0; p < pd.ytilde.size(); ++p)
      stat = std::max(stat, std::abs(pd.ytilde[p] / pd.d[p]));
    pivots[static_cast<std::size_t>(i)] = stat / sig;
  });
  res.lambda_threshold = order_statistic(pivots, 1.0 - alpha);

  // Conservative interval baseline: balanced studentized-range critical value
  // with the per-pair harmonic-mean replicate count, i.e. reject a pair when
  // |ybar_t - ybar_t'| > q * sigma_hat * sqrt((1/R_t + 1/R_t')/2).  On the
  // standardized pair statistics that is a flat cut at q / sqrt(2).
  res.range_critical = studentized_range_quantile_mc(T, nu, 1.0 - alpha, 1000000, seed, threads);
  const double cut_interval = res.range_critical / std::sqrt(2.0);

  for (double theta : theta_grid) {
    Eigen::VectorXd mean(N);
    long pos = 0;
    for (int t = 0; t < T; ++t) {
      mean.segment(pos, counts[t]).setConstant(t == 0 ? theta : 0.0);
      pos += counts[t];
    }

    std::atomic<long> rej_thr{0}, rej_int{0};
    std::vector<double> det_thr(static_cast<std::size_t>(reps)),
        det_int(static_cast<std::size_t>(reps));
    parallel_for(reps, resolve_threads(threads), [&](long i) {
      Substream rng(seed, streams::kSimulate, static_cast<std::uint64_t>(i));
      Eigen::VectorXd y = mean + rng.normal_vector(N);
      double rss = y.squaredNorm();
      long at = 0;
      for (int t = 0; t < T; ++t) {
        double m = y.segment(at, counts[t]).mean();
        rss -= counts[t] * m * m;
        at += counts[t];
      }
      double sig = std::sqrt(std::max(rss, 0.0) / nu);
      PairwiseDifferences pd = pairwise_difference_transform(y, counts);
      double stat = 0.0;
      int hits_thr = 0, hits_int = 0;
      bool any_thr = false, any_int = false;
      for (std::size_t p = 0; p < pd.pairs.size(); ++p) {
        double s = std::abs(pd.ytilde[static_cast<Eigen::Index>(p)] /
                            pd.d[static_cast<Eigen::Index>(p)]) /
                   sig;
        stat = std::max(stat, s);
        bool true_pair = pd.pairs[p].first == 0;  // group 1 carries the shift
        if (s > res.lambda_threshold) {
          any_thr = true;
          if (true_pair) ++hits_thr;
        }
        if (s > cut_interval) {
          any_int = true;
          if (true_pair) ++hits_int;
        }
      }
      if (any_thr) ++rej_thr;
      if (any_int) ++rej_int;
      det_thr[static_cast<std::size_t>(i)] = hits_thr;
      det_int[static_cast<std::size_t>(i)] = hits_int;
    });

    TukeyStudyRow row;
    row.theta = theta;
    row.power_threshold = static_cast<double>(rej_thr.load()) / reps;
    row.power_interval = static_cast<double>(rej_int.load()) / reps;
    row.se_threshold = std::sqrt(row.power_threshold * (1 - row.power_threshold) / reps);
    row.se_interval = std::sqrt(row.power_interval * (1 - row.power_interval) / reps);
    row.percent_increase =
        row.power_interval > 0.0
            ? 100.0 * (row.power_threshold - row.power_interval) / row.power_interval
            : 0.0;
    row.detections_threshold =
        std::accumulate(det_thr.begin(), det_thr.end(), 0.0) / reps;
    row.detections_interval = std::accumulate(det_int.begin(), det_int.end(), 0.0) / reps;
    res.rows.push_back(row);
  }
  return res;
}

// ---------------------------------------------------------------------------

YuanLinData generate_yuanlin(const YuanLinModel& model, Substream& rng) {
  const int n = model.n;
  const int Q = model.groups();
  const int latent = Q;
  YuanLinData data;
  data.y.resize(n);

  // X_i = (Z_i + W)/sqrt(2) with a shared W, so corr(X_i, X_j) = 1/2.
  Eigen::MatrixXd X(n, latent);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z(latent);
    for (int q = 0; q < latent; ++q) z[q] = rng.normal();
    double w = rng.normal();
    for (int q = 0; q < latent; ++q) X(i, q) = (z[q] + w) / std::sqrt(2.0);
  }

  const bool iv = model.kind == YuanLinModel::Kind::IV;
  const double lo = std_normal_quantile(1.0 / 3.0);
  const double hi = std_normal_quantile(2.0 / 3.0);

  std::vector<int> widths;
  for (int q = 0; q < Q; ++q) {
    bool categorical = iv && q >= 10;
    if (!categorical) {
      Eigen::MatrixXd G(n, 3);
      G.col(0) = X.col(q);
      G.col(1) = X.col(q).array().square();
      G.col(2) = X.col(q).array().cube();
      data.group_cols.push_back(G);
      widths.push_back(3);
    } else {
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, 2);
      for (int i = 0; i < n; ++i) {
        double v = X(i, q);
        int level = v < lo ? 0 : (v > hi ? 2 : 1);
        if (level < 2) G(i, level) = 1.0;
      }
      data.group_cols.push_back(G);
      widths.push_back(2);
    }
  }

  int P = std::accumulate(widths.begin(), widths.end(), 0);
  data.theta_true = Eigen::VectorXd::Zero(P);
  auto offset = [&](int q) {
    int at = 0;
    for (int i = 0; i < q; ++i) at += widths[i];
    return at;
  };
  // Group 3 contributes x + x^2 + x^3, group 6 contributes
  // (2/3)x - x^2 + (1/3)x^3; model IV adds 2 I(level 0) + I(level 1) of
  // factor 11.
  data.theta_true.segment(offset(2), 3) << 1.0, 1.0, 1.0;
  data.theta_true.segment(offset(5), 3) << 2.0 / 3.0, -1.0, 1.0 / 3.0;
  data.true_groups = {2, 5};
  if (iv) {
    data.theta_true.segment(offset(10), 2) << 2.0, 1.0;
    data.true_groups.push_back(10);
  }

  for (int i = 0; i < n; ++i) {
    double x3 = X(i, 2), x6 = X(i, 5);
    double mu = (x3 * x3 * x3 + x3 * x3 + x3) +
                (x6 * x6 * x6 / 3.0 - x6 * x6 + 2.0 / 3.0 * x6);
    if (iv) {
      double v = X(i, 10);
      int level = v < lo ? 0 : (v > hi ? 2 : 1);
      mu += level == 0 ? 2.0 : (level == 1 ? 1.0 : 0.0);
    }
    data.y[i] = mu + model.noise_sd * rng.normal();
  }
  return data;
}

StudyReport run_yuanlin_study(const YuanLinModel& model, int runs, std::uint64_t seed,
                              const YuanLinOptions& opts) {
  if (runs < 10) throw ConfigError("yuanlin study: need at least 10 runs");
  StudyReport report;
  report.runs = runs;
  report.seed = seed;
  report.least_squares.name = "least_squares";
  report.sbite_qut.name = "sbite_qut";

  const int Q = model.groups();
  struct RunResult {
    bool ls_ok = false, sb_ok = false;
    double ls_sel = 0, ls_me = 0, ls_mex = 0;
    double sb_sel = 0, sb_me = 0, sb_mex = 0;
  };
  std::vector<RunResult> results(static_cast<std::size_t>(runs));

  parallel_for(runs, resolve_threads(opts.threads), [&](long run) {
    RunResult& rr = results[static_cast<std::size_t>(run)];
    Substream rng(seed, streams::kSimulate, static_cast<std::uint64_t>(run));
    YuanLinData data = generate_yuanlin(model, rng);
    const int n = model.n;

    Eigen::Index P = data.theta_true.size();
    Eigen::MatrixXd X(n, P);
    Eigen::Index at = 0;
    std::vector<Eigen::Index> offs;
    for (const auto& G : data.group_cols) {
      offs.push_back(at);
      X.middleCols(at, G.cols()) = G;
      at += G.cols();
    }
    Eigen::MatrixXd M(n, P + 1);
    M.col(0).setOnes();
    M.rightCols(P) = X;

    // Least squares on the full model.
    try {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
      if (qr.rank() < M.cols()) throw RankError("rank-deficient least squares");
      Eigen::VectorXd coef = qr.solve(data.y);
      Eigen::VectorXd th = coef.tail(P);
      Eigen::VectorXd diff = th - data.theta_true;
      rr.ls_sel = Q;  // every group carries nonzero least-squares coefficients
      rr.ls_me = diff.squaredNorm();
      rr.ls_mex = (X * diff).squaredNorm() / n;
      rr.ls_ok = true;
    } catch (const std::exception&) {
      rr.ls_ok = false;
    }

    // SBITE at the quantile universal threshold.
    try {
      DesignSpec spec;
      spec.A = Eigen::MatrixXd::Ones(n, 1);
      for (int q = 0; q < Q; ++q)
        spec.blocks.push_back({"g" + std::to_string(q + 1), data.group_cols[q],
                               ThresholdMode::Block});
      double alphaQ = qut_alpha(Q);
      PreparedDesign prep = prepare_design(spec, InitialScale::Unit);
      prep = quantile_rescale(prep, alphaQ, seed + 1000003 * (run + 1), opts.K1);

      SigmaEstimator sigma = P > n ? SigmaEstimator::mad() : SigmaEstimator::unbiased();
      SigmaEvaluator eval(sigma, spec.A, X);
      NullSampler sampler{&prep, eval, seed + 1000003 * (run + 1), streams::kCalibrate};
      Calibration cal = quantile_universal_threshold(sampler, Q, opts.K);

      double sig = eval.observed(data.y);
      Eigen::VectorXd y_A = prep.project_out(data.y);
      ThresholdedFit fit = sbite_solve(y_A, prep, cal.lambda_alpha * sig);
      std::vector<Eigen::VectorXd> theta = back_transform(fit, prep);

      int selected = 0;
      Eigen::VectorXd th = Eigen::VectorXd::Zero(P);
      for (int q = 0; q < Q; ++q) {
        if (fit.gamma[static_cast<std::size_t>(q)].lpNorm<Eigen::Infinity>() != 0.0) ++selected;
        th.segment(offs[static_cast<std::size_t>(q)],
                   theta[static_cast<std::size_t>(q)].size()) =
            theta[static_cast<std::size_t>(q)];
      }
      Eigen::VectorXd diff = th - data.theta_true;
      rr.sb_sel = selected;
      rr.sb_me = diff.squaredNorm();
      rr.sb_mex = (X * diff).squaredNorm() / n;
      rr.sb_ok = true;
    } catch (const std::exception&) {
      rr.sb_ok = false;
    }
  });

  for (const RunResult& rr : results) {
    if (rr.ls_ok) {
      report.least_squares.mean_selected += rr.ls_sel;
      report.least_squares.model_error_theta += rr.ls_me;
      report.least_squares.model_error_xtheta += rr.ls_mex;
      ++report.least_squares.completed;
    } else {
      ++report.least_squares.failed;
    }
    if (rr.sb_ok) {
      report.sbite_qut.mean_selected += rr.sb_sel;
      report.sbite_qut.model_error_theta += rr.sb_me;
      report.sbite_qut.model_error_xtheta += rr.sb_mex;
      ++report.sbite_qut.completed;
    } else {
      ++report.sbite_qut.failed;
    }
  }
  for (EstimatorAggregate* agg : {&report.least_squares, &report.sbite_qut}) {
    if (agg->completed > 0) {
      agg->mean_selected /= agg->completed;
      agg->model_error_theta /= agg->completed;
      agg->model_error_xtheta /= agg->completed;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

ErgoStoolResult run_ergostool(const std::string& csv_path, double alpha, int K,
                              std::uint64_t seed, int threads) {
  CsvTable table = read_csv(csv_path);
  int c_effort = table.col("effort");
  int c_type = table.col("type");
  int c_subject = table.col("subject");

  const long n = static_cast<long>(table.rows.size());
  if (n < 8) throw IngestionError("stool fixture has too few rows");
  Eigen::VectorXd y(n);
  std::vector<std::string> type_labels(n), subject_labels(n);
  for (long i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    y[i] = parse_double(row[c_effort], i + 2, "effort");
    type_labels[static_cast<std::size_t>(i)] = row[c_type];
    subject_labels[static_cast<std::size_t>(i)] = row[c_subject];
  }

  ErgoStoolResult res;
  Eigen::MatrixXd Xtype = encode_factor(type_labels, &res.type_levels);
  Eigen::MatrixXd Xsubj = encode_factor(subject_labels, &res.subject_levels);

  DesignSpec spec;
  spec.A = Eigen::MatrixXd::Ones(n, 1);
  spec.blocks.push_back({"type", Xtype, ThresholdMode::Coordinate});
  spec.blocks.push_back({"subject", Xsubj, ThresholdMode::Block});

  GeneralTestOptions opts;
  opts.threads = threads;
  res.outcome =
      general_anova_test(spec, y, alpha, SigmaEstimator::unbiased(), K, seed, opts);
  res.outcome.coord_names["type"] = res.type_levels;
  res.intercept = res.outcome.nuisance_coef[0];
  res.type_effects = res.outcome.theta[0];
  res.subject_effects = res.outcome.theta[1];
  return res;
}

// ---------------------------------------------------------------------------

void write_power_figure(const PowerFigureResult& result, const std::string& out_dir,
                        double runtime_seconds) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<std::string>> analytic, mc;
  for (const auto& r : result.rows) {
    std::vector<std::string> row{format_double(r.theta), to_string(r.test),
                                 to_string(r.alt), format_double(r.power),
                                 format_double(r.se)};
    (r.monte_carlo ? mc : analytic).push_back(std::move(row));
  }
  const std::vector<std::string> header{"theta", "test", "alternative", "power", "se"};
  write_csv((std::filesystem::path(out_dir) / "power_analytic.csv").string(), header, analytic);
  write_csv((std::filesystem::path(out_dir) / "power_mc.csv").string(), header, mc);

  nlohmann::json meta = meta_base(result.seed, runtime_seconds);
  meta["study"] = "power";
  meta["T"] = result.T;
  meta["R"] = result.R;
  meta["alpha"] = result.alpha;
  meta["reps"] = result.reps;
  write_meta(meta, out_dir);
}

void write_tukey_study(const TukeyStudyResult& result, const std::string& out_dir,
                       double runtime_seconds) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : result.rows)
    rows.push_back({format_double(r.theta), format_double(r.power_threshold),
                    format_double(r.se_threshold), format_double(r.power_interval),
                    format_double(r.se_interval), format_double(r.percent_increase),
                    format_double(r.detections_threshold),
                    format_double(r.detections_interval)});
  write_csv((std::filesystem::path(out_dir) / "tukey_study.csv").string(),
            {"theta", "power_threshold", "se_threshold", "power_interval", "se_interval",
             "percent_increase", "detections_threshold", "detections_interval"},
            rows);

  nlohmann::json meta = meta_base(result.seed, runtime_seconds);
  meta["study"] = "tukey";
  meta["counts"] = result.counts;
  meta["alpha"] = result.alpha;
  meta["reps"] = result.reps;
  meta["lambda_threshold"] = result.lambda_threshold;
  meta["range_critical"] = result.range_critical;
  write_meta(meta, out_dir);
}

void write_yuanlin_study(const StudyReport& report, const YuanLinModel& model,
                         const std::string& out_dir, double runtime_seconds) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  for (const EstimatorAggregate* agg : {&report.least_squares, &report.sbite_qut})
    rows.push_back({agg->name, format_double(agg->mean_selected),
                    format_double(agg->model_error_theta),
                    format_double(agg->model_error_xtheta), std::to_string(agg->completed),
                    std::to_string(agg->failed)});
  write_csv((std::filesystem::path(out_dir) / "yuanlin_study.csv").string(),
            {"estimator", "mean_selected", "model_error_theta", "model_error_xtheta",
             "completed", "failed"},
            rows);

  nlohmann::json meta = meta_base(report.seed, runtime_seconds);
  meta["study"] = "yuanlin";
  meta["model"] = model.kind == YuanLinModel::Kind::III ? "III" : "IV";
  meta["n"] = model.n;
  meta["runs"] = report.runs;
  write_meta(meta, out_dir);
}

void write_ergostool(const ErgoStoolResult& result, const std::string& out_dir,
                     double runtime_seconds) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"intercept", "", format_double(result.intercept)});
  for (Eigen::Index i = 0; i < result.type_effects.size(); ++i)
    rows.push_back({"type", result.type_levels[static_cast<std::size_t>(i)],
                    format_double(result.type_effects[i])});
  for (Eigen::Index i = 0; i < result.subject_effects.size(); ++i)
    rows.push_back({"subject", result.subject_levels[static_cast<std::size_t>(i)],
                    format_double(result.subject_effects[i])});
  write_csv((std::filesystem::path(out_dir) / "ergostool_coefficients.csv").string(),
            {"term", "level", "estimate"}, rows);

  nlohmann::json meta = meta_base(result.outcome.seed, runtime_seconds);
  meta["study"] = "ergostool";
  meta["alpha"] = result.outcome.alpha;
  meta["reject"] = result.outcome.reject;
  meta["statistic"] = result.outcome.statistic;
  meta["threshold"] = result.outcome.threshold;
  write_meta(meta, out_dir);
}

}  // namespace threshova
