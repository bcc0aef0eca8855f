#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "threshova/errors.hpp"
#include "threshova/io.hpp"
#include "threshova/simharness.hpp"

using namespace threshova;

static const std::string kDataDir = THRESHOVA_DATA_DIR;

TEST_CASE("yuanlin generator") {
  SUBCASE("latent factors have correlation near one half") {
    YuanLinModel model;
    model.kind = YuanLinModel::Kind::III;
    model.n = 1;  // draw single rows many times
    Substream rng(5, streams::kSimulate, 0);
    const int draws = 100000;
    double s1 = 0, s2 = 0, s12 = 0, q1 = 0, q2 = 0;
    for (int i = 0; i < draws; ++i) {
      YuanLinData d = generate_yuanlin(model, rng);
      double x1 = d.group_cols[0](0, 0);
      double x2 = d.group_cols[1](0, 0);
      s1 += x1;
      s2 += x2;
      s12 += x1 * x2;
      q1 += x1 * x1;
      q2 += x2 * x2;
    }
    double m1 = s1 / draws, m2 = s2 / draws;
    double cov = s12 / draws - m1 * m2;
    double corr = cov / std::sqrt((q1 / draws - m1 * m1) * (q2 / draws - m2 * m2));
    CHECK(corr == doctest::Approx(0.5).epsilon(0.02));
  }

  SUBCASE("trichotomized frequencies are one third each") {
    YuanLinModel model;
    model.kind = YuanLinModel::Kind::IV;
    model.n = 30000;
    Substream rng(7, streams::kSimulate, 0);
    YuanLinData d = generate_yuanlin(model, rng);
    const Eigen::MatrixXd& G = d.group_cols[10];  // first categorical group
    double f0 = G.col(0).sum() / model.n;
    double f1 = G.col(1).sum() / model.n;
    CHECK(f0 == doctest::Approx(1.0 / 3.0).epsilon(0.03));
    CHECK(f1 == doctest::Approx(1.0 / 3.0).epsilon(0.03));
  }

  SUBCASE("true groups and dimensions") {
    YuanLinModel m3;
    Substream rng(9, streams::kSimulate, 1);
    YuanLinData d3 = generate_yuanlin(m3, rng);
    CHECK(d3.group_cols.size() == 16);
    CHECK(d3.theta_true.size() == 48);
    CHECK(d3.true_groups == std::vector<int>{2, 5});

    YuanLinModel m4;
    m4.kind = YuanLinModel::Kind::IV;
    YuanLinData d4 = generate_yuanlin(m4, rng);
    CHECK(d4.group_cols.size() == 20);
    CHECK(d4.theta_true.size() == 50);
    CHECK(d4.true_groups == std::vector<int>{2, 5, 10});
    // nonzero pattern sits exactly on groups 3, 6, 11
    CHECK(d4.theta_true.segment(30, 2).isApprox(Eigen::Vector2d(2.0, 1.0)));
  }
}

TEST_CASE("yuanlin study at reduced scale") {
  YuanLinModel model;
  YuanLinOptions opts;
  opts.K = 2000;
  opts.threads = 2;
  StudyReport report = run_yuanlin_study(model, 20, 31, opts);

  CHECK(report.least_squares.completed == 20);
  CHECK(report.least_squares.mean_selected == doctest::Approx(16.0));
  CHECK(report.sbite_qut.completed == 20);
  CHECK(report.sbite_qut.mean_selected >= 2.0);
  CHECK(report.sbite_qut.mean_selected <= 6.5);
  CHECK(report.sbite_qut.model_error_theta < report.least_squares.model_error_theta);

  SUBCASE("reports are reproducible") {
    StudyReport again = run_yuanlin_study(model, 20, 31, opts);
    CHECK(again.sbite_qut.mean_selected == report.sbite_qut.mean_selected);
    CHECK(again.sbite_qut.model_error_theta == report.sbite_qut.model_error_theta);
  }
}

TEST_CASE("tukey study at reduced scale") {
  TukeyStudyResult res = run_tukey_study({0.0, 3.0, 6.0}, {1, 5, 9, 10, 10}, 2000, 0.05, 17, 2);
  REQUIRE(res.rows.size() == 3);

  // theta = 0: both tests near or below level, interval below threshold.
  CHECK(res.rows[0].power_threshold < 0.05 + 3.0 * res.rows[0].se_threshold + 0.01);
  CHECK(res.rows[0].power_interval <= res.rows[0].power_threshold);

  // power grows along the grid and detections approach T-1 = 4 at theta = 6
  CHECK(res.rows[1].power_threshold > res.rows[0].power_threshold);
  CHECK(res.rows[2].power_threshold >= res.rows[1].power_threshold);
  CHECK(res.rows[2].detections_threshold > 3.5);

  // the exact test never trails the conservative baseline by more than noise
  for (const auto& row : res.rows)
    CHECK(row.power_threshold >= row.power_interval - 2.0 * row.se_threshold);
}

TEST_CASE("power figure rows") {
  PowerFigureResult res = run_power_figure(5, 10, 0.05, {0.0, 0.5, 1.5}, 500, 3, 2);
  // analytic rows for 2 tests x 2 alternatives x 3 thetas, mc rows for 3 tests
  int analytic = 0, mc = 0;
  for (const auto& r : res.rows) (r.monte_carlo ? mc : analytic)++;
  CHECK(analytic == 12);
  CHECK(mc == 18);
  for (const auto& r : res.rows) {
    if (!r.monte_carlo && r.theta == 0.0)
      CHECK(r.power == doctest::Approx(0.05).epsilon(1e-6));
    if (r.theta == 0.0 && r.monte_carlo) CHECK(std::abs(r.power - 0.05) < 0.04);
  }
}

TEST_CASE("ergostool") {
  std::string path = kDataDir + "/ergostool.csv";
  ErgoStoolResult res = run_ergostool(path, 0.05, 20000, 1);
  CHECK(res.outcome.reject);
  CHECK(res.intercept == doctest::Approx(10.2).epsilon(0.01));
  REQUIRE(res.type_levels.size() == 4);
  CHECK(res.type_levels[2] == "T3");
  CHECK(res.type_effects[2] == 0.0);  // exactly thresholded away
  CHECK(res.outcome.detections.at("type").nonzero);
  CHECK(res.outcome.detections.at("subject").nonzero);

  SUBCASE("malformed fixture reports the row") {
    std::string bad = (std::filesystem::temp_directory_path() / "bad_stool.csv").string();
    std::ofstream out(bad);
    out << "effort,type,subject\n12,T1,S1\noops,T2,S1\n";
    for (int i = 0; i < 8; ++i) out << "9,T3,S" << i << "\n";
    out.close();
    CHECK_THROWS_WITH_AS(run_ergostool(bad, 0.05, 1000, 1), doctest::Contains("row 3"),
                         IngestionError);
  }
}

TEST_CASE("study writers produce tables and metadata") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "threshova_study_test";
  fs::remove_all(dir);

  TukeyStudyResult res = run_tukey_study({0.0}, {2, 3}, 200, 0.05, 5, 1);
  write_tukey_study(res, dir.string(), 0.5);
  CHECK(fs::exists(dir / "tukey_study.csv"));
  CHECK(fs::exists(dir / "meta.json"));

  CsvTable table = read_csv((dir / "tukey_study.csv").string());
  CHECK(table.header.front() == "theta");
  CHECK(table.rows.size() == 1);
  fs::remove_all(dir);
}
