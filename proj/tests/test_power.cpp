#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracle_helpers.hpp"
#include "threshova/calibration.hpp"
#include "threshova/errors.hpp"
#include "threshova/power.hpp"

using namespace threshova;

TEST_CASE("delta_phi") {
  SUBCASE("symmetry at theta = 0") {
    // Delta_0(lambda) = 2 Phi(lambda/sqrt(R)) - 1
    for (double lam : {2.0, 8.12}) {
      double v = delta_phi(0.0, lam, 10);
      double direct = 2.0 * oracle::normal_cdf_quad(lam / std::sqrt(10.0)) - 1.0;
      CHECK(v == doctest::Approx(direct).epsilon(1e-6));
    }
  }

  SUBCASE("large lambda limit") {
    CHECK(delta_phi(0.3, 500.0, 10) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("Gaussian-integration oracle at theta = 1") {
    // integral of the N(R theta, R) density over [-lambda, lambda]
    const double lam = 8.12, theta = 1.0;
    const int R = 10;
    auto dens = [&](double x) {
      double s = std::sqrt(static_cast<double>(R));
      return oracle::gauss_pdf((x - R * theta) / s) / s;
    };
    double direct = oracle::simpson(dens, -lam, lam, 20000);
    CHECK(delta_phi(theta, lam, R) == doctest::Approx(direct).epsilon(1e-6));
  }

  SUBCASE("result is a probability") {
    for (double th : {-2.0, 0.0, 0.4, 3.0})
      for (double lam : {0.5, 8.0}) {
        double v = delta_phi(th, lam, 10);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
  }
}

TEST_CASE("analytic_power") {
  const int T = 5, R = 10;
  const double alpha = 0.05;
  double lam2 = closed_form_threshold_oneway(T, R, alpha, ThresholdMode::Block);
  double lamI = closed_form_threshold_oneway(T, R, alpha, ThresholdMode::Coordinate);

  SUBCASE("power at theta = 0 is exactly alpha") {
    CHECK(analytic_power(TestKind::Block, Alternative::dense(0.0), T, R, lam2) ==
          doctest::Approx(alpha).epsilon(1e-6));
    CHECK(analytic_power(TestKind::Block, Alternative::sparse(0.0), T, R, lam2) ==
          doctest::Approx(alpha).epsilon(1e-6));
    CHECK(analytic_power(TestKind::Coordinate, Alternative::dense(0.0), T, R, lamI) ==
          doctest::Approx(alpha).epsilon(1e-6));
    CHECK(analytic_power(TestKind::Coordinate, Alternative::sparse(0.0), T, R, lamI) ==
          doctest::Approx(alpha).epsilon(1e-6));
  }

  SUBCASE("consistency at large theta") {
    CHECK(analytic_power(TestKind::Block, Alternative::dense(10.0), T, R, lam2) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(analytic_power(TestKind::Coordinate, Alternative::sparse(10.0), T, R, lamI) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("sign invariance of the dense alternative") {
    // Analytic dense power depends on theta only through theta^2 patterns.
    CHECK(analytic_power(TestKind::Block, Alternative::dense(0.7), T, R, lam2) ==
          doctest::Approx(analytic_power(TestKind::Block, Alternative::dense(-0.7), T, R, lam2))
              .epsilon(1e-12));
    CHECK(analytic_power(TestKind::Coordinate, Alternative::sparse(0.7), T, R, lamI) ==
          doctest::Approx(
              analytic_power(TestKind::Coordinate, Alternative::sparse(-0.7), T, R, lamI))
              .epsilon(1e-12));
  }

  SUBCASE("block noncentrality: dense beats sparse at equal theta") {
    for (double th : {0.3, 0.6, 1.0})
      CHECK(analytic_power(TestKind::Block, Alternative::dense(th), T, R, lam2) >=
            analytic_power(TestKind::Block, Alternative::sparse(th), T, R, lam2));
  }

  SUBCASE("matches Monte Carlo within two points") {
    McPowerOptions opts;
    for (double th : {0.5, 1.0}) {
      for (auto altk : {Alternative::Kind::Dense, Alternative::Kind::Sparse}) {
        Alternative alt{altk, th};
        double a_block = analytic_power(TestKind::Block, alt, T, R, lam2);
        double a_coord = analytic_power(TestKind::Coordinate, alt, T, R, lamI);
        PowerEstimate m_block = mc_power(TestKind::Block, alt, T, R, alpha, 2000, 9, opts);
        PowerEstimate m_coord = mc_power(TestKind::Coordinate, alt, T, R, alpha, 2000, 9, opts);
        CHECK(std::abs(a_block - m_block.power) < 0.02);
        CHECK(std::abs(a_coord - m_coord.power) < 0.02);
      }
    }
  }
}

TEST_CASE("mc_power") {
  const int T = 5, R = 10;
  McPowerOptions opts;

  SUBCASE("null case returns roughly alpha") {
    PowerEstimate pe = mc_power(TestKind::Block, Alternative::dense(0.0), T, R, 0.05, 2000, 21, opts);
    CHECK(std::abs(pe.power - 0.05) < 3.0 * std::sqrt(0.05 * 0.95 / 2000.0));
    CHECK(pe.se == doctest::Approx(std::sqrt(pe.power * (1 - pe.power) / 2000.0)));
  }

  SUBCASE("monotone in theta within noise") {
    double prev = -1.0;
    for (double th : {0.0, 0.5, 1.0, 1.5}) {
      PowerEstimate pe =
          mc_power(TestKind::Coordinate, Alternative::sparse(th), T, R, 0.05, 1000, 23, opts);
      CHECK(pe.power > prev - 0.04);  // two MC standard errors of slack
      prev = pe.power;
    }
  }

  SUBCASE("hybrid sits near the best of the two tests") {
    double lam2 = closed_form_threshold_oneway(T, R, 0.05, ThresholdMode::Block);
    double lamI = closed_form_threshold_oneway(T, R, 0.05, ThresholdMode::Coordinate);
    for (auto [altk, th] : {std::pair{Alternative::Kind::Dense, 0.5},
                            std::pair{Alternative::Kind::Sparse, 1.5}}) {
      Alternative alt{altk, th};
      double best = std::max(analytic_power(TestKind::Block, alt, T, R, lam2),
                             analytic_power(TestKind::Coordinate, alt, T, R, lamI));
      PowerEstimate op = mc_power(TestKind::Oplus, alt, T, R, 0.05, 2000, 25, opts);
      CHECK(op.power > best - 0.10);
    }
  }

  SUBCASE("estimated-sigma variant keeps the null level") {
    McPowerOptions est;
    est.sigma = SigmaEstimator::unbiased();
    est.calibration_K = 5000;
    PowerEstimate pe =
        mc_power(TestKind::Coordinate, Alternative::dense(0.0), T, R, 0.05, 2000, 27, est);
    CHECK(std::abs(pe.power - 0.05) < 0.02);
  }

  SUBCASE("too few replicates rejected") {
    CHECK_THROWS_AS(mc_power(TestKind::Block, Alternative::dense(0.5), T, R, 0.05, 50, 1, opts),
                    ConfigError);
  }
}
