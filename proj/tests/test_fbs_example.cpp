#include "semicrit/fbs_example.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "semicrit/rng.hpp"
#include "semicrit/semimartingale.hpp"
#include "semicrit/stats.hpp"

namespace semicrit {
namespace {

constexpr double kMeanX1 = std::numbers::e - 1.0;  // e - 1
constexpr double kVarX1 = 7.0 / 3.0;

TEST(ExampleModelTest, DriftStartsAtOneExactly) {
  // v_0 = X_0 + e^0 - I_0 = 1 on every path.
  const PathEnsemble ens = simulate(example_model(), make_grid(32), 40, 1);
  for (int p = 0; p < 40; ++p) EXPECT_EQ(ens.v_at(p, 0), 1.0);
}

TEST(ExampleModelTest, ZeroNoiseDriftRecursionTracksExponential) {
  // With B == 0 the exact solution is X_t = e^t - 1, v_t = e^t. The
  // exponential-decay recursion is order-1: the n = 512 error sits between
  // 1e-3 and 5e-3 and halving dt halves it.
  auto sup_drift_error = [](int n) {
    const TimeGrid grid = make_grid(n);
    NoiseBlock zero;
    zero.m = 1;
    zero.n = n;
    zero.d = 1;
    zero.dt = grid.dt;
    zero.increments.assign(static_cast<size_t>(n), 0.0);
    const PathEnsemble ens = simulate_with_noise(example_model(), grid, zero, 2);
    double sup = 0.0;
    for (int i = 0; i < n; ++i) {
      sup = std::max(sup, std::abs(ens.v_at(0, i) - std::exp(grid.times[i])));
    }
    return sup;
  };
  const double e512 = sup_drift_error(512);
  const double e1024 = sup_drift_error(1024);
  const double e2048 = sup_drift_error(2048);
  EXPECT_LT(e512, 5e-3);
  EXPECT_GT(e512, 1e-3);  // honest about the order-1 constant
  EXPECT_LT(e2048, 1.1e-3);
  EXPECT_NEAR(e512 / e1024, 2.0, 0.25);
}

TEST(ExampleModelTest, DriftCursorRejectsOutOfOrderSteps) {
  const TimeGrid grid = make_grid(16);
  auto cursor = example_model().drift(grid);
  cursor->begin_path();
  std::vector<double> values(17, 0.0);
  double out = 0.0;
  cursor->eval(0, grid.times[0], values, {&out, 1});
  cursor->eval(1, grid.times[1], values, {&out, 1});
  EXPECT_THROW(cursor->eval(1, grid.times[1], values, {&out, 1}), std::logic_error);
}

TEST(ExampleModelTest, ModelIsAdapted) {
  const PathEnsemble ens = simulate(example_model(), make_grid(64), 60, 3);
  const AdaptednessAuditReport audit = audit_adaptedness(example_model(), ens, 200, 99);
  EXPECT_TRUE(audit.pass) << "max deviation " << audit.max_deviation;
}

TEST(ExampleOracleTest, ClosedFormMomentsAtTimeOne) {
  const TimeGrid grid = make_grid(512);
  const int m = 20000;
  const NoiseBlock noise = gaussian_stream(4, m, 512, 1, grid.dt);
  const OraclePaths oracle = example_oracle(noise, grid);
  std::vector<double> x1(m), y0(m);
  for (int p = 0; p < m; ++p) {
    x1[p] = oracle.x_at(p, 512);
    y0[p] = oracle.y_at(p, 0);
  }
  for (double v : y0) EXPECT_EQ(v, 1.0);
  EXPECT_NEAR(sample_mean(x1), kMeanX1, 0.04);
  EXPECT_NEAR(sample_variance(x1), kVarX1, 0.08);
}

TEST(ExampleOracleTest, RejectsBadShapes) {
  const TimeGrid grid = make_grid(16);
  const NoiseBlock wrong_d = gaussian_stream(5, 2, 16, 2, grid.dt);
  EXPECT_THROW(example_oracle(wrong_d, grid), std::invalid_argument);
  const NoiseBlock wrong_n = gaussian_stream(5, 2, 8, 1, 1.0 / 8);
  EXPECT_THROW(example_oracle(wrong_n, grid), std::invalid_argument);
}

TEST(ExampleOracleTest, SimulationConvergesToOracleOnSharedNoise) {
  // Strong order 1: each resolution is scored against the closed form driven
  // by the same (coarsened) noise on its own grid, so the error halves when
  // the step count doubles.
  const int m = 2000;
  auto mean_sup_error = [&](const NoiseBlock& noise, const TimeGrid& grid) {
    const PathEnsemble ens = simulate_with_noise(example_model(), grid, noise, 7);
    const OraclePaths oracle = example_oracle(noise, grid);
    double acc = 0.0;
    for (int p = 0; p < m; ++p) {
      double sup = 0.0;
      for (int i = 0; i <= grid.n_steps; ++i) {
        sup = std::max(sup, std::abs(ens.x_at(p, i) - oracle.x_at(p, i)));
      }
      acc += sup;
    }
    return acc / m;
  };
  const TimeGrid fine = make_grid(512);
  const NoiseBlock noise_fine = gaussian_stream(6, m, 512, 1, fine.dt);
  const double err_fine = mean_sup_error(noise_fine, fine);
  const double err_coarse = mean_sup_error(coarsen(noise_fine, 2), make_grid(256));
  EXPECT_LT(err_fine, 0.02);
  const double ratio = err_coarse / err_fine;
  EXPECT_GT(ratio, 1.6);
  EXPECT_LT(ratio, 2.4);
}

TEST(ExampleOracleTest, FineGridCrossCheck) {
  // n = 8192 in ten batches of 1000 paths: the Euler scheme stays within 0.02
  // mean sup-distance of the closed form.
  const TimeGrid grid = make_grid(8192);
  double acc = 0.0;
  int total = 0;
  for (int batch = 0; batch < 10; ++batch) {
    const NoiseBlock noise = gaussian_stream(100 + batch, 1000, 8192, 1, grid.dt);
    const PathEnsemble ens = simulate_with_noise(example_model(), grid, noise, 8);
    const OraclePaths oracle = example_oracle(noise, grid);
    for (int p = 0; p < 1000; ++p) {
      double sup = 0.0;
      for (int i = 0; i <= 8192; ++i) {
        sup = std::max(sup, std::abs(ens.x_at(p, i) - oracle.x_at(p, i)));
      }
      acc += sup;
      ++total;
    }
  }
  EXPECT_LT(acc / total, 0.02);
}

TEST(TargetMarginalTest, DensityAndCdfClosedForms) {
  EXPECT_DOUBLE_EQ(target_density(kMeanX1), std::sqrt(3.0 / (14.0 * std::numbers::pi)));
  EXPECT_NEAR(target_density(kMeanX1), 0.261169028265409, 1e-12);
  EXPECT_DOUBLE_EQ(target_cdf(kMeanX1), 0.5);
  EXPECT_NEAR(target_cdf(kMeanX1 + std::sqrt(kVarX1)), normal_cdf(1.0), 1e-12);

  // The density integrates to 1 (trapezoid over +/- 10 standard deviations).
  const double sd = std::sqrt(kVarX1);
  const int k = 20000;
  const double lo = kMeanX1 - 10.0 * sd, hi = kMeanX1 + 10.0 * sd;
  const double step = (hi - lo) / k;
  double mass = 0.0;
  for (int i = 0; i < k; ++i) {
    mass += 0.5 * (target_density(lo + i * step) + target_density(lo + (i + 1) * step)) * step;
  }
  EXPECT_NEAR(mass, 1.0, 1e-8);

  const MarginalSpec spec = example_target_marginal();
  EXPECT_FALSE(spec.is_dirac);
  EXPECT_DOUBLE_EQ(spec.cdf(kMeanX1), 0.5);
}

TEST(FbsVerifyTest, BenchmarkLawPasses) {
  const PathEnsemble ens = simulate(example_model(), make_grid(512), 20000, 9);
  const FbsReport report = fbs_verify(ens, zero_potential(), dirac_marginal(0.0),
                                      example_target_marginal(), 0.01);
  EXPECT_TRUE(report.verdict);
  EXPECT_TRUE(report.initial_ok);
  EXPECT_TRUE(report.marginal_ok) << "KS p " << report.marginal_ks.p_value;
  EXPECT_TRUE(report.backward_ok) << "max |t| " << report.backward_test.max_abs_t;
  EXPECT_TRUE(report.qv_ok);
  EXPECT_NEAR(report.qv_realized, 1.0, 0.05);
  EXPECT_NEAR(report.moment_y, std::exp(2.0) / 2.0, 0.2);
}

TEST(FbsVerifyTest, LinearFeedbackLawFailsBackwardCondition) {
  // dX = dB + X dt: Y = X is not a shifted martingale, so (b) must fail.
  const PathEnsemble ens = simulate(linear_drift_model(1.0), make_grid(256), 20000, 10);
  MarginalSpec nu1;
  nu1.name = "normal(0,(e^2-1)/2)";
  const double sd = std::sqrt((std::exp(2.0) - 1.0) / 2.0);
  nu1.cdf = [sd](double x) { return normal_cdf(x / sd); };
  const FbsReport report = fbs_verify(ens, zero_potential(), dirac_marginal(0.0), nu1, 0.01);
  EXPECT_FALSE(report.backward_ok);
  EXPECT_FALSE(report.verdict);
}

TEST(FbsVerifyTest, DeterministicTransportPasses) {
  // sigma = 0, drift = 1: X_t = t moves delta_0 to delta_1 with zero QV.
  const PathEnsemble ens =
      simulate(constant_model({1.0}, {0.0}, {0.0}), make_grid(128), 1500, 11);
  const FbsReport report =
      fbs_verify(ens, zero_potential(), dirac_marginal(0.0), dirac_marginal(1.0), 0.01);
  EXPECT_TRUE(report.initial_ok);
  EXPECT_TRUE(report.marginal_ok);
  EXPECT_TRUE(report.backward_ok);
  EXPECT_TRUE(report.qv_ok);
  EXPECT_NEAR(report.qv_realized, 0.0, 1e-12);
  EXPECT_TRUE(report.verdict);
}

TEST(FbsVerifyTest, RejectsMultidimensionalEnsembles) {
  const PathEnsemble ens = simulate(wiener_model(2), make_grid(8), 1200, 12);
  EXPECT_THROW(fbs_verify(ens, zero_potential(), dirac_marginal(0.0), dirac_marginal(0.0), 0.01),
               std::invalid_argument);
}

}  // namespace
}  // namespace semicrit
