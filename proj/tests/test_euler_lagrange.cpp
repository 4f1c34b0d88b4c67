#include "semicrit/euler_lagrange.hpp"

#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "semicrit/action.hpp"
#include "semicrit/fbs_example.hpp"
#include "semicrit/lagrangian.hpp"
#include "semicrit/semimartingale.hpp"

namespace semicrit {
namespace {

ResidualSamples free_residual(const PathEnsemble& ens) {
  return el_residual(ens, make_qem(zero_potential()));
}

TEST(DecomposeTest, FreeWienerResidualVanishesExactly) {
  const PathEnsemble ens = simulate(wiener_model(1), make_grid(32), 50, 1);
  const ELDecomposition decomp = decompose(free_residual(ens));
  for (int i = 0; i < 32; ++i) EXPECT_EQ(decomp.A_at(i), 0.0);
  for (double n : decomp.N_samples) EXPECT_EQ(n, 0.0);
  EXPECT_EQ(decomp.energy_A, 0.0);
  EXPECT_EQ(decomp.energy_N, 0.0);
}

TEST(DecomposeTest, IdenticalResidualsYieldExactlyZeroRemainder) {
  // drift 1, sigma 0: every path has xi_dot == 1, so A == 1 and N == 0
  // exactly (reference-shifted mean annihilates identical rows).
  const PathEnsemble ens = simulate(constant_model({1.0}, {0.0}, {0.0}), make_grid(64), 1500, 2);
  const ELDecomposition decomp = decompose(free_residual(ens));
  for (int i = 0; i < 64; ++i) EXPECT_EQ(decomp.A_at(i), 1.0);
  for (double n : decomp.N_samples) EXPECT_EQ(n, 0.0);
  EXPECT_DOUBLE_EQ(decomp.energy_A, 1.0);
  EXPECT_EQ(decomp.energy_N, 0.0);

  const ELVerdict verdict = el_verdict(decomp, ens, 0.01);
  EXPECT_TRUE(verdict.satisfied);
  EXPECT_TRUE(verdict.energies_finite);
}

TEST(DecomposeTest, RemainderIsCenteredIntervalWise) {
  const PathEnsemble ens = simulate(example_model(), make_grid(128), 2000, 3);
  const ELDecomposition decomp = decompose(free_residual(ens));
  for (int i = 0; i < 128; ++i) {
    double mean = 0.0;
    for (int p = 0; p < 2000; ++p) {
      mean += decomp.N_samples[static_cast<size_t>(p) * 128 + i];
    }
    mean /= 2000.0;
    EXPECT_NEAR(mean, 0.0, 1e-10) << "interval " << i;
  }
}

TEST(DecomposeTest, DecompositionIsIdempotent) {
  const PathEnsemble ens = simulate(example_model(), make_grid(64), 500, 4);
  const ELDecomposition first = decompose(free_residual(ens));
  ResidualSamples centered;
  centered.grid = first.grid;
  centered.d = first.d;
  centered.m = first.m;
  centered.xi = first.N_samples;
  const ELDecomposition second = decompose(centered);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(second.A_at(i), 0.0, 1e-12);
}

TEST(DecomposeTest, RejectsSinglePath) {
  const PathEnsemble ens = simulate(wiener_model(1), make_grid(8), 1, 5);
  EXPECT_THROW(decompose(free_residual(ens)), std::invalid_argument);
}

TEST(ElVerdictTest, RejectsSmallEnsembles) {
  const PathEnsemble ens = simulate(wiener_model(1), make_grid(16), 999, 6);
  const ELDecomposition decomp = decompose(free_residual(ens));
  EXPECT_THROW(el_verdict(decomp, ens, 0.01), std::invalid_argument);
}

TEST(ElVerdictTest, LinearFeedbackLawViolatesCriticality) {
  // dX = dB + X dt: xi_dot = X, so N = X - E[X] fails increment
  // orthogonality decisively (X is not a martingale).
  const PathEnsemble ens = simulate(linear_drift_model(1.0), make_grid(128), 20000, 7);
  const ELVerdict verdict = el_verdict(decompose(free_residual(ens)), ens, 0.01);
  EXPECT_FALSE(verdict.satisfied);
  EXPECT_FALSE(verdict.test.pass);
  EXPECT_GT(verdict.test.max_abs_t, 2.0 * verdict.test.threshold);
}

TEST(ElVerdictTest, BenchmarkLawSatisfiesCriticality) {
  // xi_dot = Y = B + e^t: A tracks e^t and N tracks B, a true martingale.
  const TimeGrid grid = make_grid(256);
  const PathEnsemble ens = simulate(example_model(), grid, 20000, 8);
  const ELDecomposition decomp = decompose(free_residual(ens));
  double sup_dev = 0.0;
  for (int i = 0; i < 256; ++i) {
    sup_dev = std::max(sup_dev, std::abs(decomp.A_at(i) - std::exp(grid.times[i])));
  }
  EXPECT_LT(sup_dev, 0.05);

  const ELVerdict verdict = el_verdict(decomp, ens, 0.01);
  EXPECT_TRUE(verdict.satisfied) << "max |t| " << verdict.test.max_abs_t << " vs threshold "
                                 << verdict.test.threshold;
  // energy of A ~ int e^{2t} dt = (e^2 - 1)/2; energy of N ~ int t dt = 1/2.
  EXPECT_NEAR(verdict.energy_A, (std::exp(2.0) - 1.0) / 2.0, 0.15);
  EXPECT_NEAR(verdict.energy_N, 0.5, 0.05);
}

}  // namespace
}  // namespace semicrit
