#pragma once

// Decomposition of the criticality residual into its deterministic part
// A_t = E[xi_dot_t] and the centered remainder N = xi_dot - A, plus the
// statistical verdict: the law satisfies the criticality condition iff N
// passes the martingale increment-orthogonality test.

#include <vector>

#include "semicrit/action.hpp"
#include "semicrit/grid_paths.hpp"
#include "semicrit/stats.hpp"

namespace semicrit {

struct ELDecomposition {
  TimeGrid grid;
  int d = 1;
  int m = 0;
  std::vector<double> A;          // n * d, ensemble mean of xi_dot
  std::vector<double> N_samples;  // m * n * d, xi_dot - A
  double energy_A = 0.0;          // int |A|^2 dt
  double energy_N = 0.0;          // E int |N|^2 dt

  double A_at(int i, int c = 0) const { return A[static_cast<size_t>(i) * d + c]; }
};

// A is the interval-wise ensemble mean of the residual (reference-shifted
// summation, so a residual identical across paths yields N exactly zero).
// Requires >= 2 paths.
ELDecomposition decompose(const ResidualSamples& residual);

struct ELVerdict {
  MartingaleTestReport test;
  double energy_A = 0.0;
  double energy_N = 0.0;
  bool energies_finite = false;
  bool satisfied = false;  // test passed and energies finite
};

// Martingale test of N against the default functional family and pairs,
// coordinate-wise with Bonferroni across all cells. The deterministic part A
// is by construction the ensemble mean; determinism beyond that is exactly
// what the martingale test on N probes (a non-deterministic A would leak
// into N and fail it). Requires >= 1000 paths.
ELVerdict el_verdict(const ELDecomposition& decomp, const PathEnsemble& ens, double alpha);

}  // namespace semicrit
