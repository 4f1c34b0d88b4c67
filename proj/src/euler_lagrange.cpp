#include "semicrit/euler_lagrange.hpp"

#include <cmath>
#include <stdexcept>

namespace semicrit {

ELDecomposition decompose(const ResidualSamples& residual) {
  if (residual.m < 2) throw std::invalid_argument("decompose: need >= 2 paths");
  const int n = residual.grid.n_steps;
  const int d = residual.d;
  const int m = residual.m;
  const size_t row_len = static_cast<size_t>(n) * d;

  ELDecomposition out;
  out.grid = residual.grid;
  out.d = d;
  out.m = m;

  // Reference-shifted mean over paths.
  out.A.assign(residual.xi.begin(), residual.xi.begin() + row_len);
  {
    std::vector<double> acc(row_len, 0.0);
    for (int p = 1; p < m; ++p) {
      const double* row = residual.xi.data() + static_cast<size_t>(p) * row_len;
      for (size_t j = 0; j < row_len; ++j) acc[j] += row[j] - out.A[j];
    }
    for (size_t j = 0; j < row_len; ++j) out.A[j] += acc[j] / m;
  }

  out.N_samples.resize(residual.xi.size());
  for (int p = 0; p < m; ++p) {
    const double* row = residual.xi.data() + static_cast<size_t>(p) * row_len;
    double* nrow = out.N_samples.data() + static_cast<size_t>(p) * row_len;
    for (size_t j = 0; j < row_len; ++j) nrow[j] = row[j] - out.A[j];
  }

  double ea = 0.0;
  for (size_t j = 0; j < row_len; ++j) ea += out.A[j] * out.A[j];
  out.energy_A = ea * residual.grid.dt;

  double en = 0.0;
  for (int p = 0; p < m; ++p) {
    const double* nrow = out.N_samples.data() + static_cast<size_t>(p) * row_len;
    double acc = 0.0;
    for (size_t j = 0; j < row_len; ++j) acc += nrow[j] * nrow[j];
    en += acc * residual.grid.dt;
  }
  out.energy_N = en / m;
  return out;
}

ELVerdict el_verdict(const ELDecomposition& decomp, const PathEnsemble& ens, double alpha) {
  if (decomp.m < 1000) throw std::invalid_argument("el_verdict: need >= 1000 paths");
  if (!(decomp.grid == ens.grid) || decomp.d != ens.d || decomp.m != ens.m_paths) {
    throw std::invalid_argument("el_verdict: decomposition/ensemble mismatch");
  }
  ELVerdict verdict;
  verdict.test = martingale_test(ens.grid, ens.d, ens.m_paths, decomp.N_samples.data(),
                                 ens.x.data(), default_test_pairs(), alpha);
  verdict.energy_A = decomp.energy_A;
  verdict.energy_N = decomp.energy_N;
  verdict.energies_finite = std::isfinite(decomp.energy_A) && std::isfinite(decomp.energy_N);
  verdict.satisfied = verdict.test.pass && verdict.energies_finite;
  return verdict;
}

}  // namespace semicrit
