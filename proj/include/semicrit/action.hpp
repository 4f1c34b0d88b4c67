#pragma once

// The action functional S = E[int_0^1 L_t(X_t, v_t, alpha_t) dt], the
// criticality residual xi_dot_i = grad_v L_i - sum_{j<i} grad_x L_j dt (left
// Riemann sums throughout), analytic and common-random-number finite-
// difference Gateaux derivatives, and the criticality battery over a bank of
// projected variations.

#include <string>
#include <vector>

#include "semicrit/grid_paths.hpp"
#include "semicrit/lagrangian.hpp"
#include "semicrit/variations.hpp"

namespace semicrit {

struct MonteCarloValue {
  double value = 0.0;
  double se = 0.0;  // standard error of the path mean
};

// Mean over paths of sum_i L(t_i, X_i, v_i, alpha_i) dt. Throws on a
// non-finite Lagrangian value, naming path and step.
MonteCarloValue action(const PathEnsemble& ens, const Lagrangian& L);

struct ResidualSamples {
  TimeGrid grid;
  int d = 1;
  int m = 0;
  std::vector<double> xi;  // m * n * d, interval-indexed like drift samples

  double at(int p, int i, int c = 0) const {
    return xi[(static_cast<size_t>(p) * grid.n_steps + i) * d + c];
  }
};

ResidualSamples el_residual(const PathEnsemble& ens, const Lagrangian& L);

// delta S = E[<xi, k>_H] = mean over paths of sum_i <xi_dot_i, kdot_i> dt.
MonteCarloValue gateaux_analytic(const ResidualSamples& residual, const VariationSamples& vs);

// Central difference (S(X+eps k) - S(X-eps k)) / (2 eps) on the SAME ensemble
// (common random numbers). Streams the perturbation per path; numerically
// identical to action(perturb(ens, vs, +/-eps)). Requires eps > 0.
double gateaux_fd(const PathEnsemble& ens, const Lagrangian& L, const VariationSamples& vs,
                  double eps);

struct CriticalityPolicy {
  double tol_abs = 0.02;  // |delta S| <= max(tol_abs, 3 SE) counts as zero
  double fd_eps = 1e-3;
};

struct CriticalityRow {
  std::string variation_id;
  double ds_analytic = 0.0;
  double se = 0.0;
  double ds_fd = 0.0;
  bool critical = false;
};

struct CriticalityReport {
  std::vector<CriticalityRow> rows;
  bool critical = false;  // all rows critical
};

// For each bank member: eval_variation, project_average, then both Gateaux
// derivatives against the ensemble's residual.
CriticalityReport criticality_test(const PathEnsemble& ens, const Lagrangian& L,
                                   const std::vector<VariationProcess>& bank,
                                   const CriticalityPolicy& policy = {});

}  // namespace semicrit
