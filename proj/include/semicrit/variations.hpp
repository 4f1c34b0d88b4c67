#pragma once

// Adapted variation processes k (Cameron-Martin-valued path perturbations),
// their evaluation on ensembles with sup-norm capping and exact endpoint-zero
// enforcement, the average-preserving projection j(h) = h - E[h], pushforward
// perturbation of ensembles, and a reproducible bank of test variations.

#include <cstdint>
#include <string>
#include <vector>

#include "semicrit/grid_paths.hpp"
#include "semicrit/semimartingale.hpp"

namespace semicrit {

struct VariationProcess {
  std::string descriptor;
  double clip_bound = 10.0;         // structural sup-norm cap C
  bool endpoint_correction = true;  // enforce h_1 = 0 exactly per path
  PrefixFunctionalFactory kdot;     // adapted, out: d values per step
};

struct VariationSamples {
  TimeGrid grid;
  int d = 1;
  int m = 0;
  std::vector<double> kdot;  // m * n * d, same layout as PathEnsemble::v
  double clip_bound = 0.0;
  double max_sup_norm = 0.0;     // max over paths/times/coords of |h|
  double max_endpoint = 0.0;     // max over paths of |h_1| after correction
  double mean_norm = 0.0;        // |E[h]|_H of the ensemble average

  double at(int p, int i, int c = 0) const {
    return kdot[(static_cast<size_t>(p) * grid.n_steps + i) * d + c];
  }
  // One path's h (cumulative integral), materialized on demand.
  DiscretePath h_path(int p) const;
};

// Evaluates kdot on every path prefix, walks h forward clamping it into
// [-C, C] coordinate-wise (adapted: uses past values only; a no-op when the
// bound never binds), then zeroes h_1 exactly by absorbing the residue into
// the last interval (again adapted: the residue is known by time t_{n-1}).
VariationSamples eval_variation(const VariationProcess& k, const PathEnsemble& ens);

// j(h) = h - E[h]: subtracts the interval-wise ensemble mean kdot from every
// path. Reference-shifted mean makes j annihilate path-independent
// (deterministic) variations exactly.
VariationSamples project_average(const VariationSamples& vs);

struct VariationCheckReport {
  bool endpoints_zero = false;
  bool bounded = false;
  bool mean_zero = false;
  double max_endpoint = 0.0;
  double max_sup_norm = 0.0;
  double mean_norm = 0.0;
  bool all(bool require_mean_zero = true) const {
    return endpoints_zero && bounded && (!require_mean_zero || mean_zero);
  }
};

VariationCheckReport check_variation(const VariationSamples& vs, double tol);

// Pushforward perturbation: path values become X + eps*h, drift samples
// v + eps*kdot; dispersion samples unchanged.
PathEnsemble perturb(const PathEnsemble& ens, const VariationSamples& vs, double eps);

// Reproducible mix of deterministic profiles (sine / hat / polynomial, grid-
// exact mean-zero) and path-dependent members g(t) * phi(X at a frozen time
// s_bar) with g supported and mean-zero on [s_bar, 1) and phi saturated at
// the clip bound. Members alternate deterministic / path-dependent.
std::vector<VariationProcess> random_variation_bank(std::uint64_t seed, int size,
                                                    double clip_bound);

// The fixed diagnostic variation used against the linear-feedback control
// law: kdot_t = (1 on [1/2,3/4) , -1 on [3/4,1)) * clip(X_{1/2}).
VariationProcess designed_control_variation(double clip_bound = 10.0);

}  // namespace semicrit
