#pragma once

// Statistical utilities: sample moments, normal distribution helpers, the
// one-sample Kolmogorov-Smirnov test, and the martingale increment-
// orthogonality test (standardized correlations of process increments with
// adapted functionals of the path prefix).

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semicrit/grid_paths.hpp"

namespace semicrit {

double sample_mean(std::span<const double> xs);
// Unbiased (ddof = 1) sample variance; requires >= 2 values.
double sample_variance(std::span<const double> xs);
double standard_error(std::span<const double> xs);

double normal_cdf(double x);
// Inverse standard normal CDF, computed by bisection on normal_cdf
// (deterministic, no approximation constants). Requires 0 < p < 1.
double normal_quantile(double p);

struct KsResult {
  double statistic = 0.0;  // D = sup |F_emp - F|
  double p_value = 1.0;    // asymptotic Kolmogorov distribution
};

// One-sample KS test of `samples` against a monotone CDF. D is computed for
// any n >= 1; the p-value uses the asymptotic series (>= 100 terms) and is
// only meaningful for moderate n. Throws on NaN samples.
KsResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf);

// One cell of the martingale test: pair (s,t), functional id, coordinate.
struct MartingaleCell {
  double s = 0.0;
  double t = 0.0;
  std::string functional;
  int coord = 0;
  double mean = 0.0;
  double se = 0.0;
  double t_stat = 0.0;
  bool skipped = false;  // zero-variance cell with nonzero mean
};

struct MartingaleTestReport {
  std::vector<std::pair<double, double>> pairs;
  std::vector<std::string> functionals;
  std::vector<MartingaleCell> cells;
  double max_abs_t = 0.0;
  double threshold = 0.0;  // two-sided Gaussian, Bonferroni over all cells
  double alpha = 0.0;
  bool pass = false;
  int skipped_cells = 0;
};

inline const std::vector<std::pair<double, double>>& default_test_pairs() {
  static const std::vector<std::pair<double, double>> pairs = {
      {0.25, 0.5}, {0.5, 0.75}, {0.75, 1.0}, {0.25, 1.0}};
  return pairs;
}

// Tests E[(Z_t - Z_s) * phi(prefix up to s)] = 0 for the functional family
// phi in {1, W_s (each coordinate), Z_s, Z_s^2, clip(W_s . Z_s)} over the
// given (s,t) pairs, coordinate-wise in Z, Bonferroni-corrected at level
// alpha across all cells.
//
// z: interval-indexed samples, m x n x d (value on [t_i, t_{i+1})); time 1
// maps to index n-1. w: optional node-indexed path samples, m x (n+1) x d;
// pass nullptr to drop the W-based functionals. A zero-variance cell passes
// with t = 0 when its mean is zero and is otherwise skipped and flagged.
MartingaleTestReport martingale_test(const TimeGrid& grid, int d, int m, const double* z,
                                     const double* w,
                                     const std::vector<std::pair<double, double>>& pairs,
                                     double alpha, double clip_bound = 5.0);

// Convenience overload for an ensemble-adjacent process stored per path.
MartingaleTestReport martingale_test(const PathEnsemble& ens, const std::vector<double>& z,
                                     const std::vector<std::pair<double, double>>& pairs,
                                     double alpha, double clip_bound = 5.0);

}  // namespace semicrit
