#pragma once

// Uniform time grids on [0,1], discrete paths, Cameron-Martin arithmetic and
// ensemble (pathwise) averages. Derivatives hdot are piecewise constant on
// left-closed intervals [t_i, t_{i+1}) -- the left-endpoint convention used
// everywhere in this library.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace semicrit {

struct TimeGrid {
  int n_steps = 0;
  double dt = 0.0;
  std::vector<double> times;  // n_steps + 1 entries, times[i] = i / n_steps

  bool operator==(const TimeGrid& other) const {
    return n_steps == other.n_steps;
  }
};

TimeGrid make_grid(int n_steps);

// Node index for a grid time t in [0,1] (nearest node).
int node_index(const TimeGrid& grid, double t);
// Interval index for time t: the interval [t_i, t_{i+1}) containing t, with
// t = 1 mapped to the last interval n_steps - 1.
int interval_index(const TimeGrid& grid, double t);

// d-dimensional path sampled at the n_steps+1 grid nodes, row-major:
// values[i*d + c] is coordinate c at time times[i].
struct DiscretePath {
  TimeGrid grid;
  int d = 1;
  std::vector<double> values;

  double at(int i, int c = 0) const { return values[static_cast<size_t>(i) * d + c]; }
};

// Element of the Cameron-Martin space: h_t = int_0^t hdot_s ds with hdot
// piecewise constant, hdot[i*d + c] on [t_i, t_{i+1}).
struct CameronMartinPath {
  TimeGrid grid;
  int d = 1;
  std::vector<double> hdot;  // n_steps * d

  double at(int i, int c = 0) const { return hdot[static_cast<size_t>(i) * d + c]; }
};

// h_0 = 0, h_{i+1} = h_i + hdot_i * dt.
DiscretePath cumulative(std::span<const double> hdot, const TimeGrid& grid, int d = 1);
DiscretePath cumulative(const CameronMartinPath& h);

// <h,k>_H = sum_i <hdot_i, kdot_i> dt. Throws on grid/dimension mismatch.
double cm_inner(const CameronMartinPath& h, const CameronMartinPath& k);
double cm_norm(const CameronMartinPath& h);

// Coordinate-wise arithmetic means over a non-empty collection on a common
// grid. Summation is reference-shifted (first element as reference) so that a
// collection of identical elements averages to that element exactly.
CameronMartinPath ensemble_mean_path(const std::vector<CameronMartinPath>& hs);
DiscretePath ensemble_mean_path(const std::vector<DiscretePath>& paths);

// Empirical law of a semimartingale: m sampled paths with their per-step
// drift samples v (left endpoint) and dispersion samples alpha = sigma sigma^T.
// Flat row-major storage:
//   x[(p*(n+1) + i)*d + c], v[(p*n + i)*d + c], alpha[((p*n + i)*d + r)*d + c].
struct PathEnsemble {
  TimeGrid grid;
  int d = 1;
  int m_paths = 0;
  std::vector<double> x;      // m * (n+1) * d
  std::vector<double> v;      // m * n * d
  std::vector<double> alpha;  // m * n * d * d
  std::uint64_t seed = 0;
  std::string provenance;

  int n() const { return grid.n_steps; }
  double x_at(int p, int i, int c = 0) const {
    return x[(static_cast<size_t>(p) * (grid.n_steps + 1) + i) * d + c];
  }
  double v_at(int p, int i, int c = 0) const {
    return v[(static_cast<size_t>(p) * grid.n_steps + i) * d + c];
  }
  double alpha_at(int p, int i, int r = 0, int c = 0) const {
    return alpha[((static_cast<size_t>(p) * grid.n_steps + i) * d + r) * d + c];
  }
  std::span<const double> path_values(int p) const {
    return {x.data() + static_cast<size_t>(p) * (grid.n_steps + 1) * d,
            static_cast<size_t>(grid.n_steps + 1) * d};
  }
};

// Mean over paths of x / v, written as flat arrays ((n+1)*d resp. n*d).
// Reference-shifted summation as in ensemble_mean_path.
std::vector<double> ensemble_mean_x(const PathEnsemble& ens);
std::vector<double> ensemble_mean_v(const PathEnsemble& ens);

}  // namespace semicrit
