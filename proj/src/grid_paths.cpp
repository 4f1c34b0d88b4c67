#include "semicrit/grid_paths.hpp"

#include <cmath>
#include <stdexcept>

namespace semicrit {

TimeGrid make_grid(int n_steps) {
  if (n_steps < 1) {
    throw std::invalid_argument("make_grid: n_steps must be >= 1");
  }
  TimeGrid g;
  g.n_steps = n_steps;
  g.dt = 1.0 / n_steps;
  g.times.resize(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) {
    g.times[i] = static_cast<double>(i) / n_steps;
  }
  return g;
}

int node_index(const TimeGrid& grid, double t) {
  int i = static_cast<int>(std::lround(t * grid.n_steps));
  if (i < 0 || i > grid.n_steps) {
    throw std::invalid_argument("node_index: time outside [0,1]");
  }
  return i;
}

int interval_index(const TimeGrid& grid, double t) {
  int i = node_index(grid, t);
  return i < grid.n_steps ? i : grid.n_steps - 1;
}

DiscretePath cumulative(std::span<const double> hdot, const TimeGrid& grid, int d) {
  if (hdot.size() != static_cast<size_t>(grid.n_steps) * d) {
    throw std::invalid_argument("cumulative: hdot length != n_steps * d");
  }
  DiscretePath out;
  out.grid = grid;
  out.d = d;
  out.values.assign(static_cast<size_t>(grid.n_steps + 1) * d, 0.0);
  for (int i = 0; i < grid.n_steps; ++i) {
    for (int c = 0; c < d; ++c) {
      out.values[(static_cast<size_t>(i) + 1) * d + c] =
          out.values[static_cast<size_t>(i) * d + c] + hdot[static_cast<size_t>(i) * d + c] * grid.dt;
    }
  }
  return out;
}

DiscretePath cumulative(const CameronMartinPath& h) {
  return cumulative(h.hdot, h.grid, h.d);
}

double cm_inner(const CameronMartinPath& h, const CameronMartinPath& k) {
  if (!(h.grid == k.grid) || h.d != k.d) {
    throw std::invalid_argument("cm_inner: grid or dimension mismatch");
  }
  double acc = 0.0;
  const size_t len = h.hdot.size();
  for (size_t j = 0; j < len; ++j) {
    acc += h.hdot[j] * k.hdot[j];
  }
  return acc * h.grid.dt;
}

double cm_norm(const CameronMartinPath& h) {
  return std::sqrt(cm_inner(h, h));
}

namespace {

// mean = ref + mean(x - ref): exact when all rows equal the reference row.
void shifted_mean(const std::vector<const double*>& rows, size_t len, std::vector<double>& out) {
  out.assign(rows[0], rows[0] + len);
  if (rows.size() == 1) return;
  std::vector<double> acc(len, 0.0);
  for (size_t p = 1; p < rows.size(); ++p) {
    for (size_t j = 0; j < len; ++j) {
      acc[j] += rows[p][j] - out[j];
    }
  }
  const double inv_m = 1.0 / static_cast<double>(rows.size());
  for (size_t j = 0; j < len; ++j) {
    out[j] += acc[j] * inv_m;
  }
}

}  // namespace

CameronMartinPath ensemble_mean_path(const std::vector<CameronMartinPath>& hs) {
  if (hs.empty()) {
    throw std::invalid_argument("ensemble_mean_path: empty collection");
  }
  for (const auto& h : hs) {
    if (!(h.grid == hs[0].grid) || h.d != hs[0].d) {
      throw std::invalid_argument("ensemble_mean_path: grid or dimension mismatch");
    }
  }
  std::vector<const double*> rows;
  rows.reserve(hs.size());
  for (const auto& h : hs) rows.push_back(h.hdot.data());
  CameronMartinPath out;
  out.grid = hs[0].grid;
  out.d = hs[0].d;
  shifted_mean(rows, hs[0].hdot.size(), out.hdot);
  return out;
}

DiscretePath ensemble_mean_path(const std::vector<DiscretePath>& paths) {
  if (paths.empty()) {
    throw std::invalid_argument("ensemble_mean_path: empty collection");
  }
  for (const auto& p : paths) {
    if (!(p.grid == paths[0].grid) || p.d != paths[0].d) {
      throw std::invalid_argument("ensemble_mean_path: grid or dimension mismatch");
    }
  }
  std::vector<const double*> rows;
  rows.reserve(paths.size());
  for (const auto& p : paths) rows.push_back(p.values.data());
  DiscretePath out;
  out.grid = paths[0].grid;
  out.d = paths[0].d;
  shifted_mean(rows, paths[0].values.size(), out.values);
  return out;
}

namespace {

std::vector<double> mean_rows(const std::vector<double>& data, int m, size_t row_len) {
  std::vector<const double*> rows;
  rows.reserve(m);
  for (int p = 0; p < m; ++p) rows.push_back(data.data() + static_cast<size_t>(p) * row_len);
  std::vector<double> out;
  shifted_mean(rows, row_len, out);
  return out;
}

}  // namespace

std::vector<double> ensemble_mean_x(const PathEnsemble& ens) {
  if (ens.m_paths < 1) throw std::invalid_argument("ensemble_mean_x: empty ensemble");
  return mean_rows(ens.x, ens.m_paths, static_cast<size_t>(ens.grid.n_steps + 1) * ens.d);
}

std::vector<double> ensemble_mean_v(const PathEnsemble& ens) {
  if (ens.m_paths < 1) throw std::invalid_argument("ensemble_mean_v: empty ensemble");
  return mean_rows(ens.v, ens.m_paths, static_cast<size_t>(ens.grid.n_steps) * ens.d);
}

}  // namespace semicrit
