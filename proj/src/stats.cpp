#include "semicrit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semicrit {

double sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("sample_mean: empty input");
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_variance: need >= 2 values");
  const double mu = sample_mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return acc / static_cast<double>(xs.size() - 1);
}

double standard_error(std::span<const double> xs) {
  return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  }
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}.
double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18 && k >= 100) break;
  }
  const double q = 2.0 * sum;
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace

KsResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::vector<double> xs(samples.begin(), samples.end());
  for (double x : xs) {
    if (std::isnan(x)) throw std::invalid_argument("ks_test: NaN sample");
  }
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d_stat = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    const double upper = (static_cast<double>(i) + 1.0) / n - f;
    const double lower = f - static_cast<double>(i) / n;
    d_stat = std::max({d_stat, upper, lower});
  }
  KsResult out;
  out.statistic = d_stat;
  out.p_value = kolmogorov_tail(std::sqrt(n) * d_stat);
  return out;
}

namespace {

struct Functional {
  std::string name;
  // Value of phi for path p at prefix time s (node index si, interval index zi).
  std::function<double(int p, int si, int zi, int coord)> eval;
};

}  // namespace

MartingaleTestReport martingale_test(const TimeGrid& grid, int d, int m, const double* z,
                                     const double* w,
                                     const std::vector<std::pair<double, double>>& pairs,
                                     double alpha, double clip_bound) {
  if (m < 1000) throw std::invalid_argument("martingale_test: need >= 1000 paths");
  if (pairs.empty()) throw std::invalid_argument("martingale_test: no pairs");
  for (const auto& [s, t] : pairs) {
    if (!(s < t)) throw std::invalid_argument("martingale_test: pair with s >= t");
  }
  const int n = grid.n_steps;
  const auto z_at = [&](int p, int i, int c) {
    return z[(static_cast<size_t>(p) * n + i) * d + c];
  };
  const auto w_at = [&](int p, int i, int c) {
    return w[(static_cast<size_t>(p) * (n + 1) + i) * d + c];
  };
  const auto clip = [&](double x) { return std::clamp(x, -clip_bound, clip_bound); };

  std::vector<Functional> fams;
  fams.push_back({"one", [](int, int, int, int) { return 1.0; }});
  if (w != nullptr) {
    for (int c = 0; c < d; ++c) {
      fams.push_back({"w_s[" + std::to_string(c) + "]",
                      [&, c](int p, int si, int, int) { return w_at(p, si, c); }});
    }
  }
  fams.push_back({"z_s", [&](int p, int, int zi, int coord) { return z_at(p, zi, coord); }});
  fams.push_back({"z_s^2", [&](int p, int, int zi, int coord) {
                    const double v = z_at(p, zi, coord);
                    return v * v;
                  }});
  if (w != nullptr) {
    fams.push_back({"clip(w_s*z_s)", [&](int p, int si, int zi, int coord) {
                      return clip(w_at(p, si, coord % d) * z_at(p, zi, coord));
                    }});
  }

  MartingaleTestReport report;
  report.pairs = pairs;
  report.alpha = alpha;
  for (const auto& f : fams) report.functionals.push_back(f.name);

  const int n_cells = static_cast<int>(pairs.size()) * static_cast<int>(fams.size()) * d;
  report.threshold = normal_quantile(1.0 - alpha / (2.0 * n_cells));

  std::vector<double> vals(m);
  for (const auto& [s, t] : pairs) {
    const int si = node_index(grid, s);
    const int zs = interval_index(grid, s);
    const int zt = interval_index(grid, t);
    for (const auto& f : fams) {
      for (int c = 0; c < d; ++c) {
        for (int p = 0; p < m; ++p) {
          const double incr = z_at(p, zt, c) - z_at(p, zs, c);
          vals[p] = incr * f.eval(p, si, zs, c);
        }
        MartingaleCell cell;
        cell.s = s;
        cell.t = t;
        cell.functional = f.name;
        cell.coord = c;
        cell.mean = sample_mean(vals);
        const double var = sample_variance(vals);
        cell.se = std::sqrt(var / m);
        if (cell.se == 0.0) {
          if (cell.mean == 0.0) {
            cell.t_stat = 0.0;
          } else {
            cell.skipped = true;
            ++report.skipped_cells;
          }
        } else {
          cell.t_stat = cell.mean / cell.se;
        }
        if (!cell.skipped) {
          report.max_abs_t = std::max(report.max_abs_t, std::abs(cell.t_stat));
        }
        report.cells.push_back(cell);
      }
    }
  }
  report.pass = report.max_abs_t < report.threshold;
  return report;
}

MartingaleTestReport martingale_test(const PathEnsemble& ens, const std::vector<double>& z,
                                     const std::vector<std::pair<double, double>>& pairs,
                                     double alpha, double clip_bound) {
  if (z.size() != static_cast<size_t>(ens.m_paths) * ens.grid.n_steps * ens.d) {
    throw std::invalid_argument("martingale_test: z size mismatch");
  }
  return martingale_test(ens.grid, ens.d, ens.m_paths, z.data(), ens.x.data(), pairs, alpha,
                         clip_bound);
}

}  // namespace semicrit
