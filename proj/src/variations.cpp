#include "semicrit/variations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "semicrit/rng.hpp"

namespace semicrit {

namespace {

// Reference-shifted row mean of kdot (exact for identical rows).
std::vector<double> mean_kdot_rows(const std::vector<double>& kdot, int m, size_t row_len) {
  std::vector<double> out(kdot.begin(), kdot.begin() + row_len);
  std::vector<double> acc(row_len, 0.0);
  for (int p = 1; p < m; ++p) {
    const double* row = kdot.data() + static_cast<size_t>(p) * row_len;
    for (size_t j = 0; j < row_len; ++j) acc[j] += row[j] - out[j];
  }
  for (size_t j = 0; j < row_len; ++j) out[j] += acc[j] / m;
  return out;
}

double h_norm_of_mean(const std::vector<double>& mean_kdot, double dt) {
  double norm2 = 0.0;
  for (double g : mean_kdot) norm2 += g * g;
  return std::sqrt(norm2 * dt);
}

// Recomputes per-path endpoint and sup-norm of h from the kdot rows.
void refresh_h_stats(VariationSamples& vs) {
  const int n = vs.grid.n_steps;
  const int d = vs.d;
  vs.max_endpoint = 0.0;
  vs.max_sup_norm = 0.0;
  std::vector<double> h(d);
  for (int p = 0; p < vs.m; ++p) {
    const double* row = vs.kdot.data() + static_cast<size_t>(p) * n * d;
    std::fill(h.begin(), h.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        h[c] += row[static_cast<size_t>(i) * d + c] * vs.grid.dt;
        vs.max_sup_norm = std::max(vs.max_sup_norm, std::abs(h[c]));
      }
    }
    for (int c = 0; c < d; ++c) vs.max_endpoint = std::max(vs.max_endpoint, std::abs(h[c]));
  }
}

}  // namespace

DiscretePath VariationSamples::h_path(int p) const {
  const std::span<const double> row{kdot.data() + static_cast<size_t>(p) * grid.n_steps * d,
                                    static_cast<size_t>(grid.n_steps) * d};
  return cumulative(row, grid, d);
}

VariationSamples eval_variation(const VariationProcess& k, const PathEnsemble& ens) {
  const int n = ens.grid.n_steps;
  const int d = ens.d;
  const int m = ens.m_paths;
  const double C = k.clip_bound;
  if (!(C > 0.0)) throw std::invalid_argument("eval_variation: clip_bound must be positive");

  VariationSamples vs;
  vs.grid = ens.grid;
  vs.d = d;
  vs.m = m;
  vs.clip_bound = C;
  vs.kdot.resize(static_cast<size_t>(m) * n * d);

  auto fn = k.kdot(ens.grid);
  std::vector<double> raw(d), h(d);
  for (int p = 0; p < m; ++p) {
    double* row = vs.kdot.data() + static_cast<size_t>(p) * n * d;
    fn->begin_path();
    std::fill(h.begin(), h.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      fn->eval(i, ens.grid.times[i], ens.path_values(p).first(static_cast<size_t>(i + 1) * d),
               raw);
      for (int c = 0; c < d; ++c) {
        if (!std::isfinite(raw[c])) {
          throw std::runtime_error("eval_variation: non-finite kdot at path " + std::to_string(p) +
                                   " step " + std::to_string(i));
        }
        // Clamp h into [-C, C]; the effective kdot is the clamped increment.
        const double next = std::clamp(h[c] + raw[c] * ens.grid.dt, -C, C);
        row[static_cast<size_t>(i) * d + c] = (next - h[c]) / ens.grid.dt;
        h[c] = next;
      }
    }
    if (k.endpoint_correction) {
      // h_1 sits in h[c]; absorbing it into the last interval uses only
      // information available by time t_{n-1}, so adaptedness is preserved.
      for (int c = 0; c < d; ++c) {
        row[(static_cast<size_t>(n) - 1) * d + c] -= h[c] / ens.grid.dt;
      }
    }
  }
  refresh_h_stats(vs);
  vs.mean_norm = h_norm_of_mean(mean_kdot_rows(vs.kdot, m, static_cast<size_t>(n) * d), ens.grid.dt);
  return vs;
}

VariationSamples project_average(const VariationSamples& vs) {
  if (vs.m < 1) throw std::invalid_argument("project_average: empty samples");
  VariationSamples out = vs;
  const size_t row_len = static_cast<size_t>(vs.grid.n_steps) * vs.d;
  const std::vector<double> mean = mean_kdot_rows(vs.kdot, vs.m, row_len);
  for (int p = 0; p < vs.m; ++p) {
    double* row = out.kdot.data() + static_cast<size_t>(p) * row_len;
    for (size_t j = 0; j < row_len; ++j) row[j] -= mean[j];
  }
  out.mean_norm = h_norm_of_mean(mean_kdot_rows(out.kdot, out.m, row_len), vs.grid.dt);
  refresh_h_stats(out);
  return out;
}

VariationCheckReport check_variation(const VariationSamples& vs, double tol) {
  VariationCheckReport report;
  report.max_endpoint = vs.max_endpoint;
  report.max_sup_norm = vs.max_sup_norm;
  report.mean_norm = vs.mean_norm;
  report.endpoints_zero = vs.max_endpoint <= tol;
  report.bounded = vs.max_sup_norm <= vs.clip_bound + tol;
  report.mean_zero = vs.mean_norm <= tol;
  return report;
}

PathEnsemble perturb(const PathEnsemble& ens, const VariationSamples& vs, double eps) {
  if (!(ens.grid == vs.grid) || ens.d != vs.d || ens.m_paths != vs.m) {
    throw std::invalid_argument("perturb: ensemble/variation mismatch");
  }
  PathEnsemble out = ens;
  out.provenance = ens.provenance + "+perturbed(eps=" + std::to_string(eps) + ")";
  const int n = ens.grid.n_steps;
  const int d = ens.d;
  std::vector<double> h(d);
  for (int p = 0; p < ens.m_paths; ++p) {
    const double* krow = vs.kdot.data() + static_cast<size_t>(p) * n * d;
    double* xrow = out.x.data() + static_cast<size_t>(p) * (n + 1) * d;
    double* vrow = out.v.data() + static_cast<size_t>(p) * n * d;
    std::fill(h.begin(), h.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        vrow[static_cast<size_t>(i) * d + c] += eps * krow[static_cast<size_t>(i) * d + c];
        h[c] += krow[static_cast<size_t>(i) * d + c] * ens.grid.dt;
        xrow[(static_cast<size_t>(i) + 1) * d + c] += eps * h[c];
      }
    }
  }
  return out;
}

namespace {

constexpr double kPi = std::numbers::pi;

// Deterministic profile: grid-exact mean-zero g, same on every path.
class DeterministicGProfile final : public PrefixFunctional {
 public:
  DeterministicGProfile(std::vector<double> g, int d) : g_(std::move(g)), d_(d) {}
  void eval(int i, double, std::span<const double>, std::span<double> out) override {
    for (int c = 0; c < d_; ++c) out[c] = g_[i];
  }

 private:
  std::vector<double> g_;
  int d_;
};

// Path-dependent member: g(t) * phi(X at frozen node s_idx), with g zero
// before s_idx, so the prefix is only read once the frozen time has passed.
class FrozenTimeProfile final : public PrefixFunctional {
 public:
  enum class Phi { clip_x, tanh_x, clip_sin3x };
  FrozenTimeProfile(std::vector<double> g, int s_idx, Phi phi, double clip, int d)
      : g_(std::move(g)), s_idx_(s_idx), phi_(phi), clip_(clip), d_(d) {}
  void eval(int i, double, std::span<const double> values, std::span<double> out) override {
    if (i < s_idx_) {
      for (int c = 0; c < d_; ++c) out[c] = 0.0;
      return;
    }
    for (int c = 0; c < d_; ++c) {
      const double x = values[static_cast<size_t>(s_idx_) * d_ + c];
      out[c] = g_[i] * apply_phi(x);
    }
  }

 private:
  double apply_phi(double x) const {
    switch (phi_) {
      case Phi::clip_x:
        return std::clamp(x, -clip_, clip_);
      case Phi::tanh_x:
        return clip_ * std::tanh(x / clip_);
      case Phi::clip_sin3x:
        return std::clamp(std::sin(3.0 * x), -clip_, clip_);
    }
    return 0.0;
  }
  std::vector<double> g_;
  int s_idx_;
  Phi phi_;
  double clip_;
  int d_;
};

// Demean on [from, to) so the support sum is exactly zero on the grid, then
// normalize to unit integral of |g| (so |h| <= clip structurally).
void demean_and_normalize(std::vector<double>& g, int from, int to, double dt) {
  double mean = 0.0;
  for (int i = from; i < to; ++i) mean += g[i];
  mean /= (to - from);
  for (int i = from; i < to; ++i) g[i] -= mean;
  double mass = 0.0;
  for (int i = from; i < to; ++i) mass += std::abs(g[i]) * dt;
  if (mass > 0.0) {
    for (int i = from; i < to; ++i) g[i] /= mass;
  }
}

}  // namespace

std::vector<VariationProcess> random_variation_bank(std::uint64_t seed, int size,
                                                    double clip_bound) {
  if (size < 1) throw std::invalid_argument("random_variation_bank: size must be >= 1");
  if (!(clip_bound > 0.0)) {
    throw std::invalid_argument("random_variation_bank: clip_bound must be positive");
  }
  std::vector<VariationProcess> bank;
  bank.reserve(size);
  for (int j = 0; j < size; ++j) {
    CounterRng rng(seed, StreamTag::bank, static_cast<std::uint64_t>(j));
    VariationProcess vp;
    vp.clip_bound = clip_bound;
    if (j % 2 == 0) {
      const int kind = static_cast<int>(rng.next_u32() % 3);
      if (kind == 0) {
        const int freq = 1 + static_cast<int>(rng.next_u32() % 4);
        vp.descriptor = "det:sine(freq=" + std::to_string(freq) + ")";
        vp.kdot = [freq](const TimeGrid& grid) -> std::unique_ptr<PrefixFunctional> {
          std::vector<double> g(grid.n_steps);
          for (int i = 0; i < grid.n_steps; ++i) g[i] = std::sin(2.0 * kPi * freq * grid.times[i]);
          demean_and_normalize(g, 0, grid.n_steps, grid.dt);
          return std::make_unique<DeterministicGProfile>(std::move(g), 1);
        };
      } else if (kind == 1) {
        const double center = 0.2 + 0.6 * rng.uniform();
        const double width = 0.1 + 0.2 * rng.uniform();
        vp.descriptor = "det:hat(center=" + std::to_string(center) +
                        ",width=" + std::to_string(width) + ")";
        vp.kdot = [center, width](const TimeGrid& grid) -> std::unique_ptr<PrefixFunctional> {
          std::vector<double> g(grid.n_steps);
          for (int i = 0; i < grid.n_steps; ++i) {
            g[i] = std::max(0.0, 1.0 - std::abs(grid.times[i] - center) / width);
          }
          demean_and_normalize(g, 0, grid.n_steps, grid.dt);
          return std::make_unique<DeterministicGProfile>(std::move(g), 1);
        };
      } else {
        const int power = 1 + static_cast<int>(rng.next_u32() % 3);
        vp.descriptor = "det:poly(power=" + std::to_string(power) + ")";
        vp.kdot = [power](const TimeGrid& grid) -> std::unique_ptr<PrefixFunctional> {
          std::vector<double> g(grid.n_steps);
          for (int i = 0; i < grid.n_steps; ++i) g[i] = std::pow(grid.times[i], power);
          demean_and_normalize(g, 0, grid.n_steps, grid.dt);
          return std::make_unique<DeterministicGProfile>(std::move(g), 1);
        };
      }
    } else {
      const double s_bar = rng.next_u32() % 2 == 0 ? 0.25 : 0.5;
      const int kind = static_cast<int>(rng.next_u32() % 2);
      const int phi_kind = static_cast<int>(rng.next_u32() % 3);
      const auto phi = static_cast<FrozenTimeProfile::Phi>(phi_kind);
      const char* phi_names[] = {"clip_x", "tanh_x", "clip_sin3x"};
      const double mid_frac = kind == 1 ? 0.3 + 0.4 * rng.uniform() : 0.5;
      const int freq = kind == 0 ? 1 + static_cast<int>(rng.next_u32() % 3) : 0;
      const std::string shape = kind == 0 ? "sine(freq=" + std::to_string(freq)
                                          : "halves(mid=" + std::to_string(mid_frac);
      vp.descriptor = "pd:" + shape + ",s_bar=" + std::to_string(s_bar) +
                      ",phi=" + phi_names[phi_kind] + ")";
      const double clip = clip_bound;
      vp.kdot = [s_bar, kind, freq, mid_frac, phi,
                 clip](const TimeGrid& grid) -> std::unique_ptr<PrefixFunctional> {
        const int n = grid.n_steps;
        const int s_idx = node_index(grid, s_bar);
        std::vector<double> g(n, 0.0);
        if (kind == 0) {
          for (int i = s_idx; i < n; ++i) {
            const double u = (grid.times[i] - s_bar) / (1.0 - s_bar);
            g[i] = std::sin(2.0 * kPi * freq * u);
          }
        } else {
          const int mid = s_idx + static_cast<int>(mid_frac * (n - s_idx));
          for (int i = s_idx; i < n; ++i) g[i] = i < mid ? 1.0 : -1.0;
        }
        demean_and_normalize(g, s_idx, n, grid.dt);
        return std::make_unique<FrozenTimeProfile>(std::move(g), s_idx, phi, clip, 1);
      };
    }
    bank.push_back(std::move(vp));
  }
  return bank;
}

VariationProcess designed_control_variation(double clip_bound) {
  VariationProcess vp;
  vp.clip_bound = clip_bound;
  vp.descriptor = "designed:halves(s_bar=0.5)*clip(x_half)";
  const double clip = clip_bound;
  vp.kdot = [clip](const TimeGrid& grid) -> std::unique_ptr<PrefixFunctional> {
    const int n = grid.n_steps;
    const int s_idx = node_index(grid, 0.5);
    const int mid = node_index(grid, 0.75);
    std::vector<double> g(n, 0.0);
    for (int i = s_idx; i < n; ++i) g[i] = i < mid ? 1.0 : -1.0;
    return std::make_unique<FrozenTimeProfile>(std::move(g), s_idx,
                                               FrozenTimeProfile::Phi::clip_x, clip, 1);
  };
  return vp;
}

}  // namespace semicrit
