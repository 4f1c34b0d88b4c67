#include "semicrit/fbs_example.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace semicrit {

namespace {

constexpr double kTargetMean = std::numbers::e - 1.0;  // e - 1
constexpr double kTargetVar = 7.0 / 3.0;

// Drift cursor keeping the memory integral I as per-path state; O(1) per
// step. A fresh replay over any prefix reproduces the same outputs, which is
// what the adaptedness audit exercises.
class ExampleDriftCursor final : public PrefixFunctional {
 public:
  explicit ExampleDriftCursor(const TimeGrid& grid)
      : dt_(grid.dt), decay_(std::exp(-grid.dt)), exp_t_(grid.n_steps) {
    for (int i = 0; i < grid.n_steps; ++i) exp_t_[i] = std::exp(grid.times[i]);
  }
  void begin_path() override {
    integral_ = 0.0;
    next_i_ = 0;
  }
  void eval(int i, double, std::span<const double> values, std::span<double> out) override {
    if (i != next_i_) {
      throw std::logic_error("example drift: steps must be visited in order");
    }
    const double forcing = values[i] + exp_t_[i];
    out[0] = forcing - integral_;
    integral_ = decay_ * (integral_ + dt_ * forcing);
    ++next_i_;
  }

 private:
  double dt_;
  double decay_;
  std::vector<double> exp_t_;
  double integral_ = 0.0;
  int next_i_ = 0;
};

}  // namespace

SemimartingaleModel example_model() {
  SemimartingaleModel m;
  m.d = 1;
  m.descriptor = "exp-kernel-feedback-drift";
  m.initial_sampler = [](CounterRng&, std::span<double> out) { out[0] = 0.0; };
  m.drift = [](const TimeGrid& grid) -> std::unique_ptr<PrefixFunctional> {
    return std::make_unique<ExampleDriftCursor>(grid);
  };
  m.dispersion = stateless_functional(
      [](int, double, std::span<const double>, std::span<double> out) { out[0] = 1.0; });
  return m;
}

OraclePaths example_oracle(const NoiseBlock& noise, const TimeGrid& grid) {
  if (noise.d != 1) throw std::invalid_argument("example_oracle: dimension must be 1");
  if (noise.n != grid.n_steps) throw std::invalid_argument("example_oracle: grid mismatch");
  const int n = grid.n_steps;
  OraclePaths out;
  out.grid = grid;
  out.m = noise.m;
  out.x.resize(static_cast<size_t>(noise.m) * (n + 1));
  out.y.resize(out.x.size());
  for (int p = 0; p < noise.m; ++p) {
    double* xr = out.x.data() + static_cast<size_t>(p) * (n + 1);
    double* yr = out.y.data() + static_cast<size_t>(p) * (n + 1);
    double b = 0.0;       // B_{t_i}
    double ib = 0.0;      // left Riemann sum of B up to t_i
    for (int i = 0; i <= n; ++i) {
      const double et = std::exp(grid.times[i]);
      yr[i] = b + et;
      xr[i] = b + ib + et - 1.0;
      if (i < n) {
        ib += b * grid.dt;
        b += noise.at(p, i);
      }
    }
  }
  return out;
}

double target_density(double x) {
  const double z = x - kTargetMean;
  return std::sqrt(3.0 / (14.0 * std::numbers::pi)) * std::exp(-3.0 * z * z / 14.0);
}

double target_cdf(double x) {
  return normal_cdf((x - kTargetMean) / std::sqrt(kTargetVar));
}

MarginalSpec dirac_marginal(double value) {
  MarginalSpec spec;
  spec.name = "dirac(" + std::to_string(value) + ")";
  spec.is_dirac = true;
  spec.dirac_value = value;
  return spec;
}

MarginalSpec example_target_marginal() {
  MarginalSpec spec;
  spec.name = "gaussian(mean=e-1,var=7/3)";
  spec.cdf = target_cdf;
  return spec;
}

FbsReport fbs_verify(const PathEnsemble& ens, const QEMPotential& potential,
                     const MarginalSpec& nu0, const MarginalSpec& nu1, double alpha,
                     double qv_tol) {
  if (ens.d != 1) throw std::invalid_argument("fbs_verify: d = 1 ensembles only");
  if (ens.v.empty()) throw std::invalid_argument("fbs_verify: ensemble has no drift samples");
  const int n = ens.grid.n_steps;
  const int m = ens.m_paths;
  FbsReport report;

  // (a) endpoint marginals.
  if (nu0.is_dirac) {
    double max_dev = 0.0;
    for (int p = 0; p < m; ++p) {
      max_dev = std::max(max_dev, std::abs(ens.x_at(p, 0) - nu0.dirac_value));
    }
    report.initial_max_dev = max_dev;
    report.initial_ok = max_dev <= 1e-9;
  } else {
    std::vector<double> x0(m);
    for (int p = 0; p < m; ++p) x0[p] = ens.x_at(p, 0);
    const KsResult ks0 = ks_test(x0, nu0.cdf);
    report.initial_max_dev = ks0.statistic;
    report.initial_ok = ks0.p_value > alpha;
  }
  if (nu1.is_dirac) {
    double max_dev = 0.0;
    for (int p = 0; p < m; ++p) {
      max_dev = std::max(max_dev, std::abs(ens.x_at(p, n) - nu1.dirac_value));
    }
    report.marginal_ks.statistic = max_dev;
    report.marginal_ks.p_value = max_dev <= 1e-9 ? 1.0 : 0.0;
    report.marginal_ok = max_dev <= 1e-9;
  } else {
    std::vector<double> x1(m);
    for (int p = 0; p < m; ++p) x1[p] = ens.x_at(p, n);
    report.marginal_ks = ks_test(x1, nu1.cdf);
    report.marginal_ok = report.marginal_ks.p_value > alpha;
  }

  // Centered potential gradient at each step, shared by (b) and (d).
  std::vector<double> gradv(static_cast<size_t>(m) * n);
  {
    std::vector<double> g(1);
    for (int p = 0; p < m; ++p) {
      for (int i = 0; i < n; ++i) {
        const std::span<const double> x{
            ens.x.data() + (static_cast<size_t>(p) * (n + 1) + i), 1};
        potential.grad_V(x, g);
        gradv[static_cast<size_t>(p) * n + i] = g[0];
      }
    }
  }
  const std::vector<double> mean_v = ensemble_mean_v(ens);
  std::vector<double> mean_gradv(n, 0.0);
  {
    std::vector<double> acc(n, 0.0);
    for (int i = 0; i < n; ++i) mean_gradv[i] = gradv[i];
    for (int p = 1; p < m; ++p) {
      for (int i = 0; i < n; ++i) {
        acc[i] += gradv[static_cast<size_t>(p) * n + i] - mean_gradv[i];
      }
    }
    for (int i = 0; i < n; ++i) mean_gradv[i] += acc[i] / m;
  }

  // (b) backward condition: Z_i = (Y_i - E Y_i) - sum_{j<i} (grad V_j - E grad V_j) dt.
  {
    std::vector<double> z(static_cast<size_t>(m) * n);
    for (int p = 0; p < m; ++p) {
      double running = 0.0;
      for (int i = 0; i < n; ++i) {
        z[static_cast<size_t>(p) * n + i] = ens.v_at(p, i) - mean_v[i] - running;
        running += (gradv[static_cast<size_t>(p) * n + i] - mean_gradv[i]) * ens.grid.dt;
      }
    }
    report.backward_test =
        martingale_test(ens.grid, 1, m, z.data(), ens.x.data(), default_test_pairs(), alpha);
    report.backward_ok = report.backward_test.pass;
  }

  // (c) realized quadratic variation of M = X - X_0 - int Y dt vs int alpha dt.
  {
    double qv_acc = 0.0, alpha_acc = 0.0;
    for (int p = 0; p < m; ++p) {
      double running = 0.0, m_prev = 0.0, qv = 0.0, ai = 0.0;
      for (int i = 0; i < n; ++i) {
        running += ens.v_at(p, i) * ens.grid.dt;
        const double m_next = ens.x_at(p, i + 1) - ens.x_at(p, 0) - running;
        const double dm = m_next - m_prev;
        qv += dm * dm;
        m_prev = m_next;
        ai += ens.alpha_at(p, i) * ens.grid.dt;
      }
      qv_acc += qv;
      alpha_acc += ai;
    }
    report.qv_realized = qv_acc / m;
    report.qv_expected = alpha_acc / m;
    report.qv_error = std::abs(report.qv_realized - report.qv_expected);
    report.qv_ok = report.qv_error <= qv_tol * std::max(1.0, report.qv_expected);
  }

  // (d) integrability moments.
  {
    double my = 0.0, mg = 0.0;
    for (int p = 0; p < m; ++p) {
      double sy = 0.0, sg = 0.0;
      for (int i = 0; i < n; ++i) {
        const double y = ens.v_at(p, i);
        const double g = gradv[static_cast<size_t>(p) * n + i];
        sy += y * y;
        sg += g * g;
      }
      my += sy * ens.grid.dt;
      mg += sg * ens.grid.dt;
    }
    report.moment_y = my / m;
    report.moment_grad_v = mg / m;
    report.moments_ok = std::isfinite(report.moment_y) && std::isfinite(report.moment_grad_v);
  }

  report.verdict =
      report.initial_ok && report.marginal_ok && report.backward_ok && report.qv_ok &&
      report.moments_ok;
  return report;
}

}  // namespace semicrit
