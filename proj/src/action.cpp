#include "semicrit/action.hpp"

#include <cmath>
#include <stdexcept>

#include "semicrit/stats.hpp"

namespace semicrit {

namespace {

// Kinetic-plus-potential fast path mirroring make_qem's arithmetic exactly
// (same operations in the same order, so results are bit-identical to the
// generic callables).
inline double qem_eval(const QEMPotential& pot, std::span<const double> x,
                       std::span<const double> v) {
  double kin = 0.0;
  for (double vi : v) kin += vi * vi;
  switch (pot.kind) {
    case QEMPotential::Kind::zero:
      return 0.5 * kin + 0.0;
    case QEMPotential::Kind::quadratic: {
      double s = 0.0;
      for (double xi : x) s += xi * xi;
      return 0.5 * kin + 0.5 * pot.quad_coeff * s;
    }
    case QEMPotential::Kind::linear: {
      double s = 0.0;
      for (size_t i = 0; i < x.size(); ++i) s += pot.lin_coeff[i] * x[i];
      return 0.5 * kin + s;
    }
    case QEMPotential::Kind::custom:
      return 0.5 * kin + pot.V(x);
  }
  return 0.0;
}

inline void qem_grad_x(const QEMPotential& pot, std::span<const double> x, std::span<double> out) {
  switch (pot.kind) {
    case QEMPotential::Kind::zero:
      for (auto& g : out) g = 0.0;
      return;
    case QEMPotential::Kind::quadratic:
      for (size_t i = 0; i < x.size(); ++i) out[i] = pot.quad_coeff * x[i];
      return;
    case QEMPotential::Kind::linear:
      for (size_t i = 0; i < out.size(); ++i) out[i] = pot.lin_coeff[i];
      return;
    case QEMPotential::Kind::custom:
      pot.grad_V(x, out);
      return;
  }
}

struct EnsembleView {
  const PathEnsemble& ens;
  int n, d;
  std::span<const double> x(int p, int i) const {
    return {ens.x.data() + (static_cast<size_t>(p) * (n + 1) + i) * d, static_cast<size_t>(d)};
  }
  std::span<const double> v(int p, int i) const {
    return {ens.v.data() + (static_cast<size_t>(p) * n + i) * d, static_cast<size_t>(d)};
  }
  std::span<const double> a(int p, int i) const {
    return {ens.alpha.data() + ((static_cast<size_t>(p) * n + i) * d) * d,
            static_cast<size_t>(d) * d};
  }
};

void check_finite(double value, int p, int i) {
  if (!std::isfinite(value)) {
    throw std::runtime_error("action: non-finite Lagrangian value at path " + std::to_string(p) +
                             " step " + std::to_string(i));
  }
}

}  // namespace

MonteCarloValue action(const PathEnsemble& ens, const Lagrangian& L) {
  const EnsembleView view{ens, ens.grid.n_steps, ens.d};
  const int m = ens.m_paths;
  std::vector<double> per_path(m);
  const QEMPotential* pot = L.qem ? L.qem.get() : nullptr;
  for (int p = 0; p < m; ++p) {
    double acc = 0.0;
    for (int i = 0; i < view.n; ++i) {
      const double value = pot != nullptr
                               ? qem_eval(*pot, view.x(p, i), view.v(p, i))
                               : L.eval(ens.grid.times[i], view.x(p, i), view.v(p, i), view.a(p, i));
      check_finite(value, p, i);
      acc += value;
    }
    per_path[p] = acc * ens.grid.dt;
  }
  MonteCarloValue out;
  out.value = sample_mean(per_path);
  out.se = m >= 2 ? standard_error(per_path) : 0.0;
  return out;
}

ResidualSamples el_residual(const PathEnsemble& ens, const Lagrangian& L) {
  const EnsembleView view{ens, ens.grid.n_steps, ens.d};
  const int m = ens.m_paths;
  const int n = view.n;
  const int d = view.d;
  ResidualSamples res;
  res.grid = ens.grid;
  res.d = d;
  res.m = m;
  res.xi.resize(static_cast<size_t>(m) * n * d);
  const QEMPotential* pot = L.qem ? L.qem.get() : nullptr;
  std::vector<double> running(d), gx(d), gv(d);
  for (int p = 0; p < m; ++p) {
    std::fill(running.begin(), running.end(), 0.0);
    double* row = res.xi.data() + static_cast<size_t>(p) * n * d;
    for (int i = 0; i < n; ++i) {
      if (pot != nullptr) {
        qem_grad_x(*pot, view.x(p, i), gx);
        const auto vv = view.v(p, i);
        for (int c = 0; c < d; ++c) gv[c] = vv[c];
      } else {
        L.grad_x(ens.grid.times[i], view.x(p, i), view.v(p, i), view.a(p, i), gx);
        L.grad_v(ens.grid.times[i], view.x(p, i), view.v(p, i), view.a(p, i), gv);
      }
      for (int c = 0; c < d; ++c) {
        const double value = gv[c] - running[c];
        check_finite(value, p, i);
        row[static_cast<size_t>(i) * d + c] = value;
        running[c] += gx[c] * ens.grid.dt;
      }
    }
  }
  return res;
}

MonteCarloValue gateaux_analytic(const ResidualSamples& residual, const VariationSamples& vs) {
  if (!(residual.grid == vs.grid) || residual.d != vs.d || residual.m != vs.m) {
    throw std::invalid_argument("gateaux_analytic: residual/variation mismatch");
  }
  const size_t row_len = static_cast<size_t>(residual.grid.n_steps) * residual.d;
  std::vector<double> per_path(residual.m);
  for (int p = 0; p < residual.m; ++p) {
    const double* xr = residual.xi.data() + static_cast<size_t>(p) * row_len;
    const double* kr = vs.kdot.data() + static_cast<size_t>(p) * row_len;
    double acc = 0.0;
    for (size_t j = 0; j < row_len; ++j) acc += xr[j] * kr[j];
    per_path[p] = acc * residual.grid.dt;
  }
  MonteCarloValue out;
  out.value = sample_mean(per_path);
  out.se = residual.m >= 2 ? standard_error(per_path) : 0.0;
  return out;
}

double gateaux_fd(const PathEnsemble& ens, const Lagrangian& L, const VariationSamples& vs,
                  double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("gateaux_fd: eps must be positive");
  if (!(ens.grid == vs.grid) || ens.d != vs.d || ens.m_paths != vs.m) {
    throw std::invalid_argument("gateaux_fd: ensemble/variation mismatch");
  }
  const EnsembleView view{ens, ens.grid.n_steps, ens.d};
  const int m = ens.m_paths;
  const int n = view.n;
  const int d = view.d;
  const QEMPotential* pot = L.qem ? L.qem.get() : nullptr;
  // Per-path streaming of X + eps h and v + eps kdot for both signs; the
  // arithmetic matches action(perturb(...)) value-for-value.
  double acc_plus = 0.0, acc_minus = 0.0;
  std::vector<double> h(d), xp(d), xm(d), vp(d), vm(d);
  for (int p = 0; p < m; ++p) {
    const double* krow = vs.kdot.data() + static_cast<size_t>(p) * n * d;
    std::fill(h.begin(), h.end(), 0.0);
    double sp = 0.0, sm = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto x = view.x(p, i);
      const auto vv = view.v(p, i);
      for (int c = 0; c < d; ++c) {
        const double k = krow[static_cast<size_t>(i) * d + c];
        xp[c] = x[c] + eps * h[c];
        xm[c] = x[c] + (-eps) * h[c];
        vp[c] = vv[c] + eps * k;
        vm[c] = vv[c] + (-eps) * k;
      }
      double lp, lm;
      if (pot != nullptr) {
        lp = qem_eval(*pot, xp, vp);
        lm = qem_eval(*pot, xm, vm);
      } else {
        lp = L.eval(ens.grid.times[i], xp, vp, view.a(p, i));
        lm = L.eval(ens.grid.times[i], xm, vm, view.a(p, i));
      }
      check_finite(lp, p, i);
      check_finite(lm, p, i);
      sp += lp;
      sm += lm;
      for (int c = 0; c < d; ++c) h[c] += krow[static_cast<size_t>(i) * d + c] * ens.grid.dt;
    }
    acc_plus += sp * ens.grid.dt;
    acc_minus += sm * ens.grid.dt;
  }
  const double mean_plus = acc_plus / m;
  const double mean_minus = acc_minus / m;
  return (mean_plus - mean_minus) / (2.0 * eps);
}

CriticalityReport criticality_test(const PathEnsemble& ens, const Lagrangian& L,
                                   const std::vector<VariationProcess>& bank,
                                   const CriticalityPolicy& policy) {
  if (bank.empty()) throw std::invalid_argument("criticality_test: empty bank");
  const ResidualSamples residual = el_residual(ens, L);
  CriticalityReport report;
  report.critical = true;
  for (const auto& member : bank) {
    const VariationSamples projected = project_average(eval_variation(member, ens));
    const MonteCarloValue ds = gateaux_analytic(residual, projected);
    CriticalityRow row;
    row.variation_id = member.descriptor;
    row.ds_analytic = ds.value;
    row.se = ds.se;
    row.ds_fd = gateaux_fd(ens, L, projected, policy.fd_eps);
    row.critical = std::abs(ds.value) <= std::max(policy.tol_abs, 3.0 * ds.se);
    report.critical = report.critical && row.critical;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace semicrit
