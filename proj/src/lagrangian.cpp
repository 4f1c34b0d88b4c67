#include "semicrit/lagrangian.hpp"

#include <cmath>
#include <stdexcept>

namespace semicrit {

QEMPotential zero_potential() {
  QEMPotential p;
  p.kind = QEMPotential::Kind::zero;
  p.descriptor = "V=0";
  p.V = [](std::span<const double>) { return 0.0; };
  p.grad_V = [](std::span<const double>, std::span<double> out) {
    for (auto& g : out) g = 0.0;
  };
  return p;
}

QEMPotential quadratic_potential(double coeff) {
  QEMPotential p;
  p.kind = QEMPotential::Kind::quadratic;
  p.descriptor = "V=" + std::to_string(coeff) + "*|x|^2/2";
  p.quad_coeff = coeff;
  p.V = [coeff](std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return 0.5 * coeff * s;
  };
  p.grad_V = [coeff](std::span<const double> x, std::span<double> out) {
    for (size_t i = 0; i < x.size(); ++i) out[i] = coeff * x[i];
  };
  return p;
}

QEMPotential linear_potential(std::vector<double> coeff) {
  QEMPotential p;
  p.kind = QEMPotential::Kind::linear;
  p.descriptor = "V=<c,x>";
  p.lin_coeff = std::move(coeff);
  const auto c = p.lin_coeff;
  p.V = [c](std::span<const double> x) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += c[i] * x[i];
    return s;
  };
  p.grad_V = [c](std::span<const double> x, std::span<double> out) {
    (void)x;
    for (size_t i = 0; i < out.size(); ++i) out[i] = c[i];
  };
  return p;
}

QEMPotential custom_potential(
    std::string descriptor, std::function<double(std::span<const double>)> V,
    std::function<void(std::span<const double>, std::span<double>)> grad_V) {
  QEMPotential p;
  p.kind = QEMPotential::Kind::custom;
  p.descriptor = std::move(descriptor);
  p.V = std::move(V);
  p.grad_V = std::move(grad_V);
  return p;
}

Lagrangian make_qem(const QEMPotential& potential) {
  auto pot = std::make_shared<const QEMPotential>(potential);
  Lagrangian L;
  L.descriptor = "kinetic+potential[" + pot->descriptor + "]";
  L.qem = pot;
  L.eval = [pot](double, std::span<const double> x, std::span<const double> v,
                 std::span<const double>) {
    double kin = 0.0;
    for (double vi : v) kin += vi * vi;
    return 0.5 * kin + pot->V(x);
  };
  L.grad_x = [pot](double, std::span<const double> x, std::span<const double>,
                   std::span<const double>, std::span<double> out) { pot->grad_V(x, out); };
  L.grad_v = [](double, std::span<const double>, std::span<const double> v,
                std::span<const double>, std::span<double> out) {
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  };
  return L;
}

double directional_derivative(const Lagrangian& L, double t, std::span<const double> x,
                              std::span<const double> v, std::span<const double> a,
                              std::span<const double> dx, std::span<const double> dv) {
  const size_t d = x.size();
  std::vector<double> gx(d), gv(d);
  L.grad_x(t, x, v, a, gx);
  L.grad_v(t, x, v, a, gv);
  double acc = 0.0;
  for (size_t i = 0; i < d; ++i) acc += gx[i] * dx[i] + gv[i] * dv[i];
  return acc;
}

GradientCheckReport gradient_check(const Lagrangian& L,
                                   const std::vector<GradientCheckPoint>& points, double eps) {
  if (points.empty()) throw std::invalid_argument("gradient_check: no sample points");
  if (!(eps > 0.0)) throw std::invalid_argument("gradient_check: eps must be positive");
  GradientCheckReport report;
  for (const auto& pt : points) {
    const size_t d = pt.x.size();
    if (!std::isfinite(L.eval(pt.t, pt.x, pt.v, pt.a))) {
      ++report.points_skipped;
      continue;
    }
    std::vector<double> gx(d), gv(d);
    L.grad_x(pt.t, pt.x, pt.v, pt.a, gx);
    L.grad_v(pt.t, pt.x, pt.v, pt.a, gv);
    std::vector<double> xp = pt.x, vp = pt.v;
    for (size_t i = 0; i < d; ++i) {
      xp[i] = pt.x[i] + eps;
      const double fp = L.eval(pt.t, xp, pt.v, pt.a);
      xp[i] = pt.x[i] - eps;
      const double fm = L.eval(pt.t, xp, pt.v, pt.a);
      xp[i] = pt.x[i];
      const double fd = (fp - fm) / (2.0 * eps);
      const double err = std::abs(fd - gx[i]) / std::max(1.0, std::abs(gx[i]));
      report.max_rel_err_x = std::max(report.max_rel_err_x, err);

      vp[i] = pt.v[i] + eps;
      const double gp = L.eval(pt.t, pt.x, vp, pt.a);
      vp[i] = pt.v[i] - eps;
      const double gm = L.eval(pt.t, pt.x, vp, pt.a);
      vp[i] = pt.v[i];
      const double fdv = (gp - gm) / (2.0 * eps);
      const double errv = std::abs(fdv - gv[i]) / std::max(1.0, std::abs(gv[i]));
      report.max_rel_err_v = std::max(report.max_rel_err_v, errv);
    }
    ++report.points_checked;
  }
  return report;
}

}  // namespace semicrit
