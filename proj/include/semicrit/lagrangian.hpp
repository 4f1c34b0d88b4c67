#pragma once

// Regular Lagrangians L_t(x, v, a) with analytic partial gradients in x and
// v, the kinetic-plus-potential family L = |v|^2/2 + V(x), and finite-
// difference gradient self-checks. The dispersion argument `a` (d x d,
// row-major) is part of the signature but no shipped Lagrangian depends on it.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace semicrit {

// Potential V with analytic gradient. `kind` lets hot loops specialize the
// common closed forms; `custom` falls back to the callables (which are always
// populated and are the behavioral source of truth).
struct QEMPotential {
  enum class Kind { zero, quadratic, linear, custom };
  Kind kind = Kind::zero;
  std::string descriptor = "V=0";
  double quad_coeff = 0.0;        // quadratic: V(x) = quad_coeff * |x|^2 / 2
  std::vector<double> lin_coeff;  // linear: V(x) = <lin_coeff, x>
  std::function<double(std::span<const double>)> V;
  std::function<void(std::span<const double>, std::span<double>)> grad_V;
};

QEMPotential zero_potential();
QEMPotential quadratic_potential(double coeff);
QEMPotential linear_potential(std::vector<double> coeff);
QEMPotential custom_potential(std::string descriptor,
                              std::function<double(std::span<const double>)> V,
                              std::function<void(std::span<const double>, std::span<double>)> grad_V);

struct Lagrangian {
  std::string descriptor;
  std::function<double(double t, std::span<const double> x, std::span<const double> v,
                       std::span<const double> a)>
      eval;
  std::function<void(double t, std::span<const double> x, std::span<const double> v,
                     std::span<const double> a, std::span<double> out)>
      grad_x;
  std::function<void(double t, std::span<const double> x, std::span<const double> v,
                     std::span<const double> a, std::span<double> out)>
      grad_v;
  // Set for kinetic-plus-potential Lagrangians; hot loops use it to avoid
  // per-step std::function dispatch. Must agree with the callables (tested).
  std::shared_ptr<const QEMPotential> qem;
};

// L(t,x,v,a) = |v|^2/2 + V(x); grad_v = v, grad_x = grad V(x).
Lagrangian make_qem(const QEMPotential& potential);

// <grad_x, dx> + <grad_v, dv> at (t, x, v, a).
double directional_derivative(const Lagrangian& L, double t, std::span<const double> x,
                              std::span<const double> v, std::span<const double> a,
                              std::span<const double> dx, std::span<const double> dv);

struct GradientCheckPoint {
  double t = 0.0;
  std::vector<double> x, v, a;
};

struct GradientCheckReport {
  double max_rel_err_x = 0.0;
  double max_rel_err_v = 0.0;
  int points_checked = 0;
  int points_skipped = 0;  // non-finite eval
  bool pass(double tol) const { return max_rel_err_x < tol && max_rel_err_v < tol; }
};

// Central finite differences of eval vs the analytic gradients; relative
// error uses scale max(1, |analytic|) per component.
GradientCheckReport gradient_check(const Lagrangian& L,
                                   const std::vector<GradientCheckPoint>& points, double eps);

}  // namespace semicrit
